#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

#include "persuade/baselines.hpp"
#include "persuade/errors.hpp"
#include "persuade/oracle.hpp"
#include "persuade/policy.hpp"
#include "persuade/problem.hpp"
#include "persuade/rational.hpp"
#include "persuade/simulate.hpp"

namespace {

using namespace persuade;
using ordered_json = nlohmann::ordered_json;

struct Options {
    std::string problem_path;
    std::string format = "text";
    int digits = 12;
    bool exact_only = false;
    std::uint64_t seed = 12345;
    int threads = 0;

    std::string q_text;  // cutoff override; empty = compute q*
    std::size_t curve = 0;

    std::size_t np = 256, nw = 64;             // exact property-check grid
    std::size_t oracle_np = 120, oracle_nw = 40;
    double tol = 1e-6;
    std::size_t max_iters = 500;
    bool oracle = false;
    bool refine = false;
    double gap_budget = 0.01;
    std::string dump_grid;

    std::string policy = "optimal";
    std::size_t paths = 10000;
    std::size_t horizon = 60;
    std::size_t tree_depth = 0;
    std::size_t trace_paths = 0;
};

std::string dec(const Rat& x, const Options& o) { return rat_decimal(x, o.digits); }

// "num/den (decimal)" in text mode; integers and --exact stay bare.
std::string show(const Rat& x, const Options& o) {
    std::string s = rat_str(x);
    if (!o.exact_only && x.get_den() != 1) s += " (" + dec(x, o) + ")";
    return s;
}

std::string show_iv(const Interval& iv) {
    return "[" + rat_str(iv.lo) + ", " + rat_str(iv.hi) + "]";
}

std::string fmt(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::string fmt_short(double v, const Options& o) {
    char b[64];
    std::snprintf(b, sizeof b, "%.*g", o.digits, v);
    return b;
}

ordered_json iv_json(const Interval& iv) {
    return ordered_json{{"lo", rat_str(iv.lo)}, {"hi", rat_str(iv.hi)}};
}

ordered_json split_json(const Problem& p, const PolicyStep& step) {
    ordered_json arr = ordered_json::array();
    for (const SplitOutcome& b : step)
        arr.push_back(ordered_json{{"prob", rat_str(b.prob)},
                                   {"posterior", rat_str(b.posterior)},
                                   {"promise", rat_str(b.promised_w)},
                                   {"action", p.actions[b.action]}});
    return arr;
}

void print_split_text(const Problem& p, const PolicyStep& step, const Options& o) {
    for (const SplitOutcome& b : step)
        std::cout << "  prob " << show(b.prob, o) << " -> posterior " << show(b.posterior, o)
                  << ", promise " << show(b.promised_w, o) << ", action '"
                  << p.actions[b.action] << "'\n";
}

void print_trivial_notice(const Problem& p, const Options& o) {
    const Rat val = p.v_star(p.prior);
    const Rat agent = p.u_star(p.prior);
    if (o.format == "json") {
        ordered_json out;
        out["trivial"] = true;
        out["policy"] = "constant";
        out["target_action"] = p.target_action();
        out["prior"] = rat_str(p.prior);
        out["value"] = rat_str(val);
        out["value_decimal"] = rat_double(val);
        out["agent_value"] = rat_str(agent);
        std::cout << out.dump(2) << '\n';
    } else if (o.format == "csv") {
        std::cout << "key,exact,decimal\n"
                  << "trivial,1,\n"
                  << "value," << rat_str(val) << ',' << dec(val, o) << '\n'
                  << "agent_value," << rat_str(agent) << ',' << dec(agent, o) << '\n';
    } else {
        std::cout << "trivial instance: '" << p.target_action()
                  << "' is statically optimal at every belief\n"
                  << "policy: constant recommendation, no disclosure ever\n"
                  << "value = " << show(val, o) << ", agent value = " << show(agent, o) << '\n';
    }
}

Problem load_normalized(const Options& o) {
    return normalize(validate(load_problem(o.problem_path)));
}

Rat cutoff_for(const Analysis& an, const Options& o) {
    return o.q_text.empty() ? compute_q_star(an) : parse_rat(o.q_text);
}

std::string cutoff_label(const Options& o) { return o.q_text.empty() ? "q*" : "q"; }

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const Options& o) {
    const Problem p = load_normalized(o);
    if (p.trivial) {
        print_trivial_notice(p, o);
        return 0;
    }
    const Analysis an = analyze(p);
    const Rat& p0 = an.problem.prior;
    const Rat m0 = an.env.eval_m(p0);
    const Rat M0 = an.env.eval_M(p0);
    const Rat bw0 = an.bold_w_at(p0);
    const Rat q = cutoff_for(an, o);
    const PolicySolver pol(an, q);
    const StatePoint s0{p0, m0};
    const Rat value = pol.value(s0);
    const auto td = t_delta(an, p0);
    PolicyStep first;
    if (pol.classify(s0) != Region::Absorbed) first = pol.step(s0);

    const ThresholdLadder& lad = an.ladder;
    if (o.format == "json") {
        ordered_json out;
        out["command"] = "solve";
        out["problem"] = o.problem_path;
        out["trivial"] = false;
        out["target_action"] = p.target_action();
        out["relabeled"] = p.relabeled;
        out["prior"] = rat_str(p0);
        out["discount"] = rat_str(p.discount);
        out["m_prior"] = rat_str(m0);
        out["M_prior"] = rat_str(M0);
        out["bold_w_prior"] = rat_str(bw0);
        out["P"] = an.env.P ? iv_json(*an.env.P) : ordered_json(nullptr);
        out["Q1"] = iv_json(lad.Q1());
        out["k_star"] = lad.k_star ? ordered_json(*lad.k_star) : ordered_json(nullptr);
        out["Q_inf"] = lad.Q_inf ? iv_json(*lad.Q_inf) : ordered_json(nullptr);
        out["cutoff"] = rat_str(q);
        out["cutoff_is_q_star"] = o.q_text.empty();
        out["value"] = rat_str(value);
        out["value_decimal"] = rat_double(value);
        out["agent_value"] = rat_str(m0);
        out["T_delta"] = td ? ordered_json(*td) : ordered_json(nullptr);
        out["initial_split"] = split_json(p, first);
        std::cout << out.dump(2) << '\n';
    } else if (o.format == "csv") {
        std::cout << "key,exact,decimal\n";
        auto row = [&](const char* k, const Rat& x) {
            std::cout << k << ',' << rat_str(x) << ',' << dec(x, o) << '\n';
        };
        row("prior", p0);
        row("discount", p.discount);
        row("m_prior", m0);
        row("M_prior", M0);
        row("bold_w_prior", bw0);
        row("q1_lo", lad.Q1().lo);
        row("q1_hi", lad.Q1().hi);
        row("cutoff", q);
        row("value", value);
        row("agent_value", m0);
        std::cout << "t_delta," << (td ? std::to_string(*td) : std::string("unbounded"))
                  << ",\n";
    } else {
        std::cout << "problem: " << o.problem_path << '\n'
                  << "actions: " << p.actions.size() << ", target '" << p.target_action()
                  << "', relabeled: " << (p.relabeled ? "yes" : "no") << '\n'
                  << "prior p0 = " << show(p0, o) << ", discount delta = " << show(p.discount, o)
                  << '\n'
                  << "m(p0) = " << show(m0, o) << ", M(p0) = " << show(M0, o)
                  << ", bold_w(p0) = " << show(bw0, o) << '\n'
                  << "P (target statically optimal): "
                  << (an.env.P ? show_iv(*an.env.P) : "empty") << '\n'
                  << "Q1 = " << show_iv(lad.Q1()) << '\n';
        if (lad.k_star) std::cout << "ladder depth k* = " << *lad.k_star << '\n';
        if (lad.Q_inf) std::cout << "Q_inf = " << show_iv(*lad.Q_inf) << '\n';
        std::cout << cutoff_label(o) << " = " << show(q, o) << '\n'
                  << "V(p0, m(p0)) = " << show(value, o) << '\n'
                  << "agent value = " << show(m0, o) << '\n';
        if (td)
            std::cout << "T_delta(p0) = " << *td << '\n';
        else
            std::cout << "T_delta(p0) = unbounded (no full disclosure on path)\n";
        if (!first.empty()) {
            std::cout << "initial split at (" << rat_str(p0) << ", " << rat_str(m0) << "):\n";
            print_split_text(p, first, o);
        } else {
            std::cout << "start state is absorbing: constant action forever\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

int cmd_trace(const Options& o) {
    const Problem p = load_normalized(o);
    if (p.trivial) {
        print_trivial_notice(p, o);
        return 0;
    }
    const Analysis an = analyze(p);
    const Rat q = cutoff_for(an, o);
    const ThresholdLadder& lad = an.ladder;

    struct CurveRow {
        Rat p, m, M, bw, V;
    };
    std::vector<CurveRow> curve;
    if (o.curve > 0) {
        const PolicySolver pol(an, q);
        for (std::size_t i = 0; i <= o.curve; ++i) {
            const Rat pp = rat(static_cast<long>(i), static_cast<long>(o.curve));
            const Rat mm = an.env.eval_m(pp);
            curve.push_back({pp, mm, an.env.eval_M(pp), an.bold_w_at(pp),
                             pol.value({pp, mm})});
        }
    }

    if (o.format == "csv") {
        if (!curve.empty()) {
            std::cout << "p,m,M,bold_w,V\n";
            for (const CurveRow& r : curve)
                std::cout << rat_str(r.p) << ',' << rat_str(r.m) << ',' << rat_str(r.M) << ','
                          << rat_str(r.bw) << ',' << rat_str(r.V) << '\n';
        } else {
            std::cout << "level,lo,hi\n";
            for (std::size_t k = 0; k < lad.levels.size(); ++k)
                std::cout << k + 1 << ',' << rat_str(lad.levels[k].lo) << ','
                          << rat_str(lad.levels[k].hi) << '\n';
        }
        return 0;
    }
    if (o.format == "json") {
        ordered_json out;
        out["command"] = "trace";
        out["problem"] = o.problem_path;
        ordered_json kinks = ordered_json::array();
        for (const auto& k : an.env.m.kinks) {
            ordered_json kj{{"p", rat_str(k.p)}, {"m", rat_str(k.value)}};
            kj["piece_action"] = k.piece_action == PiecewiseLinearConvex::npos
                                     ? ordered_json(nullptr)
                                     : ordered_json(p.actions[k.piece_action]);
            kinks.push_back(kj);
        }
        out["m_kinks"] = kinks;
        out["M_line"] = {rat_str(an.env.M_line[0]), rat_str(an.env.M_line[1])};
        out["u_star_line"] = {rat_str(an.env.u_star_line[0]), rat_str(an.env.u_star_line[1])};
        out["P"] = an.env.P ? iv_json(*an.env.P) : ordered_json(nullptr);
        ordered_json ladder = ordered_json::array();
        for (std::size_t k = 0; k < lad.levels.size(); ++k)
            ladder.push_back(ordered_json{{"level", k + 1},
                                          {"lo", rat_str(lad.levels[k].lo)},
                                          {"hi", rat_str(lad.levels[k].hi)}});
        out["ladder"] = ladder;
        out["k_star"] = lad.k_star ? ordered_json(*lad.k_star) : ordered_json(nullptr);
        out["Q_inf"] = lad.Q_inf ? iv_json(*lad.Q_inf) : ordered_json(nullptr);
        out["reached_fixed_point"] = lad.reached_fixed_point;
        out["cutoff"] = rat_str(q);
        out["cutoff_is_q_star"] = o.q_text.empty();
        if (!curve.empty()) {
            ordered_json cj = ordered_json::array();
            for (const CurveRow& r : curve)
                cj.push_back(ordered_json{{"p", rat_str(r.p)},
                                          {"m", rat_str(r.m)},
                                          {"M", rat_str(r.M)},
                                          {"bold_w", rat_str(r.bw)},
                                          {"V", rat_str(r.V)},
                                          {"V_decimal", rat_double(r.V)}});
            out["curve"] = cj;
        }
        std::cout << out.dump(2) << '\n';
        return 0;
    }

    std::cout << "best-reply envelope m (kinks):\n";
    for (const auto& k : an.env.m.kinks) {
        std::cout << "  p = " << show(k.p, o) << ": m = " << show(k.value, o);
        if (k.piece_action != PiecewiseLinearConvex::npos)
            std::cout << "  (piece action '" << p.actions[k.piece_action] << "')";
        std::cout << '\n';
    }
    std::cout << "full-information line M: M(0) = " << show(an.env.M_line[0], o)
              << ", M(1) = " << show(an.env.M_line[1], o) << '\n'
              << "target line u*: u*(0) = " << show(an.env.u_star_line[0], o)
              << ", u*(1) = " << show(an.env.u_star_line[1], o) << '\n'
              << "P (target statically optimal): "
              << (an.env.P ? show_iv(*an.env.P) : "empty") << '\n'
              << "obedience ladder:\n";
    for (std::size_t k = 0; k < lad.levels.size(); ++k)
        std::cout << "  Q^" << k + 1 << " = " << show_iv(lad.levels[k]) << '\n';
    if (lad.k_star) std::cout << "k* = " << *lad.k_star << " (deepest nonempty level)\n";
    if (lad.Q_inf) std::cout << "Q_inf = " << show_iv(*lad.Q_inf) << '\n';
    std::cout << "fixed point reached exactly: " << (lad.reached_fixed_point ? "yes" : "no")
              << '\n'
              << cutoff_label(o) << " = " << show(q, o) << '\n';
    if (!curve.empty()) {
        std::cout << "value curve (p, m, M, bold_w, V):\n";
        for (const CurveRow& r : curve)
            std::cout << "  " << rat_str(r.p) << ": m = " << rat_str(r.m) << ", M = "
                      << rat_str(r.M) << ", bold_w = " << rat_str(r.bw) << ", V = "
                      << show(r.V, o) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

int cmd_compare(const Options& o) {
    const Problem p = load_normalized(o);
    if (p.trivial) {
        print_trivial_notice(p, o);
        return 0;
    }
    const Analysis an = analyze(p);
    const Rat q = compute_q_star(an);
    const PolicySolver pol(an, q);
    const Rat m0 = an.env.eval_m(p.prior);
    const Rat v_opt = pol.value({p.prior, m0});

    const BaselineResult kg = kg_value(an);
    const BaselineResult rnd = random_disclosure(an);
    const BaselineResult del = delayed_disclosure(an);
    const BaselineResult fb = first_best(an);

    auto split_str = [](const std::vector<std::pair<Rat, Rat>>& split) {
        std::string s = "split:";
        for (const auto& [w, post] : split) s += " " + rat_str(w) + "->" + rat_str(post);
        return s;
    };
    struct Row {
        std::string name;
        Rat v, u;
        std::string params;
    };
    const std::vector<Row> rows = {
        {"optimal", v_opt, m0, "q* = " + rat_str(q)},
        {"kg", kg.principal_value, kg.agent_value, split_str(kg.split)},
        {"random", rnd.principal_value, rnd.agent_value, "alpha = " + rat_str(*rnd.alpha)},
        {"delayed", del.principal_value, del.agent_value,
         del.unbounded ? std::string("never discloses") : "T* = " + std::to_string(*del.T_star)},
        {"first_best", fb.principal_value, fb.agent_value,
         "alpha0 = " + rat_str(fb.alphas->first) + "; alpha1 = " + rat_str(fb.alphas->second)},
    };

    if (o.format == "json") {
        ordered_json out;
        out["command"] = "compare";
        out["problem"] = o.problem_path;
        out["prior"] = rat_str(p.prior);
        ordered_json arr = ordered_json::array();
        for (const Row& r : rows)
            arr.push_back(ordered_json{{"policy", r.name},
                                       {"principal", rat_str(r.v)},
                                       {"principal_decimal", rat_double(r.v)},
                                       {"agent", rat_str(r.u)},
                                       {"agent_decimal", rat_double(r.u)},
                                       {"parameters", r.params}});
        out["policies"] = arr;
        std::cout << out.dump(2) << '\n';
    } else if (o.format == "csv") {
        std::cout << "policy,principal_exact,principal_decimal,agent_exact,agent_decimal,"
                     "parameters\n";
        for (const Row& r : rows)
            std::cout << r.name << ',' << rat_str(r.v) << ',' << dec(r.v, o) << ','
                      << rat_str(r.u) << ',' << dec(r.u, o) << ',' << r.params << '\n';
    } else {
        std::vector<std::array<std::string, 4>> cells = {
            {"policy", "principal value", "agent value", "parameters"}};
        for (const Row& r : rows) cells.push_back({r.name, show(r.v, o), show(r.u, o), r.params});
        std::array<std::size_t, 4> width{};
        for (const auto& row : cells)
            for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
        for (const auto& row : cells) {
            for (std::size_t c = 0; c < 4; ++c) {
                std::cout << row[c];
                if (c + 1 < 4) std::cout << std::string(width[c] - row[c].size() + 2, ' ');
            }
            std::cout << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct OracleRun {
    std::size_t np, nw;
    ConvergenceReport report;
    double grid_value = 0.0;
    double gap = 0.0;
};

OracleRun run_oracle(const Analysis& an, std::size_t np, std::size_t nw, double exact,
                     const Options& o, Grid* keep = nullptr) {
    OracleRun r{np, nw, {}, 0.0, 0.0};
    Grid g = make_grid(an, np, nw);
    g = value_iterate(an, g, o.tol, o.max_iters, &r.report);
    r.grid_value = grid_value_at(g, an.problem.prior, an.env.eval_m(an.problem.prior));
    r.gap = std::abs(r.grid_value - exact);
    if (keep) *keep = std::move(g);
    return r;
}

void dump_grid_csv(const Grid& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SolverError(Errc::IoError, "cannot write '" + path + "'");
    out << "i,j,p,w,V\n";
    for (std::size_t i = 0; i < g.ps.size(); ++i)
        for (std::size_t j = 0; j <= g.nw; ++j)
            out << i << ',' << j << ',' << rat_str(g.ps[i]) << ',' << rat_str(g.w_node(i, j))
                << ',' << fmt(g.V[i][j]) << '\n';
}

int cmd_verify(const Options& o) {
    const Problem p = load_normalized(o);
    if (p.trivial) {
        print_trivial_notice(p, o);
        return 0;
    }
    const Analysis an = analyze(p);
    const Rat q = cutoff_for(an, o);
    const VerifyReport rep = verify_optimality(an, q, o.np, o.nw);
    bool ok = rep.pass();

    const bool want_oracle = o.oracle || o.refine || !o.dump_grid.empty();
    std::optional<OracleRun> coarse, fine;
    std::optional<bool> refine_ok;
    Rat exact_value(0);
    // Value iteration stops once a sweep moves the table by less than tol,
    // leaving a bias of at most tol*d/(1-d) that grid refinement cannot
    // shrink; the ratio test only has to explain the part above that floor.
    const double d = rat_double(an.delta());
    const double iter_tail = o.tol * d / (1.0 - d);
    if (want_oracle) {
        const PolicySolver pol(an, q);
        exact_value = pol.value({p.prior, an.env.eval_m(p.prior)});
        Grid kept;
        coarse = run_oracle(an, o.oracle_np, o.oracle_nw, rat_double(exact_value), o, &kept);
        ok = ok && coarse->gap <= o.gap_budget;
        if (!o.dump_grid.empty()) dump_grid_csv(kept, o.dump_grid);
        if (o.refine) {
            fine = run_oracle(an, 2 * o.oracle_np, 2 * o.oracle_nw, rat_double(exact_value), o);
            refine_ok = fine->gap <= 0.6 * coarse->gap + iter_tail;
            ok = ok && *refine_ok;
        }
    }

    auto check_json = [](const VerifyCheck& c) {
        return ordered_json{{"ok", c.ok},
                            {"worst", rat_str(c.worst)},
                            {"at", ordered_json{{"p", rat_str(c.where.p)},
                                                {"w", rat_str(c.where.w)}}}};
    };
    auto oracle_json = [&](const OracleRun& r) {
        return ordered_json{{"np", r.np},
                            {"nw", r.nw},
                            {"iterations", r.report.iterations},
                            {"final_delta", r.report.final_delta},
                            {"recheck_failures", r.report.recheck_failures},
                            {"grid_value", r.grid_value},
                            {"exact_value", rat_double(exact_value)},
                            {"gap", r.gap}};
    };

    if (o.format == "json") {
        ordered_json out;
        out["command"] = "verify";
        out["problem"] = o.problem_path;
        out["cutoff"] = rat_str(q);
        out["cutoff_is_q_star"] = o.q_text.empty();
        out["grid"] = ordered_json{{"np", o.np}, {"nw", o.nw}};
        out["states_checked"] = rep.states_checked;
        out["concavity"] = check_json(rep.concavity);
        out["monotonicity"] = check_json(rep.monotonicity);
        out["q1_inequality"] = check_json(rep.q1_inequality);
        if (coarse) {
            out["oracle"] = oracle_json(*coarse);
            out["gap_budget"] = o.gap_budget;
        }
        if (fine) {
            out["refined"] = oracle_json(*fine);
            out["refined_pass"] = *refine_ok;
        }
        out["pass"] = ok;
        std::cout << out.dump(2) << '\n';
    } else if (o.format == "csv") {
        std::cout << "check,ok,worst\n"
                  << "concavity," << rep.concavity.ok << ',' << rat_str(rep.concavity.worst)
                  << '\n'
                  << "monotonicity," << rep.monotonicity.ok << ','
                  << rat_str(rep.monotonicity.worst) << '\n'
                  << "q1_inequality," << rep.q1_inequality.ok << ',' << rat_str(rep.q1_inequality.worst)
                  << '\n';
        if (coarse) std::cout << "oracle_gap," << (coarse->gap <= o.gap_budget) << ','
                              << fmt(coarse->gap) << '\n';
        if (fine) std::cout << "refined_gap," << *refine_ok << ',' << fmt(fine->gap) << '\n';
        std::cout << "pass," << ok << ",\n";
    } else {
        std::cout << "cutoff: " << cutoff_label(o) << " = " << show(q, o) << '\n'
                  << "exact property checks on a " << o.np << "x" << o.nw << " state grid ("
                  << rep.states_checked << " states):\n";
        auto line = [&](const char* name, const VerifyCheck& c) {
            std::cout << "  " << name << (c.ok ? "ok" : "FAIL");
            if (!c.ok)
                std::cout << "  worst " << show(c.worst, o) << " at (" << rat_str(c.where.p)
                          << ", " << rat_str(c.where.w) << ")";
            std::cout << '\n';
        };
        line("concavity       ", rep.concavity);
        line("monotonicity    ", rep.monotonicity);
        line("q1 inequality   ", rep.q1_inequality);
        if (coarse) {
            std::cout << "oracle: " << coarse->np << "x" << coarse->nw << " grid, tol " << o.tol
                      << ", " << coarse->report.iterations << " sweeps, final residual "
                      << fmt_short(coarse->report.final_delta, o) << ", recheck failures "
                      << coarse->report.recheck_failures << '\n'
                      << "  V_grid = " << fmt_short(coarse->grid_value, o) << ", exact = "
                      << fmt_short(rat_double(exact_value), o) << ", gap = "
                      << fmt_short(coarse->gap, o) << " (budget " << o.gap_budget << ") "
                      << (coarse->gap <= o.gap_budget ? "ok" : "FAIL") << '\n';
        }
        if (fine)
            std::cout << "refined: " << fine->np << "x" << fine->nw << " grid, gap = "
                      << fmt_short(fine->gap, o) << " vs 0.6 x coarse + iteration tail = "
                      << fmt_short(0.6 * coarse->gap + iter_tail, o) << " "
                      << (*refine_ok ? "ok" : "FAIL") << '\n';
        std::cout << "verification: " << (ok ? "PASS" : "FAIL") << '\n';
    }
    return ok ? 0 : 3;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

SimPolicy build_policy(const Analysis& an, const Options& o) {
    if (o.policy == "kg") return make_kg_policy(an);
    if (o.policy == "random") return make_random_policy(an);
    if (o.policy == "delayed") return make_delayed_policy(an);
    return make_optimal_policy(an, compute_q_star(an));
}

int emit_tree(const Analysis& an, const SimPolicy& sp, const Options& o) {
    const std::vector<TreeNode> nodes = expand_tree(sp, o.tree_depth);
    if (o.format == "json") {
        ordered_json out;
        out["command"] = "simulate";
        out["policy"] = sp.name;
        out["tree_depth"] = o.tree_depth;
        ordered_json arr = ordered_json::array();
        for (const TreeNode& n : nodes) {
            ordered_json nj{{"depth", n.depth},
                            {"p", rat_str(n.state.p)},
                            {"w", rat_str(n.state.w)},
                            {"absorbing", !n.split.has_value()}};
            if (n.split) nj["split"] = split_json(an.problem, *n.split);
            arr.push_back(nj);
        }
        out["nodes"] = arr;
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::cout << "depth,p,w,branch,prob,posterior,promise,action\n";
    for (const TreeNode& n : nodes) {
        if (!n.split) {
            std::cout << n.depth << ',' << rat_str(n.state.p) << ',' << rat_str(n.state.w)
                      << ",absorbing,,,,\n";
            continue;
        }
        for (std::size_t b = 0; b < n.split->size(); ++b) {
            const SplitOutcome& br = (*n.split)[b];
            std::cout << n.depth << ',' << rat_str(n.state.p) << ',' << rat_str(n.state.w) << ','
                      << b << ',' << rat_str(br.prob) << ',' << rat_str(br.posterior) << ','
                      << rat_str(br.promised_w) << ',' << an.problem.actions[br.action] << '\n';
        }
    }
    return 0;
}

int cmd_simulate(const Options& o) {
    const Problem p = load_normalized(o);
    if (p.trivial) {
        print_trivial_notice(p, o);
        return 0;
    }
    const Analysis an = analyze(p);
    const SimPolicy sp = build_policy(an, o);

    if (o.tree_depth > 0) return emit_tree(an, sp, o);

    if (o.trace_paths > 0) {
        std::cout << "path,period,belief_before,signal,belief_after,promise,action,"
                     "principal_flow,agent_flow\n";
        for (std::size_t k = 0; k < o.trace_paths; ++k) {
            const Trajectory tr =
                run_trajectory(an, sp, std::nullopt, o.horizon, o.seed, k);
            for (std::size_t t = 0; t < tr.periods.size(); ++t) {
                const PeriodRecord& r = tr.periods[t];
                std::cout << k << ',' << t + 1 << ',' << rat_str(r.belief_before) << ','
                          << r.signal << ',' << rat_str(r.belief_after) << ','
                          << rat_str(r.promised_w) << ',' << p.actions[r.action] << ','
                          << rat_str(r.principal_flow) << ',' << rat_str(r.agent_flow) << '\n';
            }
        }
        return 0;
    }

    const MonteCarloResult mc = monte_carlo_value(an, sp, o.paths, o.horizon, o.seed);

    if (o.format == "csv") {
        std::cout << "path,omega,periods,absorption,principal,agent\n";
        for (std::size_t k = 0; k < o.paths; ++k) {
            const Trajectory tr =
                run_trajectory(an, sp, std::nullopt, o.horizon, o.seed, k);
            std::cout << k << ',' << (tr.omega1 ? 1 : 0) << ',' << tr.periods.size() << ','
                      << absorption_name(tr.absorption) << ',' << rat_str(tr.principal_total)
                      << ',' << rat_str(tr.agent_total) << '\n';
        }
        return 0;
    }
    if (o.format == "json") {
        ordered_json out;
        out["command"] = "simulate";
        out["problem"] = o.problem_path;
        out["policy"] = sp.name;
        out["start"] = ordered_json{{"p", rat_str(sp.start.p)}, {"w", rat_str(sp.start.w)}};
        out["absorb_bound"] =
            sp.absorb_bound ? ordered_json(*sp.absorb_bound) : ordered_json(nullptr);
        out["paths"] = mc.n_paths;
        out["horizon"] = o.horizon;
        out["seed"] = mc.seed;
        out["principal_mean"] = mc.principal_mean;
        out["principal_stderr"] = mc.principal_stderr;
        out["agent_mean"] = mc.agent_mean;
        out["agent_stderr"] = mc.agent_stderr;
        out["truncated_paths"] = mc.truncated_paths;
        out["principal_tail_bound"] = mc.principal_tail_bound;
        out["agent_tail_bound"] = mc.agent_tail_bound;
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    std::cout << "policy: " << sp.name << ", start (" << rat_str(sp.start.p) << ", "
              << rat_str(sp.start.w) << ")";
    if (sp.absorb_bound) std::cout << ", absorption bound " << *sp.absorb_bound;
    std::cout << '\n'
              << "paths: " << mc.n_paths << ", horizon: " << o.horizon << ", seed: " << mc.seed
              << '\n'
              << "principal: mean " << fmt_short(mc.principal_mean, o) << ", stderr "
              << fmt_short(mc.principal_stderr, o) << ", tail bound "
              << fmt_short(mc.principal_tail_bound, o) << '\n'
              << "agent: mean " << fmt_short(mc.agent_mean, o) << ", stderr "
              << fmt_short(mc.agent_stderr, o) << ", tail bound "
              << fmt_short(mc.agent_tail_bound, o) << '\n'
              << "truncated paths: " << mc.truncated_paths << '\n';
    return 0;
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--problem", o.problem_path, "problem instance JSON file")->required();
    sub->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
    sub->add_option("--digits", o.digits, "decimal display digits")
        ->check(CLI::Range(1, 50))
        ->capture_default_str();
    sub->add_flag("--exact", o.exact_only, "print exact rationals only (no decimal tails)");
    sub->add_option("--seed", o.seed, "random seed")->capture_default_str();
    sub->add_option("--threads", o.threads,
                    "worker threads (env PERSUADE_THREADS; 0 = library default)")
        ->envname("PERSUADE_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact solver, verifier, and simulator for repeated persuasion with "
                 "promised continuation utilities"};
    app.require_subcommand(1);
    Options o;

    CLI::App* solve = app.add_subcommand("solve", "thresholds, optimal cutoff, and value");
    add_common(solve, o);
    solve->add_option("--q", o.q_text, "cutoff override (default: computed q*)");

    CLI::App* trace = app.add_subcommand("trace", "envelopes, obedience ladder, value curves");
    add_common(trace, o);
    trace->add_option("--q", o.q_text, "cutoff override (default: computed q*)");
    trace->add_option("--curve", o.curve, "sample V(p, m(p)) at this many equal steps")
        ->check(CLI::PositiveNumber);

    CLI::App* compare = app.add_subcommand("compare", "optimal value against baseline policies");
    add_common(compare, o);

    CLI::App* verify =
        app.add_subcommand("verify", "exact optimality properties and grid-oracle agreement");
    add_common(verify, o);
    verify->add_option("--q", o.q_text, "cutoff override (default: computed q*)");
    verify->add_option("--np", o.np, "belief nodes for the exact property checks")
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    verify->add_option("--nw", o.nw, "promise nodes for the exact property checks")
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    verify->add_flag("--oracle", o.oracle, "also run grid value iteration and compare");
    verify->add_option("--oracle-np", o.oracle_np, "oracle belief resolution")
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    verify->add_option("--oracle-nw", o.oracle_nw, "oracle promise resolution")
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    verify->add_option("--tol", o.tol, "oracle stopping residual")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    verify->add_option("--max-iters", o.max_iters, "oracle sweep cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    verify->add_option("--gap-budget", o.gap_budget, "largest acceptable oracle gap")
        ->capture_default_str();
    verify->add_flag("--refine", o.refine,
                     "re-run the oracle at doubled resolution and require the gap to shrink");
    verify->add_option("--dump-grid", o.dump_grid, "write the converged oracle grid as CSV");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo paths and belief trees");
    add_common(simulate, o);
    simulate->add_option("--policy", o.policy, "policy to simulate")
        ->check(CLI::IsMember({"optimal", "kg", "random", "delayed"}))
        ->capture_default_str();
    simulate->add_option("--paths", o.paths, "number of Monte Carlo paths")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--horizon", o.horizon, "periods per path")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    simulate->add_option("--tree-depth", o.tree_depth,
                         "emit the reachable state tree to this depth instead of sampling");
    simulate->add_option("--trace", o.trace_paths,
                         "emit per-period CSV for this many paths instead of a summary");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

#ifdef _OPENMP
    if (o.threads > 0) omp_set_num_threads(o.threads);
#endif

    try {
        if (app.got_subcommand("solve")) return cmd_solve(o);
        if (app.got_subcommand("trace")) return cmd_trace(o);
        if (app.got_subcommand("compare")) return cmd_compare(o);
        if (app.got_subcommand("verify")) return cmd_verify(o);
        if (app.got_subcommand("simulate")) return cmd_simulate(o);
    } catch (const SolverError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
