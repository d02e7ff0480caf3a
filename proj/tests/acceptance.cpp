// Acceptance gate: exercises the full solver end to end and prints one
// [PASS]/[FAIL] line per criterion.  Exits nonzero if any criterion fails.
//
// Tolerances are pinned here, next to the checks that use them; everything
// not guarded by a tolerance is compared bit-exactly in rational arithmetic.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "persuade/baselines.hpp"
#include "persuade/errors.hpp"
#include "persuade/oracle.hpp"
#include "persuade/policy.hpp"
#include "persuade/problem.hpp"
#include "persuade/rational.hpp"
#include "persuade/simulate.hpp"

namespace {

using namespace persuade;
using Clock = std::chrono::steady_clock;

constexpr double kOracleGapBudget = 0.01;   // grid-vs-exact value agreement
constexpr double kRefineFactor = 0.6;       // required gap shrink when resolution doubles
constexpr double kSigmas = 3.0;             // Monte Carlo consistency band
constexpr double kReferenceBudgetSec = 1.0; // exact reproduction runtime cap
constexpr double kOracleBudgetSec = 60.0;   // oracle agreement runtime cap

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string problems_path(const char* name) {
    return std::string(PROBLEMS_DIR) + "/" + name;
}

// Collects failures; keeps going so one bad check reports every detail.
struct Checker {
    std::ostringstream detail;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        if (cond) return;
        ok = false;
        detail << "\n    failed: " << what;
    }
};

bool has_branch(const PolicyStep& step, const Rat& prob, const Rat& post, const Rat& promise) {
    for (const SplitOutcome& b : step)
        if (b.prob == prob && b.posterior == post && b.promised_w == promise) return true;
    return false;
}

// The instance with a non-concave top-cutoff value function used by
// criterion 5: four actions, delta = 3/4, target statically never optimal.
Problem nonconcave_instance() {
    Problem p;
    p.actions = {"a0", "a1", "a2", "a3"};
    p.target = 3;
    p.agent_payoff = {{Rat(2), rat(3, 2)},
                      {Rat(0), Rat(4)},
                      {Rat(1), rat(11, 3)},
                      {rat(1, 2), Rat(1)}};
    p.principal_payoff = {Rat(3), Rat(1)};
    p.discount = rat(3, 4);
    p.prior = rat(33, 85);
    return p;
}

// --------------------------------------------------------------------------
// 1. exact reproduction of the three-action reference instance
// --------------------------------------------------------------------------
bool criterion1(std::string& detail) {
    const auto t0 = Clock::now();
    Checker c;
    const Analysis an = analyze(load_problem(problems_path("three_action.json")));
    c.expect(an.ladder.Q1().lo == rat(1, 6) && an.ladder.Q1().hi == rat(1, 2),
             "Q1 == [1/6, 1/2]");
    const Rat qs = compute_q_star(an);
    c.expect(qs == rat(1, 2), "q* == 1/2");
    c.expect(an.bold_w_at(rat(1, 3)) == rat(5, 6), "bold_w(1/3) == 5/6");
    c.expect(an.bold_w_at(rat(3, 11)) == rat(21, 22), "bold_w(3/11) == 21/22");

    const PolicySolver pol(an, qs);
    const PolicyStep s1 = pol.step({rat(1, 3), rat(5, 6)});
    c.expect(s1.size() == 2 && has_branch(s1, rat(22, 24), rat(3, 11), rat(21, 22)) &&
                 has_branch(s1, rat(2, 24), Rat(1), Rat(2)),
             "split at (1/3, 5/6) == {22/24 -> 3/11, 2/24 -> 1}");
    const PolicyStep s2 = pol.step({rat(3, 11), rat(21, 22)});
    c.expect(s2.size() == 2 && has_branch(s2, rat(39, 44), rat(7, 39), rat(89, 78)) &&
                 has_branch(s2, rat(5, 44), Rat(1), Rat(2)),
             "split at (3/11, 21/22) == {39/44 -> 7/39, 5/44 -> 1}");
    const PolicyStep s3 = pol.step({rat(7, 39), rat(89, 78)});
    c.expect(s3.size() == 3 && has_branch(s3, rat(113, 156), Rat(0), Rat(1)) &&
                 has_branch(s3, rat(18, 156), rat(1, 6), rat(7, 6)) &&
                 has_branch(s3, rat(25, 156), Rat(1), Rat(2)),
             "split at (7/39, 89/78) == {113/156 -> 0, 18/156 -> 1/6, 25/156 -> 1}");
    c.expect(pol.value({rat(1, 3), rat(2, 3)}) == rat(1285, 1536),
             "V(1/3, m(1/3)) == 1285/1536");

    const double dt = secs_since(t0);
    c.expect(dt < kReferenceBudgetSec, "runtime < 1 s");
    detail = c.detail.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 2. baseline values on the three-action reference instance
// --------------------------------------------------------------------------
bool criterion2(std::string& detail) {
    Checker c;
    const Analysis an = analyze(load_problem(problems_path("three_action.json")));
    const BaselineResult kg = kg_value(an);
    c.expect(kg.principal_value == Rat(0), "one-shot disclosure value == 0");
    const BaselineResult rnd = random_disclosure(an);
    c.expect(rnd.alpha && *rnd.alpha == rat(1, 4), "random disclosure alpha == 1/4");
    c.expect(rnd.principal_value == rat(4, 5), "random disclosure value == 4/5");
    const BaselineResult del = delayed_disclosure(an);
    c.expect(del.T_star && *del.T_star == 2, "delayed disclosure T* == 2");
    c.expect(del.principal_value == rat(3, 4), "delayed disclosure value == 3/4");
    detail = c.detail.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 3. closed-form value on the two-action reference instance
// --------------------------------------------------------------------------
bool criterion3(std::string& detail) {
    Checker c;
    Problem base = load_problem(problems_path("two_action.json"));
    for (long i = 1; i <= 11; ++i) {
        Problem p = base;
        p.prior = rat(i, 12);
        const Analysis an = analyze(p);
        const Rat qs = compute_q_star(an);
        const PolicySolver pol(an, qs);
        const Rat m0 = an.env.eval_m(p.prior);
        const Rat expected = p.prior <= rat(1, 2) ? Rat(1) : Rat(2 * (1 - p.prior));
        const Rat got = pol.value({p.prior, m0});
        c.expect(got == expected,
                 "V(" + rat_str(p.prior) + ", m) == " + rat_str(expected) + " (got " +
                     rat_str(got) + ")");
        const Rat kg = kg_value(an).principal_value;
        c.expect(kg == expected, "one-shot disclosure matches V at prior " + rat_str(p.prior));
    }
    detail = c.detail.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 4. grid oracle agreement with Richardson refinement
// --------------------------------------------------------------------------
bool criterion4(std::string& detail) {
    const auto t0 = Clock::now();
    Checker c;
    const Analysis an = analyze(load_problem(problems_path("three_action.json")));
    const Rat p0 = an.problem.prior;
    const Rat m0 = an.env.eval_m(p0);
    const double exact = rat_double(rat(1285, 1536));

    ConvergenceReport rep1, rep2;
    Grid g1 = value_iterate(an, make_grid(an, 120, 40), 1e-6, 500, &rep1);
    const double gap1 = std::abs(grid_value_at(g1, p0, m0) - exact);
    Grid g2 = value_iterate(an, make_grid(an, 240, 80), 1e-6, 500, &rep2);
    const double gap2 = std::abs(grid_value_at(g2, p0, m0) - exact);

    std::ostringstream extra;
    extra << " (gap " << gap1 << " -> " << gap2 << ")";
    c.expect(gap1 <= kOracleGapBudget, "coarse gap <= 0.01");
    c.expect(gap2 <= kRefineFactor * gap1, "doubled-resolution gap <= 0.6 x coarse gap");
    c.expect(rep1.recheck_failures == 0 && rep2.recheck_failures == 0,
             "exact rational rechecks of simplex bases all pass");
    const double dt = secs_since(t0);
    c.expect(dt < kOracleBudgetSec, "runtime < 60 s");
    detail = c.detail.str() + extra.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 5. optimality properties on random instances + non-concave construction
// --------------------------------------------------------------------------
bool criterion5(std::string& detail) {
    Checker c;
    const std::vector<Problem> instances = testgen::sample_instances(424242, 25);
    c.expect(instances.size() == 25, "generator yields 25 instances");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Analysis an = analyze(instances[i]);
        const Rat qs = compute_q_star(an);
        const VerifyReport rep = verify_optimality(an, qs);  // default grid
        c.expect(rep.pass(), "instance " + std::to_string(i) + " passes concavity/" +
                                 "monotonicity/obedience-interval checks at q*");
    }

    const Analysis an = analyze(nonconcave_instance());
    const Rat q_hi = an.ladder.Q1().hi;
    c.expect(q_hi == rat(3, 5), "constructed instance has top cutoff 3/5");
    const Rat qs = compute_q_star(an);
    c.expect(qs < q_hi, "q* < top cutoff strictly");

    const VerifyReport bad = verify_optimality(an, q_hi, 48, 12);
    c.expect(!bad.concavity.ok, "top-cutoff value function is not concave");
    const VerifyReport good = verify_optimality(an, qs, 48, 12);
    c.expect(good.pass(), "q* value function passes all checks");

    // exact advantage of the q* policy at the witness belief
    const Rat witness = rat(3, 5);
    const Rat mw = an.env.eval_m(witness);
    const PolicySolver ps(an, qs), ph(an, q_hi);
    const Rat advantage = ps.value({witness, mw}) - ph.value({witness, mw});
    c.expect(advantage >= rat(1, 10), "q* beats the top cutoff by >= 1/10 at p = 3/5");

    // grid oracle: top-cutoff policy is visibly suboptimal, q* is matched
    Grid g = value_iterate(an, make_grid(an, 120, 40), 1e-6, 500);
    const double grid_w = grid_value_at(g, witness, mw);
    c.expect(grid_w >= rat_double(ph.value({witness, mw})) + 0.1,
             "oracle exceeds the top-cutoff policy at the witness belief");
    const Rat p0 = an.problem.prior;
    const Rat m0 = an.env.eval_m(p0);
    const double gap = std::abs(grid_value_at(g, p0, m0) - rat_double(ps.value({p0, m0})));
    c.expect(gap <= kOracleGapBudget, "oracle matches the q* policy within the gap budget");
    detail = c.detail.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 6. policy-step invariants on generated states
// --------------------------------------------------------------------------
bool criterion6(std::string& detail) {
    Checker c;
    std::vector<Problem> instances = testgen::sample_instances(515151, 25);
    instances.push_back(load_problem(problems_path("three_action.json")));
    instances.push_back(load_problem(problems_path("two_action.json")));

    std::size_t stepped = 0, violations = 0;
    std::string first_violation;
    const auto record = [&](bool cond, const Analysis& an, const StatePoint& s,
                            const char* what) {
        if (cond) return;
        ++violations;
        if (first_violation.empty())
            first_violation = std::string(what) + " at (" + rat_str(s.p) + ", " + rat_str(s.w) +
                              "), delta " + rat_str(an.delta());
    };

    for (const Problem& pr : instances) {
        const Analysis an = analyze(pr);
        const Rat qs = compute_q_star(an);
        const PolicySolver pol(an, qs);
        const Rat one_minus_d = 1 - an.delta();
        for (long i = 0; i <= 28; ++i) {
            const Rat p = rat(i, 28);
            const Rat m = an.env.eval_m(p);
            const Rat span = an.env.eval_M(p) - m;
            for (long j = 0; j <= 14; ++j) {
                const StatePoint s{p, m + rat(j, 14) * span};
                if (pol.classify(s) == Region::Absorbed) continue;
                const PolicyStep step = pol.step(s);
                ++stepped;
                Rat total(0), mean(0), delivered(0);
                std::size_t target_branches = 0;
                for (const SplitOutcome& b : step) {
                    record(b.prob > 0, an, s, "branch probability > 0");
                    record(b.posterior >= 0 && b.posterior <= 1, an, s, "posterior in [0,1]");
                    const Rat mb = an.env.eval_m(b.posterior);
                    record(b.promised_w >= mb && b.promised_w <= an.env.eval_M(b.posterior),
                           an, s, "promise feasible");
                    const Rat h = one_minus_d * an.problem.u(b.action, b.posterior) +
                                  an.delta() * b.promised_w;
                    record(h >= mb, an, s, "one-shot obedience");
                    if (b.action == an.problem.target) {
                        ++target_branches;
                        record(h == mb, an, s, "target branch exactly indifferent");
                    }
                    total += b.prob;
                    mean += b.prob * b.posterior;
                    delivered += b.prob * h;
                }
                record(total == Rat(1), an, s, "branch probabilities sum to 1");
                record(mean == s.p, an, s, "posteriors average to the belief");
                record(delivered >= s.w, an, s, "delivered agent value covers the promise");
                record(target_branches <= 1, an, s, "at most one target branch");
            }
        }
    }
    c.expect(stepped >= 10000, "at least 10^4 stepped states (got " + std::to_string(stepped) +
                                   ")");
    c.expect(violations == 0,
             "zero violations (got " + std::to_string(violations) + "; first: " +
                 first_violation + ")");
    detail = c.detail.str() + " (" + std::to_string(stepped) + " states)";
    return c.ok;
}

// --------------------------------------------------------------------------
// 7. Monte Carlo simulation consistency
// --------------------------------------------------------------------------
bool criterion7(std::string& detail) {
    Checker c;
    const Analysis an = analyze(load_problem(problems_path("three_action.json")));
    const SimPolicy sp = make_optimal_policy(an, compute_q_star(an));

    const MonteCarloResult mc = monte_carlo_value(an, sp, 200000, 60, 12345);
    const double v_exact = rat_double(rat(1285, 1536));
    const double u_exact = rat_double(rat(2, 3));
    std::ostringstream extra;
    extra << " (principal " << mc.principal_mean << " +- " << mc.principal_stderr << ", agent "
          << mc.agent_mean << " +- " << mc.agent_stderr << ")";
    c.expect(std::abs(mc.principal_mean - v_exact) <= kSigmas * mc.principal_stderr,
             "principal mean within 3 standard errors of 1285/1536");
    c.expect(std::abs(mc.agent_mean - u_exact) <= kSigmas * mc.agent_stderr,
             "agent mean within 3 standard errors of 2/3");
    c.expect(mc.truncated_paths == 0, "no path reaches the horizon before absorbing");

    // exhaustive reachability proof: disclosure stops at a degenerate belief
    // by acting period 5 on every possible path
    const std::vector<TreeNode> tree = expand_tree(sp, 8);
    for (const TreeNode& n : tree) {
        if (!n.split) {
            c.expect(n.state.p == Rat(0) || n.state.p == Rat(1),
                     "absorbing state has a degenerate belief");
            continue;
        }
        c.expect(n.depth <= 4, "disclosing states all lie within 4 splits of the start");
        if (n.depth == 4)
            for (const SplitOutcome& b : *n.split)
                c.expect(b.posterior == Rat(0) || b.posterior == Rat(1),
                         "period-5 splits produce only degenerate posteriors");
    }

    // spot-check sampled trajectories against the same bound
    for (std::size_t k = 0; k < 5000; ++k) {
        const Trajectory tr = run_trajectory(an, sp, std::nullopt, 60, 12345, k);
        if (tr.absorption != Absorption::Degenerate0 &&
            tr.absorption != Absorption::Degenerate1) {
            c.expect(false, "path " + std::to_string(k) + " absorbs at a degenerate belief");
            break;
        }
        if (tr.periods.size() > 6) {
            c.expect(false, "path " + std::to_string(k) + " ends within 6 records");
            break;
        }
    }
    detail = c.detail.str() + extra.str();
    return c.ok;
}

// --------------------------------------------------------------------------
// 8. baseline ordering on random instances
// --------------------------------------------------------------------------
bool criterion8(std::string& detail) {
    Checker c;
    const std::vector<Problem> ordered =
        testgen::sample_instances(282828, 50, {.require_prior_in_Q1 = true});
    c.expect(ordered.size() == 50, "generator yields 50 instances with the prior in Q1");
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const Analysis an = analyze(ordered[i]);
        const PolicySolver pol(an, compute_q_star(an));
        const Rat v = pol.value({an.problem.prior, an.env.eval_m(an.problem.prior)});
        const Rat kg = kg_value(an).principal_value;
        const Rat rnd = random_disclosure(an).principal_value;
        const Rat del = delayed_disclosure(an).principal_value;
        const Rat fb = first_best(an).principal_value;
        const std::string tag = "instance " + std::to_string(i);
        c.expect(kg <= v, tag + ": one-shot disclosure <= optimal");
        c.expect(v <= fb, tag + ": optimal <= first-best");
        c.expect(rnd <= v, tag + ": random disclosure <= optimal");
        c.expect(del <= rnd, tag + ": delayed <= random disclosure");
    }

    const std::vector<Problem> symmetric = testgen::sample_instances(
        393939, 10, {.require_prior_in_Q1 = true, .symmetric_cost = true});
    c.expect(symmetric.size() == 10, "generator yields 10 symmetric-cost instances");
    for (std::size_t i = 0; i < symmetric.size(); ++i) {
        const Analysis an = analyze(symmetric[i]);
        const PolicySolver pol(an, compute_q_star(an));
        const Rat v = pol.value({an.problem.prior, an.env.eval_m(an.problem.prior)});
        const Rat rnd = random_disclosure(an).principal_value;
        const Rat fb = first_best(an).principal_value;
        const std::string tag = "symmetric instance " + std::to_string(i);
        c.expect(rnd == fb, tag + ": random disclosure == first-best exactly");
        c.expect(fb == v, tag + ": first-best == optimal exactly");
    }
    detail = c.detail.str();
    return c.ok;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* label;
        bool (*fn)(std::string&);
    };
    const Entry entries[] = {
        {1, "three-action reference instance reproduced bit-exactly", criterion1},
        {2, "baseline policies on the reference instance bit-exact", criterion2},
        {3, "two-action closed-form value and one-shot equivalence", criterion3},
        {4, "grid oracle agrees and tightens under refinement", criterion4},
        {5, "optimality properties; non-concave top cutoff is beaten", criterion5},
        {6, "policy-step invariants on generated states", criterion6},
        {7, "Monte Carlo consistency and absorption bound", criterion7},
        {8, "baseline ordering and symmetric-cost equalities", criterion8},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        const auto t0 = Clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = e.fn(detail);
        } catch (const std::exception& ex) {
            ok = false;
            detail = std::string("\n    exception: ") + ex.what();
        }
        if (!ok) ++failures;
        std::printf("[%s] criterion %d: %s (%.2fs)%s\n", ok ? "PASS" : "FAIL", e.id, e.label,
                    secs_since(t0), detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
