#include "persuade/policy.hpp"

#include <algorithm>
#include <utility>
#include <vector>

#include "persuade/errors.hpp"

namespace persuade {

namespace {

constexpr int kMaxValueDepth = 20000;

}  // namespace

const char* region_name(Region r) {
    switch (r) {
        case Region::W1: return "W1";
        case Region::W2: return "W2";
        case Region::W3: return "W3";
        case Region::W4: return "W4";
        case Region::Absorbed: return "Absorbed";
    }
    return "?";
}

Rat Analysis::bold_w_at(const Rat& p) const { return bold_w(env, problem.discount, p); }

Analysis analyze(const Problem& raw) {
    Analysis a;
    a.problem = normalize(validate(raw));
    a.env = build_envelopes(a.problem);
    a.ladder = compute_ladder(a.env, a.problem.discount);
    return a;
}

PolicySolver::PolicySolver(const Analysis& analysis, Rat q) : a_(analysis), q_(std::move(q)) {
    if (!a_.ladder.has_Q1()) {
        throw SolverError(Errc::EmptyQ1, "no belief admits a persuasion cutoff");
    }
    q1_lo_ = a_.ladder.Q1().lo;
    q1_hi_ = a_.ladder.Q1().hi;
    if (q_ < q1_lo_ || q_ > q1_hi_) {
        throw SolverError(Errc::InvalidCutoffs,
                          "cutoff " + rat_str(q_) + " outside [" + rat_str(q1_lo_) +
                              ", " + rat_str(q1_hi_) + "]");
    }
    // Left endpoint of the final affine piece of m: splits at the bottom
    // boundary of W2 jump there when the chord to (1, m(1)) runs along m.
    const auto& kinks = a_.env.m.kinks;
    final_kink_ = kinks[kinks.size() - 2].p;
}

Region PolicySolver::classify(const StatePoint& s) const {
    const Envelopes& env = a_.env;
    if (s.p < 0 || s.p > 1) {
        throw SolverError(Errc::OutsideW, "belief " + rat_str(s.p) + " outside [0,1]");
    }
    const Rat mp = env.eval_m(s.p);
    if (s.w < mp || s.w > env.eval_M(s.p)) {
        throw SolverError(Errc::OutsideW, "promise " + rat_str(s.w) +
                                              " outside [m(p), M(p)] at p=" + rat_str(s.p));
    }
    if (s.w == mp && (s.p == 0 || s.p == 1 || env.in_P(s.p))) {
        return Region::Absorbed;
    }
    const Rat m1 = env.m.kinks.back().value;
    if (s.p < q1_lo_) {
        // Below the chord of m over [0, q1_lo] is the two-point split region.
        const Rat c0 = chord_at(Rat(0), env.m.kinks.front().value, q1_lo_,
                                env.eval_m(q1_lo_), s.p);
        return s.w <= c0 ? Region::W1 : Region::W4;
    }
    const Rat u1 = chord_at(q1_lo_, env.eval_m(q1_lo_), Rat(1), m1, s.p);
    if (s.p <= q_) {
        return s.w <= u1 ? Region::W2 : Region::W4;
    }
    const Rat cq = chord_at(q_, env.eval_m(q_), Rat(1), m1, s.p);
    if (s.w <= cq) return Region::W3;
    if (s.w <= u1) return Region::W2;
    return Region::W4;
}

PolicyStep PolicySolver::step(const StatePoint& s) const {
    const Region r = classify(s);
    if (r == Region::Absorbed) {
        throw SolverError(Errc::OutOfDomain, "absorbed state has no further split");
    }
    return step_region(s, r);
}

PolicyStep PolicySolver::step_region(const StatePoint& s, Region r) const {
    const Envelopes& env = a_.env;
    const Problem& pr = a_.problem;
    const std::size_t a_star = pr.target;
    const Rat m0 = env.m.kinks.front().value;
    const Rat m1 = env.m.kinks.back().value;
    PolicyStep out;
    switch (r) {
        case Region::W1: {
            // Split to 0 and q1_lo, leaving the agent rents above w.
            const std::size_t a0 = best_reply(pr, Rat(0));
            out.push_back({(q1_lo_ - s.p) / q1_lo_, Rat(0), m0, a0});
            out.push_back({s.p / q1_lo_, q1_lo_, a_.bold_w_at(q1_lo_), a_star});
            break;
        }
        case Region::W2: {
            const Rat mp = env.eval_m(s.p);
            if (s.w == mp) {
                if (s.p > final_kink_) {
                    // The chord from (p, m(p)) to (1, m(1)) runs along m:
                    // the value-continuous split lands at the piece's left
                    // endpoint (the limit of splits from promises above m(p)).
                    const Rat& xk = final_kink_;
                    if (xk < q1_lo_) {
                        throw SolverError(Errc::InvalidCutoffs,
                                          "internal: split target below Q1");
                    }
                    const Rat lam = (1 - s.p) / (1 - xk);
                    out.push_back({lam, xk, a_.bold_w_at(xk), a_star});
                    out.push_back({1 - lam, Rat(1), m1, best_reply(pr, Rat(1))});
                } else {
                    // Keep the belief, recommend the target action, and roll
                    // the promise forward to bold_w(p).
                    out.push_back({Rat(1), s.p, a_.bold_w_at(s.p), a_star});
                }
            } else {
                const Split sp = split_phi_lambda(env.m, s.p, s.w);
                out.push_back({sp.lambda, sp.phi, a_.bold_w_at(sp.phi), a_star});
                if (sp.lambda < 1) {
                    out.push_back({1 - sp.lambda, Rat(1), m1, best_reply(pr, Rat(1))});
                }
            }
            break;
        }
        case Region::W3: {
            // Split toward the cutoff, leaving rents below the chord.  When
            // the cutoff sits inside the final affine piece of m the chord
            // from (q, m(q)) to (1, m(1)) runs along m, and the split lands
            // at the piece's left endpoint instead (the same landing point
            // the bottom-boundary W2 split uses), keeping the value there
            // equal to the scaled value at the cutoff.
            const Rat t = q_ < final_kink_ ? q_ : final_kink_;
            out.push_back({(1 - s.p) / (1 - t), t, a_.bold_w_at(t), a_star});
            out.push_back({(s.p - t) / (1 - t), Rat(1), m1, best_reply(pr, Rat(1))});
            break;
        }
        case Region::W4: {
            // Three-point split to {0, q1_lo, 1}: probabilities solve
            //   sum = 1, mean = p, delivered utility = w
            // with delivered utilities m(0), m(q1_lo), m(1).
            const Rat mq = env.eval_m(q1_lo_);
            const Rat Mq = env.eval_M(q1_lo_);
            const Rat D = Mq - mq;
            if (D == 0) {
                throw SolverError(Errc::DegenerateSystem,
                                  "three-point split is singular at q1_lo=" +
                                      rat_str(q1_lo_));
            }
            const Rat lam_q = (env.eval_M(s.p) - s.w) / D;
            const Rat lam_1 = (q1_lo_ * (s.w - m0) - s.p * (mq - m0)) / D;
            const Rat lam_0 = 1 - lam_q - lam_1;
            if (lam_q < 0 || lam_1 < 0 || lam_0 < 0) {
                throw SolverError(Errc::DegenerateSystem,
                                  "three-point split left the simplex");
            }
            if (lam_0 > 0) {
                out.push_back({lam_0, Rat(0), m0, best_reply(pr, Rat(0))});
            }
            if (lam_q > 0) {
                out.push_back({lam_q, q1_lo_, a_.bold_w_at(q1_lo_), a_star});
            }
            if (lam_1 > 0) {
                out.push_back({lam_1, Rat(1), m1, best_reply(pr, Rat(1))});
            }
            break;
        }
        case Region::Absorbed:
            throw SolverError(Errc::OutOfDomain, "absorbed state has no further split");
    }
    return out;
}

Rat PolicySolver::value(const StatePoint& s) const { return value_rec(s, 0); }

Rat PolicySolver::value_rec(const StatePoint& s, int depth) const {
    if (depth > kMaxValueDepth) {
        throw SolverError(Errc::MaxItersExceeded, "value recursion exceeded depth limit");
    }
    const auto key = std::make_pair(s.p, s.w);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    const Envelopes& env = a_.env;
    const Problem& pr = a_.problem;
    const Region r = classify(s);
    Rat result(0);
    if (r == Region::Absorbed) {
        result = env.in_P(s.p) ? pr.v_star(s.p) : Rat(0);
    } else {
        const Rat mp = env.eval_m(s.p);
        const bool in_core = a_.ladder.Q_inf && a_.ladder.Q_inf->contains(s.p);
        const Rat g1 = m1_gap_ref();  // m(1) - u*(1), positive off the trivial case
        if (in_core && s.w == mp) {
            // Fixed point of the stay recursion on the persistent core.
            result = pr.v_star(s.p) - (mp - pr.u_star(s.p)) / g1 * pr.v_star(Rat(1));
        } else if (in_core && s.w == a_.bold_w_at(s.p)) {
            // Invert the stay step so chains inside the core terminate.
            const Rat bottom =
                pr.v_star(s.p) - (mp - pr.u_star(s.p)) / g1 * pr.v_star(Rat(1));
            result = (bottom - (1 - pr.discount) * pr.v_star(s.p)) / pr.discount;
        } else {
            const PolicyStep st = step_region(s, r);
            for (const SplitOutcome& b : st) {
                Rat flow(0);
                if (b.action == pr.target) {
                    flow = (1 - pr.discount) * pr.v_star(b.posterior);
                }
                const Rat cont = value_rec({b.posterior, b.promised_w}, depth + 1);
                result += b.prob * (flow + pr.discount * cont);
            }
        }
    }
    memo_.emplace(key, result);
    return result;
}

Rat PolicySolver::m1_gap_ref() const {
    return a_.env.m.kinks.back().value - a_.problem.u_star(Rat(1));
}

namespace {

// One-sided probe used by the cutoff search: the candidate cutoff keeps the
// bottom of the splitting region weakly better than any promise above it; by
// concavity in w a single small offset suffices.
bool bottom_is_peak(const PolicySolver& solver, const Rat& p) {
    const Analysis& a = solver.analysis();
    const Rat mp = a.env.eval_m(p);
    const Rat Mp = a.env.eval_M(p);
    if (Mp == mp) return true;
    const Rat gap1 = a.env.m.kinks.back().value - a.problem.u_star(Rat(1));
    if (gap1 <= 0) return true;  // trivial orientation: nothing above the graph
    Rat eta = rat_pow(Rat(1, 2), 20);
    const Rat max_eta = (Mp - mp) / gap1;
    if (max_eta < eta) eta = max_eta;
    const Rat above = solver.value({p, mp + eta * gap1});
    return solver.value({p, mp}) >= above;
}

}  // namespace

Rat compute_q_star(const Analysis& analysis) {
    if (!analysis.ladder.has_Q1()) {
        throw SolverError(Errc::EmptyQ1, "no belief admits a persuasion cutoff");
    }
    const Rat lo0 = analysis.ladder.Q1().lo;
    const Rat hi0 = analysis.ladder.Q1().hi;
    PolicySolver solver(analysis, hi0);

    if (bottom_is_peak(solver, hi0)) return hi0;  // the common concave case
    if (lo0 == hi0) return lo0;

    Rat lo = lo0;
    Rat hi = hi0;
    const Rat tol = rat_pow(Rat(1, 2), 40);
    while (hi - lo > tol) {
        const Rat mid = (lo + hi) / 2;
        if (bottom_is_peak(solver, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    // Snap to a structural breakpoint when one lies in the bracket: the sup
    // lands on kinks of m or band endpoints when it is an exact kink root.
    std::vector<Rat> candidates;
    for (const auto& k : analysis.env.m.kinks) candidates.push_back(k.p);
    for (const auto& lv : analysis.ladder.levels) {
        candidates.push_back(lv.lo);
        candidates.push_back(lv.hi);
    }
    if (analysis.ladder.Q_inf) {
        candidates.push_back(analysis.ladder.Q_inf->lo);
        candidates.push_back(analysis.ladder.Q_inf->hi);
    }
    std::sort(candidates.begin(), candidates.end());
    for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
        if (*it <= lo || *it > hi) continue;
        if (bottom_is_peak(solver, *it)) return *it;
    }
    return lo;
}

VerifyReport verify_optimality(const Analysis& analysis, const Rat& q, std::size_t np,
                               std::size_t nw) {
    PolicySolver solver(analysis, q);
    const Envelopes& env = analysis.env;
    VerifyReport rep;

    const auto record = [&](VerifyCheck& chk, const Rat& violation, const StatePoint& at) {
        if (violation > 0 && (chk.ok || violation > chk.worst)) {
            chk.ok = false;
            chk.worst = violation;
            chk.where = at;
        }
    };

    std::vector<Rat> ps(np + 1);
    std::vector<std::vector<Rat>> ws(np + 1), vs(np + 1);
    for (std::size_t i = 0; i <= np; ++i) {
        ps[i] = rat(static_cast<long>(i), static_cast<long>(np));
        const Rat mp = env.eval_m(ps[i]);
        const Rat span = env.eval_M(ps[i]) - mp;
        ws[i].reserve(nw + 1);
        vs[i].reserve(nw + 1);
        for (std::size_t j = 0; j <= nw; ++j) {
            Rat w = mp + rat(static_cast<long>(j), static_cast<long>(nw)) * span;
            vs[i].push_back(solver.value({ps[i], w}));
            ws[i].push_back(std::move(w));
            ++rep.states_checked;
        }
    }

    for (std::size_t i = 0; i <= np; ++i) {
        for (std::size_t j = 0; j + 1 <= nw; ++j) {
            // Decreasing in the promise along each belief column.
            record(rep.monotonicity, vs[i][j + 1] - vs[i][j], {ps[i], ws[i][j + 1]});
            // Midpoint concavity within the column (the grid is uniform in w).
            if (j >= 1) {
                record(rep.concavity, vs[i][j - 1] + vs[i][j + 1] - 2 * vs[i][j],
                       {ps[i], ws[i][j]});
            }
        }
    }

    // Midpoint concavity across columns: the belief midpoint is a grid belief
    // but the promise midpoint generally is not, so evaluate it fresh.
    const auto cross = [&](std::size_t i, std::size_t jl, std::size_t jr) {
        const Rat wm = (ws[i - 1][jl] + ws[i + 1][jr]) / 2;
        const Rat vm = solver.value({ps[i], wm});
        record(rep.concavity, vs[i - 1][jl] + vs[i + 1][jr] - 2 * vm, {ps[i], wm});
    };
    for (std::size_t i = 1; i + 1 <= np; ++i) {
        for (std::size_t j = 0; j <= nw; ++j) {
            cross(i, j, j);
            if (j >= 1 && j + 1 <= nw) {
                cross(i, j - 1, j + 1);
                cross(i, j + 1, j - 1);
            }
        }
    }

    // The one-period deviation bound at the bottom of the persuasion band.
    const Interval& q1 = analysis.ladder.Q1();
    for (std::size_t i = 0; i <= np; ++i) {
        if (ps[i] < q1.lo || ps[i] > q1.hi) continue;
        const Rat lhs = vs[i][0];
        const Rat rhs = (1 - analysis.problem.discount) * analysis.problem.v_star(ps[i]) +
                        analysis.problem.discount *
                            solver.value({ps[i], analysis.bold_w_at(ps[i])});
        record(rep.q1_inequality, rhs - lhs, {ps[i], ws[i][0]});
    }
    return rep;
}

std::optional<long long> t_delta(const Analysis& analysis, const Rat& p) {
    if (p < 0 || p > 1) {
        throw SolverError(Errc::OutOfDomain, "belief " + rat_str(p) + " outside [0,1]");
    }
    if (p == 0 || p == 1) return 0;
    if (analysis.problem.trivial) return std::nullopt;
    if (!analysis.ladder.has_Q1()) return 1;
    if (analysis.ladder.Q_inf && analysis.ladder.Q_inf->contains(p)) return std::nullopt;
    const Interval& q1 = analysis.ladder.Q1();
    if (p < q1.lo || p > q1.hi) return 1;
    const std::size_t k = ladder_level_of(analysis.env, analysis.problem.discount,
                                          analysis.ladder, p);
    return static_cast<long long>(k) + 1;
}

}  // namespace persuade
