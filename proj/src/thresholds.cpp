#include "persuade/thresholds.hpp"

#include <algorithm>

#include "persuade/errors.hpp"

namespace persuade {

namespace {

constexpr std::size_t kLadderCap = 10000;

// Smallest interval-width change at which the iteration hands over to the
// analytic limit set (P nonempty case); exact rational 2^-30.
const Rat kStepBound = Rat(1, 1 << 30);

Rat affine_at(const Rat& v0, const Rat& v1, const Rat& p) { return v0 + (v1 - v0) * p; }

// Largest closed subinterval of [lo,hi] where the concave piecewise-linear
// g(p) = v0 + (v1-v0)p - m(p) is >= 0 (the affine part is given by its values
// at p=0 and p=1). Kinks of g inside (lo,hi) are exactly m's kinks.
std::optional<Interval> superlevel_interval(const PiecewiseLinearConvex& m, const Rat& v0,
                                            const Rat& v1, const Rat& lo, const Rat& hi) {
    std::vector<Rat> nodes{lo};
    for (const auto& k : m.kinks)
        if (k.p > lo && k.p < hi) nodes.push_back(k.p);
    if (hi > lo) nodes.push_back(hi);

    std::vector<Rat> g(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
        g[i] = affine_at(v0, v1, nodes[i]) - m.eval(nodes[i]);

    // g is concave, so its maximum over [lo,hi] sits at a node.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (g[i] > g[peak]) peak = i;
    if (g[peak] < 0) return std::nullopt;

    auto cross = [&](std::size_t a, std::size_t b) -> Rat {
        // Root of the affine segment between nodes a and b; g[a], g[b] straddle 0.
        return (nodes[a] * g[b] - nodes[b] * g[a]) / (g[b] - g[a]);
    };

    Rat left = nodes.front();
    if (g.front() < 0) {
        std::size_t i = peak;
        while (i > 0 && g[i - 1] >= 0) --i;
        left = (g[i] == 0) ? nodes[i] : cross(i - 1, i);
    }
    Rat right = nodes.back();
    if (g.back() < 0) {
        std::size_t i = peak;
        while (i + 1 < g.size() && g[i + 1] >= 0) ++i;
        right = (g[i] == 0) ? nodes[i] : cross(i, i + 1);
    }
    return Interval{left, right};
}

// One ladder step: Q_next = {q in prev: (1-delta)u*(q) + delta*U(q) >= m(q)}
// with U the chord of m from (prev.lo, m(prev.lo)) to (1, m(1)).
std::optional<Interval> ladder_step(const Envelopes& env, const Rat& delta,
                                    const Interval& prev) {
    Rat m_at_lo = env.eval_m(prev.lo);
    Rat m1 = env.m.kinks.back().value;
    // Chord values at p=0 and p=1 (extended left of prev.lo as the same line).
    Rat u1 = m1;
    Rat u0 = (prev.lo == 1) ? m1 : chord_at(prev.lo, m_at_lo, Rat(1), m1, Rat(0));
    Rat v0 = (1 - delta) * env.u_star_line[0] + delta * u0;
    Rat v1 = (1 - delta) * env.u_star_line[1] + delta * u1;
    return superlevel_interval(env.m, v0, v1, prev.lo, prev.hi);
}

}  // namespace

std::size_t ThresholdLadder::deepest_level(const Rat& p) const {
    std::size_t k = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!levels[i].contains(p)) break;
        k = i + 1;
    }
    return k;
}

std::optional<Interval> compute_Q1(const Envelopes& env, const Rat& delta) {
    Rat v0 = (1 - delta) * env.u_star_line[0] + delta * env.M_line[0];
    Rat v1 = (1 - delta) * env.u_star_line[1] + delta * env.M_line[1];
    return superlevel_interval(env.m, v0, v1, Rat(0), Rat(1));
}

std::optional<Interval> compute_Q_inf(const Envelopes& env, const Rat& delta) {
    if (!env.P) return std::nullopt;
    const Rat& p_lo = env.P->lo;
    Rat m_at = env.eval_m(p_lo);
    Rat m1 = env.m.kinks.back().value;
    Rat u0 = (p_lo == 1) ? m1 : chord_at(p_lo, m_at, Rat(1), m1, Rat(0));
    Rat v0 = (1 - delta) * env.u_star_line[0] + delta * u0;
    Rat v1 = (1 - delta) * env.u_star_line[1] + delta * m1;
    auto iv = superlevel_interval(env.m, v0, v1, p_lo, Rat(1));
    if (!iv) throw SolverError(Errc::LadderDiverged, "limit set lost its anchor");
    return Interval{p_lo, iv->hi};
}

ThresholdLadder compute_ladder(const Envelopes& env, const Rat& delta) {
    ThresholdLadder lad;
    auto q1 = compute_Q1(env, delta);
    if (!q1) return lad;
    lad.levels.push_back(*q1);

    for (std::size_t k = 1;; ++k) {
        if (k > kLadderCap)
            throw SolverError(Errc::LadderDiverged, "level cap exceeded");
        const Interval cur = lad.levels.back();
        auto next = ladder_step(env, delta, cur);
        if (!next) {
            lad.k_star = k;
            break;
        }
        if (next->lo < cur.lo || next->hi > cur.hi)
            throw SolverError(Errc::LadderDiverged, "levels failed to nest");
        if (env.P && (env.P->lo < next->lo || env.P->hi > next->hi))
            throw SolverError(Errc::LadderDiverged, "level excludes the static interval");
        if (*next == cur) {
            lad.reached_fixed_point = true;
            break;
        }
        lad.levels.push_back(*next);
        if (env.P && cur.width() - next->width() < kStepBound) break;
    }

    lad.Q_inf = compute_Q_inf(env, delta);
    if (lad.reached_fixed_point && lad.Q_inf && !(*lad.Q_inf == lad.levels.back()))
        throw SolverError(Errc::LadderDiverged, "fixed point disagrees with limit set");
    if (lad.Q_inf) {
        for (std::size_t i = 0; i < lad.levels.size(); ++i) {
            if (lad.levels[i].lo >= lad.Q_inf->lo - kStepBound &&
                lad.levels[i].hi <= lad.Q_inf->hi + kStepBound) {
                lad.k_near_inf = i + 1;
                break;
            }
        }
    }
    return lad;
}

std::size_t ladder_level_of(const Envelopes& env, const Rat& delta,
                            const ThresholdLadder& ladder, const Rat& p) {
    std::size_t k = ladder.deepest_level(p);
    if (k == 0 || k < ladder.levels.size()) return k;
    // p sits in the deepest stored level; keep iterating locally.
    Interval cur = ladder.levels.back();
    for (;;) {
        if (k > kLadderCap)
            throw SolverError(Errc::LadderDiverged, "level cap exceeded extending ladder");
        auto next = ladder_step(env, delta, cur);
        if (!next || !next->contains(p)) return k;
        cur = *next;
        ++k;
    }
}

Split split_phi_lambda(const PiecewiseLinearConvex& f, const Rat& p, const Rat& w) {
    Rat fp = f.eval(p);
    if (w == fp) return {Rat(1), p};
    Rat f0 = f.kinks.front().value;
    Rat f1 = f.kinks.back().value;
    if (p == 1) {
        if (w > f1) throw SolverError(Errc::DegenerateLine, "no line through (1,w) and (1,f(1))");
        throw SolverError(Errc::OutsideW, "w below the envelope at p=1");
    }
    if (w < fp) throw SolverError(Errc::OutsideW, "w below the envelope");
    if (w > (1 - p) * f0 + p * f1)
        throw SolverError(Errc::NoIntersection, "w above the full-information chord");

    // d(x) = line(x) - f(x) with the line through (p,w) and (1,f(1)):
    // concave, d(p) > 0, d(0) <= 0, so it has one root left of p. Scan nodes
    // right-to-left for the sign change.
    auto d = [&](const Rat& x) -> Rat { return chord_at(p, w, Rat(1), f1, x) - f.eval(x); };
    Rat b = p;
    Rat db = w - fp;  // d(p) > 0
    for (std::size_t i = f.kinks.size(); i-- > 0;) {
        const Rat& a = f.kinks[i].p;
        if (a >= p) continue;
        Rat da = d(a);
        if (da <= 0) {
            Rat phi = (da == 0) ? a : (a * db - b * da) / (db - da);
            return {(1 - p) / (1 - phi), phi};
        }
        b = a;
        db = da;
    }
    throw SolverError(Errc::NoIntersection, "no crossing left of p");
}

}  // namespace persuade
