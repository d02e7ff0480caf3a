#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "persuade/problem.hpp"

namespace persuade {

struct Interval {
    Rat lo;
    Rat hi;
    bool contains(const Rat& p) const { return lo <= p && p <= hi; }
    Rat width() const { return hi - lo; }
    bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

// Convex piecewise-linear function on [0,1], stored as its kink list.
// kinks.front().p == 0, kinks.back().p == 1, p strictly increasing, slopes
// non-decreasing. piece_action labels the piece to the RIGHT of each kink
// (the last kink repeats the final piece's label); npos marks synthetic
// pieces that do not correspond to a single action.
struct PiecewiseLinearConvex {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    struct Kink {
        Rat p;
        Rat value;
        std::size_t piece_action = npos;
    };
    std::vector<Kink> kinks;

    Rat eval(const Rat& p) const;            // throws OutOfDomain outside [0,1]
    std::size_t piece_index(const Rat& p) const;  // piece containing p (left-closed)
    bool is_convex() const;                  // slope monotonicity check
};

// All static envelope data for one problem: the best-reply envelope m, the
// full-information line M, the target-action line, and the interval P where
// the target action is statically optimal.
struct Envelopes {
    PiecewiseLinearConvex m;
    std::array<Rat, 2> M_line;       // (M(0), M(1)) = (m(0), m(1))
    std::array<Rat, 2> u_star_line;  // (u(a*,0), u(a*,1))
    std::optional<Interval> P;

    Rat eval_m(const Rat& p) const { return m.eval(p); }
    Rat eval_M(const Rat& p) const;
    Rat eval_u_star(const Rat& p) const;
    bool in_P(const Rat& p) const { return P && P->contains(p); }
};

Envelopes build_envelopes(const Problem& problem);

// Lowest-index maximizer of u(a, p) over actions.
std::size_t best_reply(const Problem& problem, const Rat& p);

// The promise making the agent indifferent between playing the target action
// now (with that continuation) and best-replying forever:
// (1-delta)*u(a*,p) + delta*bold_w(p) = m(p).
Rat bold_w(const Envelopes& env, const Rat& delta, const Rat& p);

// Three-piece modification of m: the chord of m over [0, q1_lo], m itself on
// [q1_lo, q], and the chord of m over [q, 1]. Convex and >= m pointwise.
PiecewiseLinearConvex m_bar(const Envelopes& env, const Rat& q1_lo, const Rat& q);

// Value at x of the line through (x0,y0) and (x1,y1); requires x0 != x1.
Rat chord_at(const Rat& x0, const Rat& y0, const Rat& x1, const Rat& y1, const Rat& x);

}  // namespace persuade
