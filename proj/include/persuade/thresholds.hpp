#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "persuade/envelopes.hpp"

namespace persuade {

// One-step splitting weight and posterior solving
//   lambda*phi + (1-lambda)*1 = p,  lambda*f(phi) + (1-lambda)*f(1) = w
// for a convex piecewise-linear f: the line through (p,w) and (1,f(1))
// intersected with the graph of f to the left of p.
struct Split {
    Rat lambda;
    Rat phi;
};

// The nested intervals Q^k of beliefs from which the agent can be induced to
// play the target action for k consecutive periods before full disclosure.
struct ThresholdLadder {
    std::vector<Interval> levels;        // levels[k-1] = Q^k, nonempty, nested
    std::optional<std::size_t> k_star;   // last k with Q^k nonempty (P empty case)
    std::optional<Interval> Q_inf;       // [p_lo, q_bar_inf] when P nonempty
    bool reached_fixed_point = false;    // Q^{k+1} == Q^k hit exactly
    // Diagnostic only: first level within 2^-30 of Q_inf (no convergence-rate
    // claim is attached to it).
    std::optional<std::size_t> k_near_inf;

    bool has_Q1() const { return !levels.empty(); }
    const Interval& Q1() const { return levels.front(); }
    // Deepest stored 1-based level containing p (0 if p is in none).
    std::size_t deepest_level(const Rat& p) const;
};

std::optional<Interval> compute_Q1(const Envelopes& env, const Rat& delta);

ThresholdLadder compute_ladder(const Envelopes& env, const Rat& delta);

std::optional<Interval> compute_Q_inf(const Envelopes& env, const Rat& delta);

// Continues the ladder below its stored levels until p leaves a level or the
// iteration cap is hit; returns the deepest 1-based level containing p.
// Precondition: p in Q^1 and p outside Q_inf.
std::size_t ladder_level_of(const Envelopes& env, const Rat& delta,
                            const ThresholdLadder& ladder, const Rat& p);

Split split_phi_lambda(const PiecewiseLinearConvex& f, const Rat& p, const Rat& w);

}  // namespace persuade
