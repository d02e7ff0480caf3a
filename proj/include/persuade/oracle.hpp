#pragma once

#include <cstddef>
#include <vector>

#include "persuade/policy.hpp"
#include "persuade/rational.hpp"

namespace persuade {

// Discretized value table: beliefs p_i = i/np, promises equally spaced on
// [m(p_i), M(p_i)] within each column.
struct Grid {
    std::size_t np = 0;
    std::size_t nw = 0;
    std::vector<Rat> ps;      // np+1 belief nodes
    std::vector<Rat> m_of;    // m(p_i)
    std::vector<Rat> span;    // M(p_i) - m(p_i)
    std::vector<std::vector<double>> V;  // V[i][j], j = 0..nw from the bottom

    Rat w_node(std::size_t i, std::size_t j) const;
};

Grid make_grid(const Analysis& analysis, std::size_t np, std::size_t nw);

struct SweepStats {
    double sup_delta = 0.0;
    double min_improvement = 0.0;  // most negative pointwise change
    std::size_t recheck_failures = 0;
};

// One application of the Bellman operator: every cell re-optimized over
// grid-node splits with per-branch obedience, promise keeping as >= w.
Grid bellman_apply(const Analysis& analysis, const Grid& grid,
                   SweepStats* stats = nullptr, bool parallel = true);

struct ConvergenceReport {
    std::size_t iterations = 0;
    double final_delta = 0.0;
    double observed_modulus = 0.0;  // ratio of the last two sup-norm deltas
    bool monotone = true;
    std::size_t recheck_failures = 0;
};

// Iterates bellman_apply until the sup-norm residual drops below tol.
// A residual already below tol leaves the grid untouched (0 iterations).
Grid value_iterate(const Analysis& analysis, Grid grid, double tol,
                   std::size_t max_iters, ConvergenceReport* report = nullptr,
                   bool parallel = true);

// One optimal branch of a grid-state split.
struct BranchChoice {
    Rat posterior;
    Rat promised_w;
    std::size_t action = 0;
    double weight = 0.0;
};

// Solves the per-state linear program against the grid's continuation values
// at an arbitrary feasible (p, w); optionally returns the optimal support.
double solve_state(const Analysis& analysis, const Grid& grid, const Rat& p,
                   const Rat& w, std::vector<BranchChoice>* support = nullptr);

// Bilinear read of the table at an arbitrary point of the value set.
double grid_value_at(const Grid& grid, const Rat& p, const Rat& w);

// A weighted point of a feasible split: belief, delivered agent value h,
// principal objective g.
struct SupportPoint {
    Rat weight;
    Rat p;
    Rat h;
    Rat g;
};

// Reduces a feasible mixture to at most 3 points with the same total weight,
// mean belief, and objective; the delivered agent value never decreases.
std::vector<SupportPoint> caratheodory_support(std::vector<SupportPoint> points);

struct OracleComparison {
    double grid_value = 0.0;
    double exact_value = 0.0;
    double gap = 0.0;
    ConvergenceReport report;
};

// Runs value iteration and compares the table at (prior, m(prior)) with the
// analytic optimal value under cutoff q.
OracleComparison compare_with_exact(const Analysis& analysis, const Rat& q,
                                    std::size_t np, std::size_t nw, double tol,
                                    std::size_t max_iters, bool parallel = true);

}  // namespace persuade
