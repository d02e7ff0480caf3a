#include "persuade/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "persuade/envelopes.hpp"
#include "persuade/errors.hpp"

namespace persuade {

namespace {

constexpr double kEnterTol = 1e-10;
constexpr double kRatioTol = 1e-12;
constexpr double kFeasTol = 1e-9;
constexpr int kDantzigPivots = 40;
constexpr int kMaxPivots = 400;

// Split candidates shared by every cell of a sweep: the constraint matrix
// never changes, only each cell's right-hand side (p, w) does.
struct CandidateSet {
    std::vector<double> pc, hc, gc;  // belief, delivered agent value, objective
    std::vector<Rat> pcq, hcq;       // exact copies for the basis recheck
    std::vector<std::size_t> col, row, act;
    std::size_t anchor0 = 0;  // (p=0, bottom, best reply): cold-basis column
    std::size_t anchor1 = 0;  // (p=1, bottom, best reply)
};

CandidateSet build_candidates(const Analysis& a, const Grid& g) {
    const Problem& pr = a.problem;
    const Rat& delta = pr.discount;
    CandidateSet cs;
    const std::size_t reserve = (g.np + 1) * (g.nw + 1) * 2;
    cs.pc.reserve(reserve);
    cs.hc.reserve(reserve);
    cs.gc.reserve(reserve);
    for (std::size_t i = 0; i <= g.np; ++i) {
        const Rat& p = g.ps[i];
        const std::size_t br = best_reply(pr, p);
        const Rat mp = a.env.eval_m(p);
        const Rat u_br = pr.u(br, p);
        const Rat u_star = pr.u_star(p);
        const Rat flow_star = (1 - delta) * pr.v_star(p);
        for (std::size_t j = 0; j <= g.nw; ++j) {
            const Rat w = g.w_node(i, j);
            const auto push = [&](std::size_t action, const Rat& u_act, const Rat& flow) {
                const Rat h = (1 - delta) * u_act + delta * w;
                cs.pcq.push_back(p);
                cs.hcq.push_back(h);
                cs.pc.push_back(rat_double(p));
                cs.hc.push_back(rat_double(h));
                cs.gc.push_back(rat_double(flow) +
                                rat_double(delta) * g.V[i][j]);
                cs.col.push_back(i);
                cs.row.push_back(j);
                cs.act.push_back(action);
            };
            if (i == 0 && j == 0) cs.anchor0 = cs.pc.size();
            if (i == g.np && j == 0) cs.anchor1 = cs.pc.size();
            push(br, u_br, br == pr.target ? flow_star : Rat(0));
            if (br != pr.target) {
                // Obedience for the target at this node: the continuation
                // promise must cover the agent's static best reply.
                const Rat h_star = (1 - delta) * u_star + delta * w;
                if (h_star >= mp) push(pr.target, u_star, flow_star);
            }
        }
    }
    return cs;
}

// Columns of the 3-row system: candidate c -> (1, p_c, h_c); slack -> (0,0,-1).
void column_of(const CandidateSet& cs, int idx, double out[3]) {
    if (idx < 0) {
        out[0] = 0.0;
        out[1] = 0.0;
        out[2] = -1.0;
    } else {
        out[0] = 1.0;
        out[1] = cs.pc[static_cast<std::size_t>(idx)];
        out[2] = cs.hc[static_cast<std::size_t>(idx)];
    }
}

bool invert3(const double B[3][3], double inv[3][3]) {
    const double det = B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
                       B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
                       B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
    if (std::abs(det) < 1e-13) return false;
    const double d = 1.0 / det;
    inv[0][0] = (B[1][1] * B[2][2] - B[1][2] * B[2][1]) * d;
    inv[0][1] = (B[0][2] * B[2][1] - B[0][1] * B[2][2]) * d;
    inv[0][2] = (B[0][1] * B[1][2] - B[0][2] * B[1][1]) * d;
    inv[1][0] = (B[1][2] * B[2][0] - B[1][0] * B[2][2]) * d;
    inv[1][1] = (B[0][0] * B[2][2] - B[0][2] * B[2][0]) * d;
    inv[1][2] = (B[0][2] * B[1][0] - B[0][0] * B[1][2]) * d;
    inv[2][0] = (B[1][0] * B[2][1] - B[1][1] * B[2][0]) * d;
    inv[2][1] = (B[0][1] * B[2][0] - B[0][0] * B[2][1]) * d;
    inv[2][2] = (B[0][0] * B[1][1] - B[0][1] * B[1][0]) * d;
    return true;
}

struct LpState {
    int basis[3];
    double x[3];       // basic variable values
    double value = 0;  // objective at the final basis (double path)
};

bool basis_solution(const CandidateSet& cs, const int basis[3], const double rhs[3],
                    double inv[3][3], double x[3]) {
    double B[3][3];
    for (int k = 0; k < 3; ++k) {
        double colv[3];
        column_of(cs, basis[k], colv);
        for (int r = 0; r < 3; ++r) B[r][k] = colv[r];
    }
    if (!invert3(B, inv)) return false;
    for (int r = 0; r < 3; ++r) {
        x[r] = inv[r][0] * rhs[0] + inv[r][1] * rhs[1] + inv[r][2] * rhs[2];
    }
    return true;
}

// Revised simplex, Dantzig pricing with a Bland fallback after stalling.
LpState lp_solve(const CandidateSet& cs, double p, double w, const int warm[3]) {
    const double rhs[3] = {1.0, p, w};
    LpState st;
    const auto reset_cold = [&]() {
        st.basis[0] = static_cast<int>(cs.anchor0);
        st.basis[1] = static_cast<int>(cs.anchor1);
        st.basis[2] = -1;
    };
    double inv[3][3];
    for (int k = 0; k < 3; ++k) st.basis[k] = warm[k];
    if (!basis_solution(cs, st.basis, rhs, inv, st.x) ||
        std::min({st.x[0], st.x[1], st.x[2]}) < -kFeasTol) {
        reset_cold();
        if (!basis_solution(cs, st.basis, rhs, inv, st.x)) {
            throw SolverError(Errc::DegenerateSystem, "singular cold basis");
        }
        if (std::min({st.x[0], st.x[1], st.x[2]}) < -kFeasTol) {
            throw SolverError(Errc::InfeasibleState,
                              "promise exceeds the feasible ceiling at this belief");
        }
    }

    const std::size_t n = cs.pc.size();
    for (int pivot = 0; pivot < kMaxPivots; ++pivot) {
        double cb[3];
        for (int k = 0; k < 3; ++k) {
            cb[k] = st.basis[k] >= 0 ? cs.gc[static_cast<std::size_t>(st.basis[k])] : 0.0;
        }
        const double y0 = cb[0] * inv[0][0] + cb[1] * inv[1][0] + cb[2] * inv[2][0];
        const double y1 = cb[0] * inv[0][1] + cb[1] * inv[1][1] + cb[2] * inv[2][1];
        const double y2 = cb[0] * inv[0][2] + cb[1] * inv[1][2] + cb[2] * inv[2][2];

        int enter = -2;  // -2: none, -1: slack, >=0: candidate
        const bool bland = pivot >= kDantzigPivots;
        double best = kEnterTol;
        if (y2 > best) {
            enter = -1;
            best = y2;
        }
        if (!(bland && enter == -1)) {  // Bland: lowest eligible index wins
            for (std::size_t c = 0; c < n; ++c) {
                const int ci = static_cast<int>(c);
                if (ci == st.basis[0] || ci == st.basis[1] || ci == st.basis[2]) continue;
                const double r = cs.gc[c] - y0 - y1 * cs.pc[c] - y2 * cs.hc[c];
                if (bland ? r > kEnterTol : r > best) {
                    enter = ci;
                    best = r;
                    if (bland) break;
                }
            }
        }
        if (enter == -2) break;  // optimal

        double colv[3], d[3];
        column_of(cs, enter, colv);
        for (int r = 0; r < 3; ++r) {
            d[r] = inv[r][0] * colv[0] + inv[r][1] * colv[1] + inv[r][2] * colv[2];
        }
        int leave = -1;
        double best_ratio = 0.0;
        for (int k = 0; k < 3; ++k) {
            if (d[k] > kRatioTol) {
                const double ratio = std::max(st.x[k], 0.0) / d[k];
                if (leave < 0 || ratio < best_ratio - kRatioTol ||
                    (std::abs(ratio - best_ratio) <= kRatioTol &&
                     st.basis[k] < st.basis[leave])) {
                    leave = k;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) {
            throw SolverError(Errc::DegenerateSystem, "unbounded split program");
        }
        st.basis[leave] = enter;
        if (!basis_solution(cs, st.basis, rhs, inv, st.x)) {
            throw SolverError(Errc::DegenerateSystem, "singular pivot basis");
        }
        if (pivot + 1 == kMaxPivots) {
            throw SolverError(Errc::MaxItersExceeded, "split program did not terminate");
        }
    }

    st.value = 0.0;
    for (int k = 0; k < 3; ++k) {
        if (st.basis[k] >= 0) {
            st.value += st.x[k] * cs.gc[static_cast<std::size_t>(st.basis[k])];
        }
    }
    return st;
}

// Exact feasibility check of the final basis; on success returns the exact
// weights so the reported value uses exactly re-derived probabilities.
bool exact_recheck(const CandidateSet& cs, const int basis[3], const Rat& p, const Rat& w,
                   Rat lam[3]) {
    Rat B[3][3];
    for (int k = 0; k < 3; ++k) {
        if (basis[k] < 0) {
            B[0][k] = 0;
            B[1][k] = 0;
            B[2][k] = -1;
        } else {
            const auto c = static_cast<std::size_t>(basis[k]);
            B[0][k] = 1;
            B[1][k] = cs.pcq[c];
            B[2][k] = cs.hcq[c];
        }
    }
    const Rat rhs[3] = {Rat(1), p, w};
    const auto det3 = [](const Rat m[3][3]) -> Rat {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const Rat det = det3(B);
    if (det == 0) return false;
    for (int k = 0; k < 3; ++k) {
        Rat Bk[3][3];
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) Bk[r][c] = c == k ? rhs[r] : B[r][c];
        }
        lam[k] = det3(Bk) / det;
        if (lam[k] < 0) return false;
    }
    return true;
}

double solve_cell(const CandidateSet& cs, const Rat& p, const Rat& w, int warm[3],
                  std::size_t* recheck_failures) {
    LpState st = lp_solve(cs, rat_double(p), rat_double(w), warm);
    for (int k = 0; k < 3; ++k) warm[k] = st.basis[k];
    Rat lam[3];
    if (exact_recheck(cs, st.basis, p, w, lam)) {
        double value = 0.0;
        for (int k = 0; k < 3; ++k) {
            if (st.basis[k] >= 0) {
                value += rat_double(lam[k]) * cs.gc[static_cast<std::size_t>(st.basis[k])];
            }
        }
        return value;
    }
    if (recheck_failures != nullptr) ++*recheck_failures;
    return st.value;
}

}  // namespace

Rat Grid::w_node(std::size_t i, std::size_t j) const {
    return m_of[i] + rat(static_cast<long>(j), static_cast<long>(nw)) * span[i];
}

Grid make_grid(const Analysis& a, std::size_t np, std::size_t nw) {
    if (np == 0 || nw == 0) {
        throw SolverError(Errc::OutOfDomain, "grid resolution must be positive");
    }
    Grid g;
    g.np = np;
    g.nw = nw;
    g.ps.resize(np + 1);
    g.m_of.resize(np + 1);
    g.span.resize(np + 1);
    g.V.assign(np + 1, std::vector<double>(nw + 1, 0.0));
    for (std::size_t i = 0; i <= np; ++i) {
        g.ps[i] = rat(static_cast<long>(i), static_cast<long>(np));
        g.m_of[i] = a.env.eval_m(g.ps[i]);
        g.span[i] = a.env.eval_M(g.ps[i]) - g.m_of[i];
    }
    return g;
}

Grid bellman_apply(const Analysis& a, const Grid& grid, SweepStats* stats, bool parallel) {
    const CandidateSet cs = build_candidates(a, grid);
    Grid out = grid;
    std::vector<std::size_t> fail_per_col(grid.np + 1, 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (parallel)
#endif
    for (std::size_t i = 0; i <= grid.np; ++i) {
        int warm[3] = {static_cast<int>(cs.anchor0), static_cast<int>(cs.anchor1), -1};
        for (std::size_t j = 0; j <= grid.nw; ++j) {
            out.V[i][j] =
                solve_cell(cs, grid.ps[i], grid.w_node(i, j), warm, &fail_per_col[i]);
        }
    }
    (void)parallel;

    if (stats != nullptr) {
        stats->sup_delta = 0.0;
        stats->min_improvement = 0.0;
        stats->recheck_failures = 0;
        for (std::size_t i = 0; i <= grid.np; ++i) {
            stats->recheck_failures += fail_per_col[i];
            for (std::size_t j = 0; j <= grid.nw; ++j) {
                const double change = out.V[i][j] - grid.V[i][j];
                stats->sup_delta = std::max(stats->sup_delta, std::abs(change));
                stats->min_improvement = std::min(stats->min_improvement, change);
            }
        }
    }
    return out;
}

Grid value_iterate(const Analysis& a, Grid grid, double tol, std::size_t max_iters,
                   ConvergenceReport* report, bool parallel) {
    if (tol <= 0) {
        throw SolverError(Errc::OutOfDomain, "tolerance must be positive");
    }
    ConvergenceReport rep;
    double prev_delta = -1.0;
    for (std::size_t k = 0; k < max_iters; ++k) {
        SweepStats st;
        Grid next = bellman_apply(a, grid, &st, parallel);
        rep.recheck_failures += st.recheck_failures;
        rep.monotone = rep.monotone && st.min_improvement >= -kFeasTol;
        rep.final_delta = st.sup_delta;
        if (prev_delta > 0) rep.observed_modulus = st.sup_delta / prev_delta;
        prev_delta = st.sup_delta;
        if (st.sup_delta < tol) {
            if (report != nullptr) *report = rep;
            return grid;  // already within tolerance; the sweep only measured it
        }
        grid = std::move(next);
        rep.iterations = k + 1;
    }
    throw SolverError(Errc::MaxItersExceeded,
                      "value iteration still above tolerance after " +
                          std::to_string(max_iters) + " sweeps");
}

double solve_state(const Analysis& a, const Grid& grid, const Rat& p, const Rat& w,
                   std::vector<BranchChoice>* support) {
    if (p < 0 || p > 1) {
        throw SolverError(Errc::OutsideW, "belief " + rat_str(p) + " outside [0,1]");
    }
    if (w > a.env.eval_M(p)) {
        throw SolverError(Errc::InfeasibleState,
                          "promise " + rat_str(w) + " above the ceiling at p=" + rat_str(p));
    }
    const CandidateSet cs = build_candidates(a, grid);
    int warm[3] = {static_cast<int>(cs.anchor0), static_cast<int>(cs.anchor1), -1};
    std::size_t failures = 0;
    const double value = solve_cell(cs, p, w, warm, &failures);
    if (support != nullptr) {
        support->clear();
        Rat lam[3];
        const bool exact = exact_recheck(cs, warm, p, w, lam);
        double inv[3][3], x[3];
        const double rhs[3] = {1.0, rat_double(p), rat_double(w)};
        if (!exact) basis_solution(cs, warm, rhs, inv, x);
        for (int k = 0; k < 3; ++k) {
            if (warm[k] < 0) continue;
            const double weight = exact ? rat_double(lam[k]) : x[k];
            if (weight <= 0) continue;
            const auto c = static_cast<std::size_t>(warm[k]);
            support->push_back({grid.ps[cs.col[c]], grid.w_node(cs.col[c], cs.row[c]),
                                cs.act[c], weight});
        }
    }
    return value;
}

double grid_value_at(const Grid& grid, const Rat& p, const Rat& w) {
    if (p < 0 || p > 1) {
        throw SolverError(Errc::OutsideW, "belief " + rat_str(p) + " outside [0,1]");
    }
    const auto it = std::upper_bound(grid.ps.begin(), grid.ps.end(), p);
    std::size_t hi = static_cast<std::size_t>(it - grid.ps.begin());
    if (hi > grid.np) hi = grid.np;
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double t = rat_double((p - grid.ps[lo]) / (grid.ps[hi] - grid.ps[lo]));

    // Normalized height of the promise inside the (interpolated) fiber.
    const double m_here =
        (1 - t) * rat_double(grid.m_of[lo]) + t * rat_double(grid.m_of[hi]);
    const double span_here =
        (1 - t) * rat_double(grid.span[lo]) + t * rat_double(grid.span[hi]);
    double tau = span_here > 0 ? (rat_double(w) - m_here) / span_here : 0.0;
    tau = std::clamp(tau, 0.0, 1.0);

    const auto column_read = [&](std::size_t i) {
        const double jf = tau * static_cast<double>(grid.nw);
        const auto j0 = static_cast<std::size_t>(std::floor(jf));
        const std::size_t j1 = std::min(j0 + 1, grid.nw);
        const double frac = jf - static_cast<double>(j0);
        return (1 - frac) * grid.V[i][j0] + frac * grid.V[i][j1];
    };
    return (1 - t) * column_read(lo) + t * column_read(hi);
}

std::vector<SupportPoint> caratheodory_support(std::vector<SupportPoint> points) {
    points.erase(std::remove_if(points.begin(), points.end(),
                                [](const SupportPoint& s) { return s.weight == 0; }),
                 points.end());
    while (points.size() > 3) {
        // Null direction over the first four points preserving total weight,
        // mean belief, and the objective.
        const std::size_t k = 4;
        Rat rows[3][4];
        for (std::size_t c = 0; c < k; ++c) {
            rows[0][c] = 1;
            rows[1][c] = points[c].p;
            rows[2][c] = points[c].g;
        }
        Rat z[4] = {Rat(0), Rat(0), Rat(0), Rat(0)};
        {
            // Gaussian elimination to reduced form; the free column yields z.
            std::size_t pivot_col[3] = {0, 0, 0};
            std::size_t rank = 0;
            for (std::size_t c = 0; c < k && rank < 3; ++c) {
                std::size_t sel = rank;
                while (sel < 3 && rows[sel][c] == 0) ++sel;
                if (sel == 3) continue;
                for (std::size_t cc = 0; cc < k; ++cc) {
                    std::swap(rows[rank][cc], rows[sel][cc]);
                }
                const Rat piv = rows[rank][c];
                for (std::size_t cc = 0; cc < k; ++cc) rows[rank][cc] /= piv;
                for (std::size_t r = 0; r < 3; ++r) {
                    if (r == rank || rows[r][c] == 0) continue;
                    const Rat f = rows[r][c];
                    for (std::size_t cc = 0; cc < k; ++cc) {
                        rows[r][cc] -= f * rows[rank][cc];
                    }
                }
                pivot_col[rank] = c;
                ++rank;
            }
            // Choose the first non-pivot column as the free variable.
            bool is_pivot[4] = {false, false, false, false};
            for (std::size_t r = 0; r < rank; ++r) is_pivot[pivot_col[r]] = true;
            std::size_t free_col = 0;
            while (free_col < k && is_pivot[free_col]) ++free_col;
            z[free_col] = 1;
            for (std::size_t r = 0; r < rank; ++r) {
                z[pivot_col[r]] = -rows[r][free_col];
            }
        }
        Rat dh(0);
        for (std::size_t c = 0; c < k; ++c) dh += z[c] * points[c].h;
        if (dh < 0) {
            for (auto& zc : z) zc = -zc;
        }
        bool has_negative = false;
        Rat tmax(0);
        for (std::size_t c = 0; c < k; ++c) {
            if (z[c] < 0) {
                const Rat bound = points[c].weight / -z[c];
                if (!has_negative || bound < tmax) tmax = bound;
                has_negative = true;
            }
        }
        if (!has_negative) {  // impossible: z != 0 and its entries sum to 0
            throw SolverError(Errc::DegenerateSystem, "support reduction found no descent");
        }
        for (std::size_t c = 0; c < k; ++c) {
            points[c].weight += tmax * z[c];
        }
        points.erase(std::remove_if(points.begin(), points.end(),
                                    [](const SupportPoint& s) { return s.weight == 0; }),
                     points.end());
    }
    return points;
}

OracleComparison compare_with_exact(const Analysis& a, const Rat& q, std::size_t np,
                                    std::size_t nw, double tol, std::size_t max_iters,
                                    bool parallel) {
    OracleComparison out;
    Grid g = make_grid(a, np, nw);
    g = value_iterate(a, std::move(g), tol, max_iters, &out.report, parallel);
    const Rat& p0 = a.problem.prior;
    const Rat m0 = a.env.eval_m(p0);
    out.grid_value = grid_value_at(g, p0, m0);
    PolicySolver solver(a, q);
    out.exact_value = rat_double(solver.value({p0, m0}));
    out.gap = std::abs(out.grid_value - out.exact_value);
    return out;
}

}  // namespace persuade
