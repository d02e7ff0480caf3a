#include "persuade/envelopes.hpp"

#include <algorithm>
#include <set>

#include "persuade/errors.hpp"

namespace persuade {

namespace {

void check_domain(const Rat& p) {
    if (p < 0 || p > 1) throw SolverError(Errc::OutOfDomain, "belief outside [0,1]");
}

}  // namespace

Rat chord_at(const Rat& x0, const Rat& y0, const Rat& x1, const Rat& y1, const Rat& x) {
    return y0 + (x - x0) * (y1 - y0) / (x1 - x0);
}

Rat PiecewiseLinearConvex::eval(const Rat& p) const {
    std::size_t i = piece_index(p);
    const Kink& a = kinks[i];
    const Kink& b = kinks[i + 1];
    return chord_at(a.p, a.value, b.p, b.value, p);
}

std::size_t PiecewiseLinearConvex::piece_index(const Rat& p) const {
    check_domain(p);
    for (std::size_t i = 0; i + 2 < kinks.size(); ++i)
        if (p < kinks[i + 1].p) return i;
    return kinks.size() - 2;
}

bool PiecewiseLinearConvex::is_convex() const {
    if (kinks.size() < 2) return false;
    for (std::size_t i = 0; i + 1 < kinks.size(); ++i)
        if (kinks[i].p >= kinks[i + 1].p) return false;
    for (std::size_t i = 0; i + 2 < kinks.size(); ++i) {
        // slope_i <= slope_{i+1} without division
        Rat lhs = (kinks[i + 1].value - kinks[i].value) * (kinks[i + 2].p - kinks[i + 1].p);
        Rat rhs = (kinks[i + 2].value - kinks[i + 1].value) * (kinks[i + 1].p - kinks[i].p);
        if (lhs > rhs) return false;
    }
    return true;
}

Rat Envelopes::eval_M(const Rat& p) const {
    check_domain(p);
    return (1 - p) * M_line[0] + p * M_line[1];
}

Rat Envelopes::eval_u_star(const Rat& p) const {
    check_domain(p);
    return (1 - p) * u_star_line[0] + p * u_star_line[1];
}

std::size_t best_reply(const Problem& problem, const Rat& p) {
    std::size_t best = 0;
    Rat best_val = problem.u(0, p);
    for (std::size_t a = 1; a < problem.actions.size(); ++a) {
        Rat val = problem.u(a, p);
        if (val > best_val) {
            best = a;
            best_val = val;
        }
    }
    return best;
}

Envelopes build_envelopes(const Problem& problem) {
    const std::size_t n = problem.actions.size();

    // Breakpoint candidates: 0, 1, and every pairwise line intersection.
    std::set<Rat> points{Rat(0), Rat(1)};
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            // u(a,p) = u(b,p): linear in p.
            Rat sa = problem.agent_payoff[a][1] - problem.agent_payoff[a][0];
            Rat sb = problem.agent_payoff[b][1] - problem.agent_payoff[b][0];
            if (sa == sb) continue;
            Rat x = (problem.agent_payoff[b][0] - problem.agent_payoff[a][0]) / (sa - sb);
            if (x > 0 && x < 1) points.insert(x);
        }
    }
    std::vector<Rat> xs(points.begin(), points.end());

    // Winner per interval, then merge intervals with equal winners.
    std::vector<std::size_t> winner(xs.size() - 1);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        Rat mid = (xs[i] + xs[i + 1]) / 2;
        winner[i] = best_reply(problem, mid);
    }

    Envelopes env;
    auto add_kink = [&](const Rat& x, std::size_t action) {
        env.m.kinks.push_back({x, problem.u(action, x), action});
    };
    add_kink(xs.front(), winner.front());
    for (std::size_t i = 1; i + 1 < xs.size(); ++i)
        if (winner[i] != winner[i - 1]) add_kink(xs[i], winner[i]);
    env.m.kinks.push_back({Rat(1), problem.u(winner.back(), Rat(1)), winner.back()});

    env.M_line = {env.m.kinks.front().value, env.m.kinks.back().value};
    env.u_star_line = {problem.agent_payoff[problem.target][0],
                       problem.agent_payoff[problem.target][1]};

    // P = zero set of the convex gap m - u(a*,.); affine between kinks, so it
    // is spanned by the kinks where the gap vanishes (a piece interior zero
    // forces the whole piece to zero, hence both of its kinks).
    std::optional<Rat> lo, hi;
    for (const auto& k : env.m.kinks) {
        Rat u_star = (1 - k.p) * env.u_star_line[0] + k.p * env.u_star_line[1];
        if (k.value == u_star) {
            if (!lo) lo = k.p;
            hi = k.p;
        }
    }
    if (lo) env.P = Interval{*lo, *hi};
    return env;
}

Rat bold_w(const Envelopes& env, const Rat& delta, const Rat& p) {
    Rat mp = env.eval_m(p);
    return (mp - (1 - delta) * env.eval_u_star(p)) / delta;
}

PiecewiseLinearConvex m_bar(const Envelopes& env, const Rat& q1_lo, const Rat& q) {
    if (!(0 <= q1_lo && q1_lo <= q && q <= 1))
        throw SolverError(Errc::InvalidCutoffs, "need 0 <= q1_lo <= q <= 1");
    PiecewiseLinearConvex out;
    auto push = [&](const Rat& x, const Rat& v, std::size_t action) {
        if (!out.kinks.empty() && out.kinks.back().p == x) return;
        out.kinks.push_back({x, v, action});
    };
    push(Rat(0), env.m.kinks.front().value, PiecewiseLinearConvex::npos);
    // Middle branch: m itself on [q1_lo, q].
    push(q1_lo, env.eval_m(q1_lo), PiecewiseLinearConvex::npos);
    for (const auto& k : env.m.kinks)
        if (k.p > q1_lo && k.p < q) push(k.p, k.value, k.piece_action);
    push(q, env.eval_m(q), PiecewiseLinearConvex::npos);
    push(Rat(1), env.m.kinks.back().value, PiecewiseLinearConvex::npos);
    // Fix up labels: kinks interior to (q1_lo, q) keep m's labels; the kink at
    // q1_lo labels the piece starting there with m's action when q > q1_lo.
    if (q > q1_lo)
        for (auto& k : out.kinks)
            if (k.p >= q1_lo && k.p < q && k.piece_action == PiecewiseLinearConvex::npos)
                k.piece_action = env.m.kinks[env.m.piece_index(k.p)].piece_action;
    return out;
}

}  // namespace persuade
