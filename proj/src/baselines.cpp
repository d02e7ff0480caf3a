#include "persuade/baselines.hpp"

#include <cmath>

#include "persuade/errors.hpp"

namespace persuade {

namespace {

// Total agent payoff of a (weight, posterior) split when the agent best
// replies at every posterior.
Rat split_agent_value(const Envelopes& env, const std::vector<std::pair<Rat, Rat>>& split) {
    Rat total(0);
    for (const auto& [weight, posterior] : split) {
        total += weight * env.eval_m(posterior);
    }
    return total;
}

void require_in_Q1(const Analysis& a, const char* policy) {
    const Rat& p0 = a.problem.prior;
    if (!a.ladder.has_Q1() || p0 < a.ladder.Q1().lo || p0 > a.ladder.Q1().hi) {
        throw SolverError(Errc::PriorOutsideQ1,
                          std::string(policy) + ": prior " + rat_str(p0) +
                              " admits no persuasion cutoff");
    }
}

}  // namespace

BaselineResult kg_value(const Analysis& a) {
    const Rat& p0 = a.problem.prior;
    BaselineResult res;
    res.policy = "kg";
    if (!a.env.P.has_value()) {
        res.split = {{Rat(1), p0}};
        res.principal_value = 0;
    } else if (a.env.in_P(p0)) {
        res.split = {{Rat(1), p0}};
        res.principal_value = a.problem.v_star(p0);
    } else if (p0 < a.env.P->lo) {
        const Rat& lo = a.env.P->lo;
        res.split = {{1 - p0 / lo, Rat(0)}, {p0 / lo, lo}};
        res.principal_value = p0 / lo * a.problem.v_star(lo);
    } else {
        const Rat& hi = a.env.P->hi;
        const Rat weight = (1 - p0) / (1 - hi);
        res.split = {{weight, hi}, {1 - weight, Rat(1)}};
        res.principal_value = weight * a.problem.v_star(hi);
    }
    res.agent_value = split_agent_value(a.env, res.split);
    return res;
}

BaselineResult random_disclosure(const Analysis& a) {
    const Rat& p0 = a.problem.prior;
    const Rat& delta = a.problem.discount;
    BaselineResult res;
    res.policy = "random";
    res.agent_value = a.env.eval_m(p0);
    if (a.env.in_P(p0)) {
        res.alpha = Rat(0);
        res.principal_value = a.problem.v_star(p0);
        return res;
    }
    require_in_Q1(a, "random");
    const Rat gap = a.env.eval_M(p0) - a.env.eval_m(p0);
    const Rat alpha =
        (1 - delta) / delta * (a.env.eval_m(p0) - a.problem.u_star(p0)) / gap;
    res.alpha = alpha;
    Rat disclosed(0);
    if (a.env.in_P(Rat(0))) {
        disclosed = (1 - p0) * a.problem.principal_payoff[0];
    }
    res.principal_value = ((1 - delta) * a.problem.v_star(p0) + delta * alpha * disclosed) /
                          (1 - delta * (1 - alpha));
    return res;
}

BaselineResult delayed_disclosure(const Analysis& a) {
    const Rat& p0 = a.problem.prior;
    const Rat& delta = a.problem.discount;
    BaselineResult res;
    res.policy = "delayed";
    if (a.env.in_P(p0)) {
        res.unbounded = true;
        res.principal_value = a.problem.v_star(p0);
        res.agent_value = a.env.eval_m(p0);
        return res;
    }
    require_in_Q1(a, "delayed");
    // Largest T with delta^T >= rho, where rho is the compensation the agent
    // needs relative to the full-disclosure continuation.
    const Rat rho = (a.env.eval_m(p0) - a.problem.u_star(p0)) /
                    (a.env.eval_M(p0) - a.problem.u_star(p0));
    long long guess = static_cast<long long>(
        std::floor(std::log(rat_double(rho)) / std::log(rat_double(delta))));
    if (guess < 1) guess = 1;
    while (rat_pow(delta, static_cast<unsigned long>(guess)) < rho) --guess;
    while (rat_pow(delta, static_cast<unsigned long>(guess + 1)) >= rho) ++guess;
    const Rat dT = rat_pow(delta, static_cast<unsigned long>(guess));
    res.T_star = guess;
    res.principal_value = (1 - dT) * a.problem.v_star(p0);
    res.agent_value = (1 - dT) * a.problem.u_star(p0) + dT * a.env.eval_M(p0);
    return res;
}

BaselineResult first_best(const Analysis& a) {
    const Rat& p0 = a.problem.prior;
    const Rat g0 = a.env.eval_m(Rat(0)) - a.problem.u(a.problem.target, Rat(0));
    const Rat g1 = a.env.eval_m(Rat(1)) - a.problem.u(a.problem.target, Rat(1));
    const Rat v0 = a.problem.principal_payoff[0];
    const Rat v1 = a.problem.principal_payoff[1];
    Rat budget = a.env.eval_M(p0) - a.env.eval_m(p0);

    // Maximize p0*a1*v1 + (1-p0)*a0*v0 subject to the participation budget
    // p0*a1*g1 + (1-p0)*a0*g0 <= budget: free states first, then the state
    // with the better value-per-cost ratio, remainder to the other.
    Rat a0(0), a1(0);
    const auto buy = [&](const Rat& cost_rate, const Rat& mass) -> Rat {
        if (cost_rate == 0) return Rat(1);
        const Rat full = mass * cost_rate;
        if (full <= budget) {
            budget -= full;
            return Rat(1);
        }
        const Rat frac = budget / full;
        budget = 0;
        return frac;
    };
    if (v0 * g1 >= v1 * g0) {
        a0 = buy(g0, 1 - p0);
        if (a0 == 1) a1 = buy(g1, p0);
    } else {
        a1 = buy(g1, p0);
        if (a1 == 1) a0 = buy(g0, 1 - p0);
    }

    BaselineResult res;
    res.policy = "first_best";
    res.alphas = {a0, a1};
    res.principal_value = p0 * a1 * v1 + (1 - p0) * a0 * v0;
    res.agent_value = a.env.eval_M(p0) - p0 * a1 * g1 - (1 - p0) * a0 * g0;
    return res;
}

}  // namespace persuade
