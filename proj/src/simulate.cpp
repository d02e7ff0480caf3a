#include "persuade/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <utility>

#include "persuade/baselines.hpp"
#include "persuade/envelopes.hpp"
#include "persuade/errors.hpp"

namespace persuade {

namespace {

// Recommended play at a state with no further disclosure: the target action
// wherever it is a best reply, otherwise the agent's static best reply.
std::size_t obedient_action(const Analysis& a, const Rat& p) {
    return a.env.in_P(p) ? a.problem.target : best_reply(a.problem, p);
}

Rat principal_flow(const Problem& pr, std::size_t action, bool omega1) {
    return action == pr.target ? pr.principal_payoff[omega1 ? 1 : 0] : Rat(0);
}

Rat agent_flow(const Problem& pr, std::size_t action, bool omega1) {
    return pr.agent_payoff[action][omega1 ? 1 : 0];
}

Absorption absorption_kind(const Analysis& a, const Rat& p) {
    if (p == 0) return Absorption::Degenerate0;
    if (p == 1) return Absorption::Degenerate1;
    (void)a;
    return Absorption::PAbsorbed;
}

// P(branch | omega): lambda scaled by the posterior likelihood ratio.
Rat branch_prob_given_state(const SplitOutcome& s, const Rat& p, bool omega1) {
    if (p == 0 || p == 1) return s.prob;  // degenerate: the split is trivial
    if (omega1) return s.prob * s.posterior / p;
    return s.prob * (1 - s.posterior) / (1 - p);
}

void check_horizon(const SimPolicy& policy, std::size_t horizon) {
    if (horizon < 1) {
        throw SolverError(Errc::HorizonTooSmall, "horizon must be at least 1");
    }
    if (policy.absorb_bound &&
        static_cast<long long>(horizon) < *policy.absorb_bound + 1) {
        throw SolverError(Errc::HorizonTooSmall,
                          "horizon " + std::to_string(horizon) + " does not exceed the " +
                              policy.name + " policy's absorption time " +
                              std::to_string(*policy.absorb_bound));
    }
}

}  // namespace

const char* absorption_name(Absorption a) {
    switch (a) {
        case Absorption::Degenerate0: return "degenerate-0";
        case Absorption::Degenerate1: return "degenerate-1";
        case Absorption::PAbsorbed: return "absorbed";
        case Absorption::HorizonTruncated: return "horizon-truncated";
    }
    return "unknown";
}

SimPolicy make_optimal_policy(const Analysis& analysis, const Rat& q) {
    auto solver = std::make_shared<PolicySolver>(analysis, q);
    SimPolicy policy;
    policy.name = "optimal";
    const Rat& p0 = analysis.problem.prior;
    policy.start = {p0, analysis.env.eval_m(p0)};
    policy.absorb_bound = t_delta(analysis, p0);
    policy.split_at = [solver](const StatePoint& s) -> std::optional<PolicyStep> {
        if (solver->classify(s) == Region::Absorbed) return std::nullopt;
        return solver->step(s);
    };
    return policy;
}

SimPolicy make_kg_policy(const Analysis& analysis) {
    const BaselineResult kg = kg_value(analysis);
    const Rat p0 = analysis.problem.prior;
    PolicyStep step;
    for (const auto& [weight, posterior] : kg.split) {
        if (weight == 0) continue;
        step.push_back({weight, posterior, analysis.env.eval_m(posterior),
                        obedient_action(analysis, posterior)});
    }
    const bool degenerate = step.size() == 1 && step.front().posterior == p0;
    SimPolicy policy;
    policy.name = "kg";
    policy.start = {p0, analysis.env.eval_m(p0)};
    policy.absorb_bound = degenerate ? 0 : 1;
    policy.split_at = [p0, step, degenerate](const StatePoint& s)
        -> std::optional<PolicyStep> {
        if (!degenerate && s.p == p0) return step;
        return std::nullopt;
    };
    return policy;
}

SimPolicy make_random_policy(const Analysis& analysis) {
    const BaselineResult rd = random_disclosure(analysis);
    const Rat alpha = rd.alpha.value_or(Rat(0));
    const Rat p0 = analysis.problem.prior;
    SimPolicy policy;
    policy.name = "random";
    if (alpha == 0) {  // prior already persuaded: no disclosure ever
        policy.start = {p0, analysis.env.eval_m(p0)};
        policy.absorb_bound = 0;
        policy.split_at = [](const StatePoint&) -> std::optional<PolicyStep> {
            return std::nullopt;
        };
        return policy;
    }
    // Period 1 acts at the prior; the disclosure lottery applies between
    // periods.  The lottery state (p0, bold_w(p0)) re-promises itself on the
    // stay branch: alpha*M + (1-alpha)*m = bold_w is the alpha calibration,
    // so promise keeping is exact and obedience exactly indifferent.
    const Rat m0 = analysis.env.eval_m(p0);
    const Rat w_lottery = analysis.bold_w_at(p0);
    const std::size_t target = analysis.problem.target;
    const PolicyStep first{{Rat(1), p0, w_lottery, target}};
    PolicyStep lottery;
    if (alpha * (1 - p0) > 0) {
        lottery.push_back({alpha * (1 - p0), Rat(0), analysis.env.eval_m(Rat(0)),
                           obedient_action(analysis, Rat(0))});
    }
    if (alpha * p0 > 0) {
        lottery.push_back({alpha * p0, Rat(1), analysis.env.eval_m(Rat(1)),
                           obedient_action(analysis, Rat(1))});
    }
    if (alpha < 1) {
        lottery.push_back({1 - alpha, p0, w_lottery, target});
    }
    policy.start = {p0, m0};
    if (alpha == 1) policy.absorb_bound = 2;
    policy.split_at = [p0, m0, w_lottery, first, lottery](const StatePoint& s)
        -> std::optional<PolicyStep> {
        if (s.p == p0 && s.w == m0) return first;
        if (s.p == p0 && s.w == w_lottery) return lottery;
        return std::nullopt;
    };
    return policy;
}

SimPolicy make_delayed_policy(const Analysis& analysis) {
    const BaselineResult dd = delayed_disclosure(analysis);
    const Rat p0 = analysis.problem.prior;
    SimPolicy policy;
    policy.name = "delayed";
    if (dd.unbounded) {  // prior persuaded: disclosure is postponed forever
        policy.start = {p0, analysis.env.eval_m(p0)};
        policy.absorb_bound = 0;
        policy.split_at = [](const StatePoint&) -> std::optional<PolicyStep> {
            return std::nullopt;
        };
        return policy;
    }
    const long long T = dd.T_star.value();
    const Rat& delta = analysis.problem.discount;
    const Rat u0 = analysis.problem.u_star(p0);
    const Rat M0 = analysis.env.eval_M(p0);
    // chain[k]: agent continuation with k silent periods left before full
    // disclosure; strictly decreasing in k, so it doubles as the countdown.
    std::vector<Rat> chain(static_cast<std::size_t>(T) + 1);
    for (std::size_t k = 0; k <= static_cast<std::size_t>(T); ++k) {
        const Rat dk = rat_pow(delta, static_cast<unsigned long>(k));
        chain[k] = (1 - dk) * u0 + dk * M0;
    }
    PolicyStep disclose;
    if (p0 < 1) {
        disclose.push_back({1 - p0, Rat(0), analysis.env.eval_m(Rat(0)),
                            obedient_action(analysis, Rat(0))});
    }
    if (p0 > 0) {
        disclose.push_back({p0, Rat(1), analysis.env.eval_m(Rat(1)),
                            obedient_action(analysis, Rat(1))});
    }
    policy.start = {p0, chain[static_cast<std::size_t>(T)]};
    policy.absorb_bound = T + 1;
    const std::size_t target = analysis.problem.target;
    policy.split_at = [p0, chain, disclose, target](const StatePoint& s)
        -> std::optional<PolicyStep> {
        if (s.p != p0) return std::nullopt;
        for (std::size_t k = 0; k < chain.size(); ++k) {
            if (s.w == chain[k]) {
                if (k == 0) return disclose;
                return PolicyStep{{Rat(1), p0, chain[k - 1], target}};
            }
        }
        return std::nullopt;
    };
    return policy;
}

Trajectory run_trajectory(const Analysis& analysis, const SimPolicy& policy,
                          std::optional<bool> omega, std::size_t horizon,
                          std::uint64_t seed, std::uint64_t stream) {
    check_horizon(policy, horizon);
    const Problem& pr = analysis.problem;
    const Rat& delta = pr.discount;
    CounterRng rng(seed, stream);

    Trajectory tr;
    tr.seed = seed;
    tr.stream = stream;
    tr.omega1 = omega ? *omega : rng.next_unit() < pr.prior;
    tr.principal_total = 0;
    tr.agent_total = 0;
    tr.principal_tail_bound = 0;
    tr.agent_tail_bound = 0;
    tr.periods.reserve(std::min<std::size_t>(horizon, 64));

    StatePoint state = policy.start;
    Rat dpow(1);  // delta^(t-1)
    for (std::size_t t = 1; t <= horizon; ++t) {
        const auto split = policy.split_at(state);
        if (!split) {
            // Absorbing state: one record, and the whole discounted tail.
            const std::size_t action = obedient_action(analysis, state.p);
            const Rat pf = principal_flow(pr, action, tr.omega1);
            const Rat af = agent_flow(pr, action, tr.omega1);
            tr.principal_total += dpow * pf;
            tr.agent_total += dpow * af;
            tr.periods.push_back({state.p, 0, state.p, state.w, action, pf, af});
            tr.absorption = absorption_kind(analysis, state.p);
            return tr;
        }
        const Rat u = rng.next_unit();
        std::size_t pick = split->size() - 1;
        Rat cum(0);
        for (std::size_t s = 0; s < split->size(); ++s) {
            cum += branch_prob_given_state((*split)[s], state.p, tr.omega1);
            if (u < cum) {
                pick = s;
                break;
            }
        }
        const SplitOutcome& chosen = (*split)[pick];
        const Rat pf = principal_flow(pr, chosen.action, tr.omega1);
        const Rat af = agent_flow(pr, chosen.action, tr.omega1);
        tr.principal_total += (1 - delta) * dpow * pf;
        tr.agent_total += (1 - delta) * dpow * af;
        tr.periods.push_back({state.p, pick, chosen.posterior, chosen.promised_w,
                              chosen.action, pf, af});
        state = {chosen.posterior, chosen.promised_w};
        dpow *= delta;
    }

    tr.absorption = Absorption::HorizonTruncated;
    Rat vmax = std::max(pr.principal_payoff[0], pr.principal_payoff[1]);
    Rat umax(0);
    for (const auto& row : pr.agent_payoff) {
        umax = std::max({umax, rat_abs(row[0]), rat_abs(row[1])});
    }
    tr.principal_tail_bound = dpow * vmax;  // dpow is now delta^horizon
    tr.agent_tail_bound = dpow * umax;
    return tr;
}

MonteCarloResult monte_carlo_value(const Analysis& analysis, const SimPolicy& policy,
                                   std::size_t n_paths, std::size_t horizon,
                                   std::uint64_t seed) {
    if (n_paths < 1) {
        throw SolverError(Errc::OutOfDomain, "need at least one path");
    }
    check_horizon(policy, horizon);

    std::vector<double> vs(n_paths), us(n_paths);
    std::vector<unsigned char> truncated(n_paths, 0);
    std::vector<double> vtail(n_paths, 0.0), utail(n_paths, 0.0);
    std::atomic<bool> failed{false};

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < n_paths; ++i) {
        try {
            const Trajectory tr =
                run_trajectory(analysis, policy, std::nullopt, horizon, seed, i);
            vs[i] = rat_double(tr.principal_total);
            us[i] = rat_double(tr.agent_total);
            if (tr.absorption == Absorption::HorizonTruncated) {
                truncated[i] = 1;
                vtail[i] = rat_double(tr.principal_tail_bound);
                utail[i] = rat_double(tr.agent_tail_bound);
            }
        } catch (const SolverError&) {
            failed = true;
        }
    }
    if (failed) {
        throw SolverError(Errc::OutOfDomain, "a sampled path hit an unreachable state");
    }

    MonteCarloResult out;
    out.n_paths = n_paths;
    out.seed = seed;
    for (std::size_t i = 0; i < n_paths; ++i) {
        out.principal_mean += vs[i];
        out.agent_mean += us[i];
        out.truncated_paths += truncated[i];
        out.principal_tail_bound = std::max(out.principal_tail_bound, vtail[i]);
        out.agent_tail_bound = std::max(out.agent_tail_bound, utail[i]);
    }
    const auto n = static_cast<double>(n_paths);
    out.principal_mean /= n;
    out.agent_mean /= n;
    if (n_paths > 1) {
        double sv = 0, su = 0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            sv += (vs[i] - out.principal_mean) * (vs[i] - out.principal_mean);
            su += (us[i] - out.agent_mean) * (us[i] - out.agent_mean);
        }
        out.principal_stderr = std::sqrt(sv / (n * (n - 1)));
        out.agent_stderr = std::sqrt(su / (n * (n - 1)));
    }
    return out;
}

std::vector<TreeNode> expand_tree(const SimPolicy& policy, std::size_t depth) {
    std::vector<TreeNode> nodes;
    std::map<std::pair<Rat, Rat>, bool> seen;
    std::vector<std::pair<StatePoint, std::size_t>> queue{{policy.start, 0}};
    seen[{policy.start.p, policy.start.w}] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto [state, d] = queue[head];
        TreeNode node{state, policy.split_at(state), d};
        if (node.split && d < depth) {
            for (const auto& branch : *node.split) {
                const std::pair<Rat, Rat> key{branch.posterior, branch.promised_w};
                if (!seen.count(key)) {
                    seen[key] = true;
                    queue.push_back({{branch.posterior, branch.promised_w}, d + 1});
                }
            }
        }
        nodes.push_back(std::move(node));
    }
    return nodes;
}

IcReport audit_ic(const Analysis& analysis, const SimPolicy& policy, std::size_t depth) {
    const Rat& delta = analysis.problem.discount;
    IcReport rep;
    for (const TreeNode& node : expand_tree(policy, depth)) {
        if (!node.split) {
            ++rep.absorbed_nodes;
            continue;
        }
        ++rep.nodes;
        const Rat& p = node.state.p;
        Rat total(0), delivered(0);
        for (std::size_t s = 0; s < node.split->size(); ++s) {
            const SplitOutcome& b = (*node.split)[s];
            if (b.prob <= 0) {
                rep.violations.push_back({node.state, s, "distribution", rat_abs(b.prob)});
                continue;
            }
            total += b.prob;
            if (b.posterior < 0 || b.posterior > 1) {
                rep.violations.push_back({node.state, s, "posterior-range", rat_abs(b.posterior)});
                continue;
            }
            const Rat mp = analysis.env.eval_m(b.posterior);
            const Rat Mp = analysis.env.eval_M(b.posterior);
            if (b.promised_w < mp || b.promised_w > Mp) {
                const Rat breach =
                    b.promised_w < mp ? mp - b.promised_w : b.promised_w - Mp;
                rep.violations.push_back({node.state, s, "promise-range", breach});
                continue;
            }
            // One-shot obedience: acting as recommended and collecting the
            // promise beats the withheld-information payoff m(posterior).
            const Rat h =
                (1 - delta) * analysis.problem.u(b.action, b.posterior) + delta * b.promised_w;
            if (h < mp) {
                rep.violations.push_back({node.state, s, "obedience", mp - h});
            }
            if (b.action == analysis.problem.target) {
                ++rep.target_branches;
                if (h == mp) ++rep.binding_target_branches;
            }
            delivered += b.prob * h;
        }
        if (total != 1) {
            rep.violations.push_back(
                {node.state, 0, "distribution", rat_abs(total - 1)});
        }
        if (delivered < node.state.w) {
            rep.violations.push_back(
                {node.state, 0, "promise-keeping", node.state.w - delivered});
        } else if (delivered == node.state.w) {
            ++rep.exact_promise_nodes;
        }
    }
    return rep;
}

MartingaleTreeReport audit_martingale(const SimPolicy& policy, std::size_t depth) {
    MartingaleTreeReport rep;
    for (const TreeNode& node : expand_tree(policy, depth)) {
        if (!node.split) continue;
        ++rep.nodes;
        Rat mean(0);
        for (const auto& b : *node.split) mean += b.prob * b.posterior;
        if (mean != node.state.p) {
            rep.violations.push_back(
                {node.state, 0, "martingale", rat_abs(mean - node.state.p)});
        }
    }
    return rep;
}

MartingalePathReport audit_martingale(const std::vector<Trajectory>& paths,
                                      std::size_t period, const Rat& prior) {
    MartingalePathReport rep;
    rep.n_paths = paths.size();
    if (paths.empty() || period < 1) return rep;
    std::vector<double> beliefs;
    beliefs.reserve(paths.size());
    for (const Trajectory& tr : paths) {
        const std::size_t idx = std::min(period, tr.periods.size()) - 1;
        beliefs.push_back(rat_double(tr.periods[idx].belief_after));
    }
    const bool degenerate =
        std::all_of(beliefs.begin(), beliefs.end(),
                    [&](double b) { return b == beliefs.front(); });
    if (degenerate) {  // constant beliefs: no sampling noise to estimate
        rep.mean = beliefs.front();
        const double gap = std::abs(rep.mean - rat_double(prior));
        rep.sigmas = gap > 0 ? 1e18 : 0.0;
        rep.ok = gap == 0;
        return rep;
    }
    const auto n = static_cast<double>(beliefs.size());
    for (double b : beliefs) rep.mean += b;
    rep.mean /= n;
    double s = 0;
    for (double b : beliefs) s += (b - rep.mean) * (b - rep.mean);
    rep.stderr_mean = std::sqrt(s / (n * (n - 1)));
    const double gap = std::abs(rep.mean - rat_double(prior));
    rep.sigmas = rep.stderr_mean > 0 ? gap / rep.stderr_mean : (gap > 0 ? 1e18 : 0.0);
    rep.ok = rep.sigmas <= 3.0;
    return rep;
}

}  // namespace persuade
