#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "persuade/baselines.hpp"
#include "persuade/errors.hpp"
#include "persuade/rng.hpp"
#include "persuade/simulate.hpp"

using namespace persuade;

namespace {

Rat r(long n, long d) { return rat(n, d); }

// Expected discounted principal payoff of the first `depth` periods plus the
// exact tails of absorbed states; the true value lies within delta^depth of it.
Rat tree_expected_value(const Analysis& an, const SimPolicy& policy,
                        const StatePoint& state, const Rat& path_prob,
                        std::size_t depth_left, const Rat& dpow) {
    const Rat delta = an.problem.discount;
    const auto split = policy.split_at(state);
    if (!split) {
        const std::size_t a = an.env.in_P(state.p) ? an.problem.target
                                                   : best_reply(an.problem, state.p);
        if (a != an.problem.target) return Rat(0);
        return path_prob * dpow * an.problem.v_star(state.p);
    }
    if (depth_left == 0) return Rat(0);
    Rat total(0);
    for (const auto& b : *split) {
        Rat flow(0);
        if (b.action == an.problem.target) {
            flow = (1 - delta) * dpow * an.problem.v_star(b.posterior);
        }
        total += path_prob * b.prob * flow;
        total += tree_expected_value(an, policy, {b.posterior, b.promised_w},
                                     path_prob * b.prob, depth_left - 1,
                                     dpow * delta);
    }
    return total;
}

}  // namespace

TEST_CASE("counter rng is deterministic and splittable") {
    CounterRng a(42, 7), b(42, 7), c(42, 8);
    for (int i = 0; i < 32; ++i) {
        const std::uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CounterRng d(42, 7);
    for (int i = 0; i < 32; ++i) {
        const Rat u = d.next_unit();
        CHECK(u >= 0);
        CHECK(u < 1);
    }
}

TEST_CASE("reference path: beliefs descend the split chain and reveal the state") {
    const Analysis an = analyze(testutil::three_action());
    const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));
    CHECK(opt.absorb_bound.value() == 4);

    const Trajectory tr = run_trajectory(an, opt, true, 60, 20);
    REQUIRE(tr.periods.size() == 6);
    const Rat beliefs[6] = {r(1, 3), r(3, 11), r(7, 39), r(1, 6), r(1, 1), r(1, 1)};
    const Rat promises[6] = {r(5, 6), r(21, 22), r(89, 78), r(7, 6), r(2, 1), r(2, 1)};
    for (int t = 0; t < 6; ++t) {
        CHECK(tr.periods[t].belief_after == beliefs[t]);
        CHECK(tr.periods[t].promised_w == promises[t]);
    }
    for (int t = 0; t < 4; ++t) CHECK(tr.periods[t].action == an.problem.target);
    CHECK(tr.absorption == Absorption::Degenerate1);
    CHECK(tr.principal_total == r(15, 16));
    CHECK(tr.agent_total == r(19, 32));
    CHECK(tr.principal_tail_bound == 0);

    SUBCASE("the same path truncated at the gate's minimum horizon") {
        const Trajectory cut = run_trajectory(an, opt, true, 5, 20);
        CHECK(cut.absorption == Absorption::HorizonTruncated);
        CHECK(cut.periods.size() == 5);
        CHECK(cut.principal_total == r(15, 16));
        CHECK(cut.agent_total == r(17, 32));
        CHECK(cut.principal_tail_bound == r(1, 32));
        CHECK(cut.agent_tail_bound == r(1, 16));
    }
    SUBCASE("horizons at or below the absorption bound are rejected") {
        CHECK_THROWS_AS(run_trajectory(an, opt, true, 4, 20), SolverError);
        CHECK_THROWS_AS(run_trajectory(an, opt, true, 0, 20), SolverError);
    }
}

TEST_CASE("persuaded prior absorbs immediately with the target action") {
    auto raw = testutil::two_action();
    raw.prior = r(1, 4);
    const Analysis an = analyze(raw);
    const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));
    const Trajectory tr = run_trajectory(an, opt, false, 10, 1);
    REQUIRE(tr.periods.size() == 1);
    CHECK(tr.absorption == Absorption::PAbsorbed);
    CHECK(tr.periods[0].action == an.problem.target);
    CHECK(tr.principal_total == 1);
    CHECK(tr.agent_total == 1);  // u(target, omega0) = 1 forever
}

TEST_CASE("two-action optimal play discloses through the jump split") {
    const Analysis an = analyze(testutil::two_action());
    const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));
    CHECK(!opt.absorb_bound.has_value());  // prior sits in the perpetual region

    // Under omega0, Bayes puts the whole mass on the 1/2 branch.
    const Trajectory tr = run_trajectory(an, opt, false, 30, 3);
    REQUIRE(tr.periods.size() == 2);
    CHECK(tr.periods[0].belief_after == r(1, 2));
    CHECK(tr.absorption == Absorption::PAbsorbed);
    CHECK(tr.principal_total == 1);
    CHECK(tr.agent_total == 1);
}

TEST_CASE("monte carlo estimates match the analytic values") {
    const Analysis an = analyze(testutil::three_action());
    const std::size_t n = 20000;

    SUBCASE("optimal policy") {
        const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));
        const MonteCarloResult mc = monte_carlo_value(an, opt, n, 60, 12345);
        CHECK(std::abs(mc.principal_mean - 1285.0 / 1536.0) <= 3 * mc.principal_stderr);
        CHECK(std::abs(mc.agent_mean - 2.0 / 3.0) <= 3 * mc.agent_stderr);
        CHECK(mc.truncated_paths == 0);
        const MonteCarloResult again = monte_carlo_value(an, opt, n, 60, 12345);
        CHECK(again.principal_mean == mc.principal_mean);
        CHECK(again.agent_mean == mc.agent_mean);
    }
    SUBCASE("random disclosure") {
        const MonteCarloResult mc =
            monte_carlo_value(an, make_random_policy(an), n, 60, 12345);
        CHECK(std::abs(mc.principal_mean - 0.8) <= 3 * mc.principal_stderr);
        CHECK(std::abs(mc.agent_mean - 2.0 / 3.0) <= 3 * mc.agent_stderr);
    }
    SUBCASE("delayed disclosure pays a deterministic principal value") {
        const MonteCarloResult mc =
            monte_carlo_value(an, make_delayed_policy(an), n, 60, 12345);
        CHECK(mc.principal_mean == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(mc.principal_stderr == 0.0);
        CHECK(std::abs(mc.agent_mean - 17.0 / 24.0) <= 3 * mc.agent_stderr);
    }
    SUBCASE("one-shot disclosure is worthless here") {
        const MonteCarloResult mc =
            monte_carlo_value(an, make_kg_policy(an), n, 60, 12345);
        CHECK(mc.principal_mean == 0.0);
        CHECK(std::abs(mc.agent_mean - 2.0 / 3.0) <= 3 * mc.agent_stderr);
    }
}

TEST_CASE("monte carlo on the two-action instance") {
    const Analysis an = analyze(testutil::two_action());
    const std::size_t n = 20000;
    const MonteCarloResult opt =
        monte_carlo_value(an, make_optimal_policy(an, compute_q_star(an)), n, 60, 12345);
    CHECK(std::abs(opt.principal_mean - 0.8) <= 3 * opt.principal_stderr);
    CHECK(std::abs(opt.agent_mean - 0.6) <= 3 * opt.agent_stderr);

    const MonteCarloResult kg = monte_carlo_value(an, make_kg_policy(an), n, 60, 12345);
    CHECK(std::abs(kg.principal_mean - 0.8) <= 3 * kg.principal_stderr);
    CHECK(std::abs(kg.agent_mean - 0.6) <= 3 * kg.agent_stderr);

    // The delayed baseline's closed form ignores that revealing omega0 leaves
    // the agent persuaded here, so the simulated mean exceeds it: the honest
    // expectation is (1-delta)v* + delta*(1-p0)*v(a*,0) = 7/10.
    const MonteCarloResult dd =
        monte_carlo_value(an, make_delayed_policy(an), n, 60, 12345);
    CHECK(std::abs(dd.principal_mean - 0.7) <= 3 * dd.principal_stderr);
    CHECK(dd.principal_stderr > 0);
}

TEST_CASE("sampled branch frequencies follow Bayes conditional on the state") {
    const Analysis an = analyze(testutil::three_action());
    const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));
    // At (1/3, 5/6) the split keeps weight 11/12 on the 3/11 branch, so
    // conditional on omega1 the branch fires with probability 3/4.
    std::size_t hits = 0;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n; ++i) {
        const Trajectory tr = run_trajectory(an, opt, true, 60, 999, i);
        if (tr.periods[1].signal == 0) ++hits;
    }
    const double freq = static_cast<double>(hits) / static_cast<double>(n);
    CHECK(std::abs(freq - 0.75) <= 3 * std::sqrt(0.75 * 0.25 / static_cast<double>(n)));
}

TEST_CASE("obedience audit passes the constructed policies exactly") {
    const Analysis an = analyze(testutil::three_action());

    SUBCASE("optimal policy: binding obedience, exact promise keeping") {
        const IcReport rep = audit_ic(an, make_optimal_policy(an, compute_q_star(an)), 6);
        CHECK(rep.ok());
        CHECK(rep.nodes == 5);
        CHECK(rep.absorbed_nodes == 2);
        CHECK(rep.target_branches > 0);
        CHECK(rep.binding_target_branches == rep.target_branches);
        CHECK(rep.exact_promise_nodes == rep.nodes);
    }
    SUBCASE("random disclosure: the lottery state is exactly calibrated") {
        const IcReport rep = audit_ic(an, make_random_policy(an), 4);
        CHECK(rep.ok());
        CHECK(rep.nodes == 2);
        CHECK(rep.exact_promise_nodes == rep.nodes);
        CHECK(rep.binding_target_branches == rep.target_branches);
    }
    SUBCASE("delayed disclosure: obedience holds with rents, never binding") {
        const IcReport rep = audit_ic(an, make_delayed_policy(an), 5);
        CHECK(rep.ok());
        CHECK(rep.nodes == 3);  // two countdown states plus the disclosure state
        CHECK(rep.target_branches == 2);
        CHECK(rep.binding_target_branches == 0);
        CHECK(rep.exact_promise_nodes == rep.nodes);
    }
    SUBCASE("one-shot policy on the two-action instance") {
        const Analysis an2 = analyze(testutil::two_action());
        const IcReport rep = audit_ic(an2, make_kg_policy(an2), 3);
        CHECK(rep.ok());
        CHECK(rep.nodes == 1);
        CHECK(rep.binding_target_branches == rep.target_branches);
    }
    SUBCASE("a shaved promise is flagged at exactly the corrupted node") {
        const SimPolicy base = make_optimal_policy(an, compute_q_star(an));
        SimPolicy bad = base;
        bad.split_at = [inner = base.split_at](const StatePoint& s)
            -> std::optional<PolicyStep> {
            auto split = inner(s);
            if (split && s.p == rat(1, 3) && s.w == rat(5, 6)) {
                (*split)[0].promised_w -= rat(1, 1000);
            }
            return split;
        };
        const IcReport rep = audit_ic(an, bad, 6);
        REQUIRE(rep.violations.size() == 2);
        for (const auto& v : rep.violations) {
            CHECK(v.state.p == r(1, 3));
            CHECK(v.state.w == r(5, 6));
        }
        CHECK(rep.violations[0].kind == "obedience");
        CHECK(rep.violations[0].magnitude == r(1, 2000));
        CHECK(rep.violations[1].kind == "promise-keeping");
        CHECK(rep.violations[1].magnitude == r(11, 24000));
    }
}

TEST_CASE("martingale audits: exact on trees, statistical on paths") {
    const Analysis an = analyze(testutil::three_action());
    const SimPolicy opt = make_optimal_policy(an, compute_q_star(an));

    const MartingaleTreeReport tree = audit_martingale(opt, 6);
    CHECK(tree.ok());
    CHECK(tree.nodes == 5);
    CHECK(audit_martingale(make_random_policy(an), 4).ok());
    CHECK(audit_martingale(make_delayed_policy(an), 5).ok());

    std::vector<Trajectory> paths;
    paths.reserve(10000);
    for (std::size_t i = 0; i < 10000; ++i) {
        paths.push_back(run_trajectory(an, opt, std::nullopt, 60, 777, i));
    }
    const MartingalePathReport at3 = audit_martingale(paths, 3, an.problem.prior);
    CHECK(at3.ok);
    CHECK(at3.n_paths == 10000);
    // Period 1 stays at the prior deterministically.
    const MartingalePathReport at1 = audit_martingale(paths, 1, an.problem.prior);
    CHECK(at1.ok);
    CHECK(at1.mean == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(at1.stderr_mean == 0.0);

    // The delayed policy keeps beliefs constant while silent.
    std::vector<Trajectory> silent;
    for (std::size_t i = 0; i < 200; ++i) {
        silent.push_back(run_trajectory(an, make_delayed_policy(an), std::nullopt, 60, 5, i));
    }
    const MartingalePathReport at2 = audit_martingale(silent, 2, an.problem.prior);
    CHECK(at2.ok);
    CHECK(at2.stderr_mean == 0.0);
}

TEST_CASE("tree-expected payoff brackets the exact value") {
    const Analysis an = analyze(testutil::three_action());
    const Rat q = compute_q_star(an);
    const SimPolicy opt = make_optimal_policy(an, q);
    PolicySolver solver(an, q);
    const Rat exact = solver.value(opt.start);

    // Shallow expansion undershoots by at most the discount tail.
    const Rat e3 = tree_expected_value(an, opt, opt.start, Rat(1), 3, Rat(1));
    CHECK(e3 <= exact);
    CHECK(exact <= e3 + rat_pow(an.problem.discount, 3));
    // Every path absorbs within six periods, so depth 6 is exact.
    const Rat e6 = tree_expected_value(an, opt, opt.start, Rat(1), 6, Rat(1));
    CHECK(e6 == exact);
    CHECK(e6 == r(1285, 1536));
}
