#include "doctest.h"
#include "helpers.hpp"
#include "persuade/baselines.hpp"
#include "persuade/errors.hpp"
#include "persuade/policy.hpp"

using namespace persuade;

namespace {

Rat r(long n, long d = 1) { return rat(n, d); }

}  // namespace

TEST_CASE("one-shot disclosure on the reference instances") {
    const Analysis ex1 = analyze(testutil::three_action());
    const BaselineResult kg1 = kg_value(ex1);
    CHECK(kg1.policy == "kg");
    CHECK(kg1.principal_value == r(0));
    CHECK(kg1.agent_value == r(2, 3));
    REQUIRE(kg1.split.size() == 1);
    CHECK(kg1.split[0].second == r(1, 3));

    const Analysis ex2 = analyze(testutil::two_action());
    const BaselineResult kg2 = kg_value(ex2);
    CHECK(kg2.principal_value == r(4, 5));
    CHECK(kg2.agent_value == r(3, 5));
    REQUIRE(kg2.split.size() == 2);
    CHECK(kg2.split[0].first == r(4, 5));
    CHECK(kg2.split[0].second == r(1, 2));
    CHECK(kg2.split[1].first == r(1, 5));
    CHECK(kg2.split[1].second == r(1));

    Problem persuaded = testutil::two_action();
    persuaded.prior = r(1, 4);
    const BaselineResult kg3 = kg_value(analyze(persuaded));
    CHECK(kg3.principal_value == r(1));
    CHECK(kg3.agent_value == r(3, 4));
    REQUIRE(kg3.split.size() == 1);

    // Two actions: the one-shot value already attains the optimum.
    const PolicySolver solver(ex2, compute_q_star(ex2));
    CHECK(kg2.principal_value == solver.value({r(3, 5), ex2.env.eval_m(r(3, 5))}));
}

TEST_CASE("random disclosure on the reference instances") {
    const Analysis ex1 = analyze(testutil::three_action());
    const BaselineResult rd1 = random_disclosure(ex1);
    CHECK(rd1.policy == "random");
    CHECK(rd1.alpha == r(1, 4));
    CHECK(rd1.principal_value == r(4, 5));
    CHECK(rd1.agent_value == r(2, 3));

    const Analysis ex2 = analyze(testutil::two_action());
    const BaselineResult rd2 = random_disclosure(ex2);
    CHECK(rd2.alpha == r(1, 2));
    CHECK(rd2.principal_value == r(4, 5));

    Problem persuaded = testutil::two_action();
    persuaded.prior = r(1, 4);
    const BaselineResult rd3 = random_disclosure(analyze(persuaded));
    CHECK(rd3.alpha == r(0));
    CHECK(rd3.principal_value == r(1));

    Problem outside = testutil::two_action();
    outside.prior = r(9, 10);
    CHECK_THROWS_AS(static_cast<void>(random_disclosure(analyze(outside))), SolverError);
}

TEST_CASE("delayed disclosure on the reference instances") {
    const Analysis ex1 = analyze(testutil::three_action());
    const BaselineResult dd1 = delayed_disclosure(ex1);
    CHECK(dd1.policy == "delayed");
    CHECK(dd1.T_star == 2);
    CHECK(!dd1.unbounded);
    CHECK(dd1.principal_value == r(3, 4));
    CHECK(dd1.agent_value == r(17, 24));

    const Analysis ex2 = analyze(testutil::two_action());
    const BaselineResult dd2 = delayed_disclosure(ex2);
    CHECK(dd2.T_star == 1);
    CHECK(dd2.principal_value == r(1, 2));

    Problem persuaded = testutil::two_action();
    persuaded.prior = r(1, 4);
    const BaselineResult dd3 = delayed_disclosure(analyze(persuaded));
    CHECK(dd3.unbounded);
    CHECK(!dd3.T_star.has_value());
    CHECK(dd3.principal_value == r(1));

    Problem outside = testutil::two_action();
    outside.prior = r(9, 10);
    CHECK_THROWS_AS(static_cast<void>(delayed_disclosure(analyze(outside))), SolverError);

    // T* respects the exact integer boundary: with delta^2 exactly equal to
    // the compensation share the second period is still affordable.
    Problem boundary = testutil::three_action();
    boundary.discount = r(1, 2);
    const Analysis ban = analyze(boundary);
    const Rat rho = (ban.env.eval_m(ban.problem.prior) - ban.problem.u_star(ban.problem.prior)) /
                    (ban.env.eval_M(ban.problem.prior) - ban.problem.u_star(ban.problem.prior));
    CHECK(rho == r(1, 5));
    CHECK(rat_pow(ban.problem.discount, 2) >= rho);
    CHECK(rat_pow(ban.problem.discount, 3) < rho);
}

TEST_CASE("first-best relaxation on the reference instances") {
    const Analysis ex1 = analyze(testutil::three_action());
    const BaselineResult fb1 = first_best(ex1);
    CHECK(fb1.policy == "first_best");
    REQUIRE(fb1.alphas.has_value());
    CHECK(fb1.alphas->first == r(1));
    CHECK(fb1.alphas->second == r(2, 3));
    CHECK(fb1.principal_value == r(8, 9));
    CHECK(fb1.agent_value == r(2, 3));

    const Analysis ex2 = analyze(testutil::two_action());
    const BaselineResult fb2 = first_best(ex2);
    CHECK(fb2.alphas->first == r(1));
    CHECK(fb2.alphas->second == r(2, 3));
    CHECK(fb2.principal_value == r(4, 5));

    // A dominant state-1 ratio triggers relabeling, after which the budget
    // still fills the cheaper-per-value state (now state 0) first.
    Problem tilted = testutil::three_action();
    tilted.principal_payoff = {r(1), r(10)};
    const Analysis tan = analyze(tilted);
    CHECK(tan.problem.relabeled);
    const BaselineResult fb3 = first_best(tan);
    CHECK(fb3.alphas->first == r(1));
    CHECK(fb3.alphas->second == r(1, 2));
    CHECK(fb3.principal_value == r(11, 3));
}

TEST_CASE("baseline orderings against the optimal policy") {
    for (const Problem& base : {testutil::three_action(), testutil::two_action()}) {
        const Analysis an = analyze(base);
        const Rat q = compute_q_star(an);
        const PolicySolver solver(an, q);
        const Rat opt = solver.value({an.problem.prior, an.env.eval_m(an.problem.prior)});
        const Rat m0 = an.env.eval_m(an.problem.prior);

        const BaselineResult kg = kg_value(an);
        const BaselineResult rd = random_disclosure(an);
        const BaselineResult dd = delayed_disclosure(an);
        const BaselineResult fb = first_best(an);

        CHECK(kg.principal_value <= opt);
        CHECK(rd.principal_value <= opt);
        CHECK(dd.principal_value <= rd.principal_value);
        CHECK(opt <= fb.principal_value);
        CHECK(rd.principal_value <= fb.principal_value);
        for (const BaselineResult* b : {&kg, &rd, &dd, &fb}) {
            CHECK(b->agent_value >= m0);
            CHECK(b->principal_value >= 0);
        }
    }
}

TEST_CASE("symmetric costs make the stationary policies optimal") {
    // v(a*,0)*g1 == v(a*,1)*g0 with g0 > 0: random disclosure, the relaxed
    // problem, and the optimal policy all coincide at the prior.
    Problem sym = testutil::three_action();
    sym.principal_payoff = {r(1), r(3)};
    const Analysis an = analyze(sym);

    const BaselineResult rd = random_disclosure(an);
    const BaselineResult fb = first_best(an);
    CHECK(rd.principal_value == r(4, 3));
    CHECK(fb.principal_value == r(4, 3));

    const Rat q = compute_q_star(an);
    const PolicySolver solver(an, q);
    CHECK(solver.value({an.problem.prior, an.env.eval_m(an.problem.prior)}) == r(4, 3));
}
