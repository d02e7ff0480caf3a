#pragma once

#include <string>

#include "persuade/problem.hpp"
#include "persuade/rational.hpp"

namespace testutil {

// The three-action instance used throughout the suite: a0 pays (1,0), a1 pays
// (0,2), the target pays (1/2,1/2); principal gets 1 in both states,
// delta = 1/2, prior = 1/3.
inline persuade::Problem three_action() {
    persuade::Problem p;
    p.actions = {"a0", "a1", "a_star"};
    p.target = 2;
    p.agent_payoff = {{persuade::Rat(1), persuade::Rat(0)},
                      {persuade::Rat(0), persuade::Rat(2)},
                      {persuade::rat(1, 2), persuade::rat(1, 2)}};
    p.principal_payoff = {persuade::Rat(1), persuade::Rat(1)};
    p.discount = persuade::rat(1, 2);
    p.prior = persuade::rat(1, 3);
    return p;
}

// Two actions, the target is statically optimal on [0,1/2]: target pays
// (1,0), b pays (0,1); delta = 1/2, prior = 3/5.
inline persuade::Problem two_action() {
    persuade::Problem p;
    p.actions = {"a_star", "b"};
    p.target = 0;
    p.agent_payoff = {{persuade::Rat(1), persuade::Rat(0)},
                      {persuade::Rat(0), persuade::Rat(1)}};
    p.principal_payoff = {persuade::Rat(1), persuade::Rat(1)};
    p.discount = persuade::rat(1, 2);
    p.prior = persuade::rat(3, 5);
    return p;
}

}  // namespace testutil
