#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "persuade/policy.hpp"
#include "persuade/rational.hpp"

namespace persuade {

// Outcome of one comparison policy evaluated at the prior.
struct BaselineResult {
    std::string policy;
    Rat principal_value{0};
    Rat agent_value{0};

    // One-shot disclosure: (weight, posterior) pairs of the optimal split.
    std::vector<std::pair<Rat, Rat>> split;
    // Random disclosure: per-period probability of full disclosure.
    std::optional<Rat> alpha;
    // Delayed disclosure: acting periods before full disclosure; unbounded
    // (never disclose) when the agent needs no compensation at the prior.
    std::optional<long long> T_star;
    bool unbounded = false;
    // First-best: state-contingent frequencies of the target action.
    std::optional<std::pair<Rat, Rat>> alphas;
};

// Disclose once at the start, then play the statically optimal action
// forever: the concave hull of v(a*,.) restricted to the beliefs where the
// target is a best reply, evaluated at the prior.
BaselineResult kg_value(const Analysis& analysis);

// Recommend the target every period and fully disclose the state with a
// stationary probability chosen to keep the agent exactly at m(p0).
BaselineResult random_disclosure(const Analysis& analysis);

// Recommend the target for T* periods, then disclose fully; T* is the
// largest integer the agent tolerates at the prior.
BaselineResult delayed_disclosure(const Analysis& analysis);

// Relaxed problem: choose state-contingent frequencies of the target action
// subject only to the agent's ex-ante participation at the prior.
BaselineResult first_best(const Analysis& analysis);

}  // namespace persuade
