#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "persuade/rational.hpp"

namespace persuade {

// A binary-state persuasion instance. State 1 is the "high" state; beliefs p
// are the probability of state 1. The principal earns `principal_payoff`
// when the agent plays the target action and zero for every other action.
struct Problem {
    std::vector<std::string> actions;            // ordered, size >= 2
    std::size_t target = 0;                      // index of a* in `actions`
    std::vector<std::array<Rat, 2>> agent_payoff;  // u[a][omega]
    std::array<Rat, 2> principal_payoff;         // v(a*, omega), both > 0
    Rat discount;                                // delta in (0,1)
    Rat prior;                                   // p0 in (0,1)
    bool relabeled = false;  // states swapped by normalize()
    bool trivial = false;    // a* statically optimal at every belief

    const std::string& target_action() const { return actions[target]; }

    bool operator==(const Problem&) const = default;

    // Expected agent payoff of action a at belief p.
    Rat u(std::size_t a, const Rat& p) const {
        return (1 - p) * agent_payoff[a][0] + p * agent_payoff[a][1];
    }
    Rat u_star(const Rat& p) const { return u(target, p); }

    // Expected principal payoff of the target action at belief p.
    Rat v_star(const Rat& p) const {
        return (1 - p) * principal_payoff[0] + p * principal_payoff[1];
    }
};

// Parses the JSON problem document. Rationals are integers or "num/den"
// strings. Throws SolverError(ParseError) on malformed input.
Problem parse_problem(const std::string& json_text);

Problem load_problem(const std::string& path);

// Canonical JSON emission; parse(serialize(x)) reproduces x exactly.
std::string serialize_problem(const Problem& p);

// Checks type invariants and tags the trivial case (a* statically optimal
// everywhere). Throws SolverError with the specific validation code.
Problem validate(Problem p);

// Reorients states so that the relative cost of persuading at belief 1 is at
// least the cost at belief 0; ties keep the original labels. Idempotent.
Problem normalize(Problem p);

}  // namespace persuade
