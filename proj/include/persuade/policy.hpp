#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "persuade/envelopes.hpp"
#include "persuade/problem.hpp"
#include "persuade/thresholds.hpp"

namespace persuade {

// A point of the feasible set W: a belief together with a promised
// continuation utility w in [m(p), M(p)].
struct StatePoint {
    Rat p;
    Rat w;
    bool operator==(const StatePoint& o) const { return p == o.p && w == o.w; }
};

// One branch of a splitting: reached with probability prob, the posterior
// belief, the continuation utility promised at that posterior, and the
// action recommended for the current period.
struct SplitOutcome {
    Rat prob;
    Rat posterior;
    Rat promised_w;
    std::size_t action;
};

using PolicyStep = std::vector<SplitOutcome>;

enum class Region { W1, W2, W3, W4, Absorbed };

const char* region_name(Region r);

// Validated + normalized problem together with its derived static data.
struct Analysis {
    Problem problem;  // validated, normalized orientation
    Envelopes env;
    ThresholdLadder ladder;

    const Rat& delta() const { return problem.discount; }
    Rat bold_w_at(const Rat& p) const;
};

Analysis analyze(const Problem& raw);

// The disclosure policy with cutoff q: classification of states into the
// four regions, the one-step split it prescribes, and its value function.
// Values are exact rationals, memoized on exact state keys.
class PolicySolver {
public:
    // Requires a nonempty Q^1 and q in [q1_lo, q1_hi].
    PolicySolver(const Analysis& analysis, Rat q);

    const Rat& q() const { return q_; }
    const Analysis& analysis() const { return a_; }

    Region classify(const StatePoint& s) const;  // throws OutsideW
    // One-period split at a non-absorbed state; throws OutOfDomain at
    // absorbed states (the caller keeps the action forever).
    PolicyStep step(const StatePoint& s) const;
    // Expected discounted principal payoff from s under this policy.
    Rat value(const StatePoint& s) const;

    std::size_t memo_size() const { return memo_.size(); }

private:
    Rat value_rec(const StatePoint& s, int depth) const;
    PolicyStep step_region(const StatePoint& s, Region r) const;
    Rat m1_gap_ref() const;  // m(1) - u*(1)

    const Analysis& a_;
    Rat q_;
    Rat q1_lo_, q1_hi_;
    Rat final_kink_;  // left endpoint of the final affine piece of m
    mutable std::map<std::pair<Rat, Rat>, Rat> memo_;
};

// sup{p in Q^1 : V_{q1_hi}(p, m(p)) >= V_{q1_hi}(p, w) for all w}: bisection
// on the one-sided difference probe at w = m(p)+, snapped to a structural
// breakpoint of the instance when one lies in the final bracket.
Rat compute_q_star(const Analysis& analysis);

struct VerifyCheck {
    bool ok = true;
    Rat worst = Rat(0);      // largest violation magnitude found (0 if none)
    StatePoint where{Rat(0), Rat(0)};
};

struct VerifyReport {
    VerifyCheck concavity;     // midpoint concavity of V_q over (p,w)
    VerifyCheck monotonicity;  // V_q decreasing in w along each belief column
    VerifyCheck q1_inequality;      // V_q(p,m(p)) >= (1-d)v*(p) + d V_q(p,bold_w(p)) on Q^1
    std::size_t states_checked = 0;

    bool pass() const { return concavity.ok && monotonicity.ok && q1_inequality.ok; }
};

VerifyReport verify_optimality(const Analysis& analysis, const Rat& q,
                               std::size_t np = 256, std::size_t nw = 64);

// Number of periods with a non-degenerate belief (the agent still acting on
// persuasion) before absorption under the ladder policy; nullopt = unbounded.
std::optional<long long> t_delta(const Analysis& analysis, const Rat& p);

}  // namespace persuade
