#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "persuade/policy.hpp"
#include "persuade/rng.hpp"

namespace persuade {

enum class Absorption { Degenerate0, Degenerate1, PAbsorbed, HorizonTruncated };
const char* absorption_name(Absorption a);

// A disclosure policy as the trajectory engine sees it: a start state and a
// map from states to splits.  An empty split marks an absorbing state where
// the obedient action is repeated forever.
struct SimPolicy {
    std::string name;
    StatePoint start;
    // Periods after which absorption is certain (when known): every path is
    // absorbed by period absorb_bound + 1.
    std::optional<long long> absorb_bound;
    std::function<std::optional<PolicyStep>(const StatePoint&)> split_at;
};

SimPolicy make_optimal_policy(const Analysis& analysis, const Rat& q);
SimPolicy make_kg_policy(const Analysis& analysis);
SimPolicy make_random_policy(const Analysis& analysis);
SimPolicy make_delayed_policy(const Analysis& analysis);

struct PeriodRecord {
    Rat belief_before;
    std::size_t signal = 0;  // sampled branch index; 0 at absorbed records
    Rat belief_after;
    Rat promised_w;          // promise carried into the next period
    std::size_t action = 0;
    Rat principal_flow;      // realized v(action, omega)
    Rat agent_flow;          // realized u(action, omega)
};

struct Trajectory {
    bool omega1 = false;     // realized state
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<PeriodRecord> periods;
    Rat principal_total;     // discounted with weights (1-delta)*delta^(t-1)
    Rat agent_total;
    Absorption absorption = Absorption::HorizonTruncated;
    // Bounds on the value mass beyond the horizon (zero once absorbed).
    Rat principal_tail_bound;
    Rat agent_tail_bound;
};

// Plays one path: samples omega from the prior unless supplied, then follows
// the policy, sampling each period's branch by Bayes' rule conditional on
// omega.  Absorbing states contribute their full discounted tail exactly.
Trajectory run_trajectory(const Analysis& analysis, const SimPolicy& policy,
                          std::optional<bool> omega, std::size_t horizon,
                          std::uint64_t seed, std::uint64_t stream = 0);

struct MonteCarloResult {
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    double principal_mean = 0.0;
    double principal_stderr = 0.0;
    double agent_mean = 0.0;
    double agent_stderr = 0.0;
    std::size_t truncated_paths = 0;
    double principal_tail_bound = 0.0;  // worst-case truncation bias
    double agent_tail_bound = 0.0;
};

// Independent paths on streams 0..n-1; the estimate is identical for any
// thread count because every path owns its counter stream.
MonteCarloResult monte_carlo_value(const Analysis& analysis, const SimPolicy& policy,
                                   std::size_t n_paths, std::size_t horizon,
                                   std::uint64_t seed);

struct TreeNode {
    StatePoint state;
    std::optional<PolicyStep> split;  // empty at absorbing states
    std::size_t depth = 0;            // first-reach depth from the start state
};

// Breadth-first reachable-state tree, deduplicated by exact (p, w).
std::vector<TreeNode> expand_tree(const SimPolicy& policy, std::size_t depth);

struct AuditViolation {
    StatePoint state;
    std::size_t branch = 0;
    std::string kind;
    Rat magnitude;
};

struct IcReport {
    std::size_t nodes = 0;
    std::size_t absorbed_nodes = 0;
    std::size_t target_branches = 0;
    std::size_t binding_target_branches = 0;  // obedience holds with equality
    std::size_t exact_promise_nodes = 0;      // delivery equals the promise
    std::vector<AuditViolation> violations;
    bool ok() const { return violations.empty(); }
};

// Exact audit over the reachable tree: branch distributions, promise
// feasibility, one-shot obedience at target branches, promise keeping.
IcReport audit_ic(const Analysis& analysis, const SimPolicy& policy, std::size_t depth);

struct MartingaleTreeReport {
    std::size_t nodes = 0;
    std::vector<AuditViolation> violations;
    bool ok() const { return violations.empty(); }
};

// Exact per-node check that posteriors average back to the node's belief.
MartingaleTreeReport audit_martingale(const SimPolicy& policy, std::size_t depth);

struct MartingalePathReport {
    std::size_t n_paths = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    double sigmas = 0.0;  // |mean - prior| in standard errors
    bool ok = false;
};

// Empirical check that the period-t belief averages to the prior.
MartingalePathReport audit_martingale(const std::vector<Trajectory>& paths,
                                      std::size_t period, const Rat& prior);

}  // namespace persuade
