#pragma once

#include <string>
#include <vector>

#include "causalrl/rng.hpp"

namespace causalrl {

using ValueTable = std::vector<double>;

/// Finite reward distribution attached to one (state, action) pair: a list of
/// reward values with matching probabilities. Next-state correlation is
/// marginalized out at model-construction time; the environments this toolkit
/// ships have rewards that are conditionally independent of the realized
/// successor given (s, a), so episode simulation from the marginalized form is
/// exact for them.
struct RewardDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    double mean() const;
    double min_value() const;
    double max_value() const;
    /// Point mass at a single value.
    static RewardDistribution point(double value);
    void validate() const;
};

struct StateSpace {
    std::size_t size = 0;
    std::vector<std::string> labels; // optional; empty or size() entries

    const std::string& label(std::size_t s) const;
    void validate() const;

  private:
    mutable std::string scratch_;
};

struct ActionSpace {
    std::size_t size = 0;
    std::vector<std::string> labels;

    const std::string& label(std::size_t a) const;
    void validate() const;

  private:
    mutable std::string scratch_;
};

/// Tabular MDP with finite reward distributions per (s, a).
struct Mdp {
    StateSpace states;
    ActionSpace actions;
    /// transition[s][a][s'] — each row a distribution over successors.
    std::vector<std::vector<std::vector<double>>> transition;
    /// reward[s][a]
    std::vector<std::vector<RewardDistribution>> reward;
    double gamma = 0.9;
    /// Initial state distribution.
    std::vector<double> initial_dist;

    std::size_t n_states() const { return states.size; }
    std::size_t n_actions() const { return actions.size; }
    double expected_reward(std::size_t s, std::size_t a) const { return reward[s][a].mean(); }
    double min_reward() const;
    double max_reward() const;
    void validate() const;
};

/// Stationary randomized policy ignoring context: probs[s][a].
struct Policy {
    std::vector<std::vector<double>> probs;

    std::size_t act(std::size_t s, Rng& rng) const;
    /// Deterministic policy from an action index per state.
    static Policy deterministic(const std::vector<std::size_t>& actions, std::size_t n_actions);
    void validate(std::size_t n_states, std::size_t n_actions) const;
};

/// Contextual MDP: a context u is drawn once per episode from context_dist and
/// selects which per-context MDP generates transitions and rewards. All
/// per-context MDPs share spaces, discount, and initial distribution.
struct ContextualMdp {
    std::vector<double> context_dist;
    std::vector<Mdp> contexts;

    std::size_t n_contexts() const { return contexts.size(); }
    std::size_t n_states() const { return contexts.at(0).n_states(); }
    std::size_t n_actions() const { return contexts.at(0).n_actions(); }
    double gamma() const { return contexts.at(0).gamma; }
    const StateSpace& states() const { return contexts.at(0).states; }
    const ActionSpace& actions() const { return contexts.at(0).actions; }
    void validate() const;
};

/// Policy that may condition on the (latent) context: one Policy per context.
struct ContextPolicy {
    std::vector<Policy> per_context;

    std::size_t act(std::size_t s, std::size_t u, Rng& rng) const { return per_context.at(u).act(s, rng); }
    /// Lift a context-free policy.
    static ContextPolicy from_policy(const Policy& p, std::size_t n_contexts);
    void validate(std::size_t n_contexts, std::size_t n_states, std::size_t n_actions) const;
};

struct QTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> data; // row-major [s][a]

    QTable() = default;
    QTable(std::size_t ns, std::size_t na, double fill = 0.0)
        : n_states(ns), n_actions(na), data(ns * na, fill) {}
    double& at(std::size_t s, std::size_t a) { return data[s * n_actions + a]; }
    double at(std::size_t s, std::size_t a) const { return data[s * n_actions + a]; }
    /// Greedy action, ties broken toward the lowest index.
    std::size_t greedy(std::size_t s) const;
    double max_value(std::size_t s) const;
};

struct ValueIterationResult {
    ValueTable v;
    Policy policy;     // deterministic greedy policy, lowest-index tie-break
    std::size_t iterations = 0;
    double residual = 0.0; // Bellman optimality residual sup-norm at v
};

/// Solve the MDP by value iteration to a Bellman residual <= tol (sup norm).
ValueIterationResult value_iteration(const Mdp& mdp, double tol = 1e-10);

/// One-step lookahead Q from a value table.
QTable q_from_v(const Mdp& mdp, const ValueTable& v);

/// Apply the Bellman optimality operator once.
ValueTable bellman_backup(const Mdp& mdp, const ValueTable& v);

/// Expected value of a table under the initial distribution.
double initial_value(const Mdp& mdp, const ValueTable& v);

/// Collapse a contextual MDP to its context-marginal MDP: transitions and
/// reward distributions are mixed with the context weights.
Mdp marginalize(const ContextualMdp& cmdp);

struct EpisodeStep {
    std::size_t s;
    std::size_t a;
    std::size_t s_next;
    double r;
};

/// One simulated episode. The context that generated it is recorded for
/// internal bookkeeping but is deliberately excluded from exported datasets:
/// downstream consumers model an observer who cannot see it.
struct EpisodeLog {
    std::size_t context = 0;
    std::vector<EpisodeStep> steps;
};

/// Simulate a T-step episode: draw a context and an initial state, then roll
/// the context's kernels under the given policy.
EpisodeLog simulate_episode(const ContextualMdp& cmdp, const ContextPolicy& policy, std::size_t T, Rng& rng);
EpisodeLog simulate_episode(const ContextualMdp& cmdp, const Policy& policy, std::size_t T, Rng& rng);

/// Monte-Carlo estimate of the discounted return of a context-free policy in
/// its deployment world: the latent context is resampled every step, so the
/// effective environment is the context-marginal MDP. (Demonstrator episodes,
/// by contrast, keep their context for the whole episode.)
struct ReturnEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t episodes = 0;
};
ReturnEstimate evaluate_policy(const ContextualMdp& cmdp, const Policy& policy, std::size_t episodes,
                               std::size_t T, Rng& rng);

} // namespace causalrl
