#pragma once

#include <cstddef>
#include <vector>

#include "causalrl/gridworld.hpp"
#include "causalrl/mdp.hpp"

namespace causalrl {

/// Per-context optimal policy: value iteration on each context's MDP, greedy
/// with lowest-index tie-break. This is what a demonstrator that observes the
/// context and plans exactly would play.
ContextPolicy contextual_optimal_policy(const ContextualMdp& cmdp, double tol = 1e-10);

/// Epsilon-soften a policy: each state keeps mass 1-eps on the base policy's
/// action(s) and spreads eps uniformly over the remaining actions. With a
/// deterministic base and 4 actions, eps=0.3 yields (0.7, 0.1, 0.1, 0.1).
Policy epsilon_greedy(const Policy& base, double eps);
ContextPolicy epsilon_greedy(const ContextPolicy& base, double eps);

/// Declarative deterministic context policy: one default action plus explicit
/// (state, context) -> action overrides. This is the form experiment configs
/// use to pin demonstrator behavior.
struct DeterministicContextPolicySpec {
    std::size_t default_action = 0;
    struct Override {
        std::size_t state;
        std::size_t context;
        std::size_t action;
    };
    std::vector<Override> overrides;

    ContextPolicy build(std::size_t n_contexts, std::size_t n_states, std::size_t n_actions) const;
};

/// Demonstrator base policies that generate the benchmark observational
/// tables (before epsilon-softening).
DeterministicContextPolicySpec reward_grid_demo_spec(const GridSpec& grid);
DeterministicContextPolicySpec transition_grid_demo_spec(const GridSpec& grid);

/// What an observer who cannot see the context records at one state: the
/// joint distribution of (reward, action) and of (successor, action), plus
/// visit counts. Reward values and successor ids are kept sparse and sorted.
struct StateObservation {
    bool covered = false;
    double visits = 0; // raw visit count; 0 for the analytic distribution
    std::vector<double> reward_values;                // ascending
    std::vector<std::size_t> successors;              // ascending state ids
    std::vector<std::vector<double>> reward_joint;    // [reward][action], sums to 1 over all cells
    std::vector<std::vector<double>> successor_joint; // [successor][action], sums to 1

    /// P(a | s), marginalized from the reward joint.
    double action_marginal(std::size_t a) const;
};

struct ObservationalDistribution {
    enum class Source { analytic, episodic, query };
    Source source = Source::analytic;
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<StateObservation> states;
};

/// Raw demonstration tuples; the generating context is deliberately absent.
struct DemoDataset {
    std::vector<EpisodeStep> tuples;

    ObservationalDistribution to_observational(std::size_t n_states, std::size_t n_actions) const;
};

/// Exact observational distribution of the demonstrator: context-weighted
/// joints P(r, a | s) and P(s', a | s) at every state, with the context
/// mixed in at its prior weight. This models a demonstrator responding to
/// independently sampled (state, context) queries; trajectory-pooled
/// empirical estimates can weight contexts differently at states whose visit
/// frequency is context-dependent.
ObservationalDistribution analytic_observational(const ContextualMdp& cmdp, const ContextPolicy& policy);

/// Empirical distribution from K simulated episodes of length T. Pass
/// keep_tuples to also retain the raw dataset (memory scales with K*T).
ObservationalDistribution collect_observations(const ContextualMdp& cmdp, const ContextPolicy& policy,
                                               std::size_t episodes, std::size_t T, Rng& rng,
                                               DemoDataset* keep_tuples = nullptr);

/// Empirical distribution from independent queries: each sample draws a
/// context from the prior and a state uniformly, then one demonstrator
/// response. Its large-sample limit is exactly analytic_observational.
ObservationalDistribution collect_observations_query(const ContextualMdp& cmdp, const ContextPolicy& policy,
                                                     std::size_t samples, Rng& rng,
                                                     DemoDataset* keep_tuples = nullptr);

/// Point estimates an observer would take at face value: E[r | s, a] and
/// P(s' | s, a) by straight conditioning on the observed action. Entries are
/// valid only where the action has positive observed probability.
struct NaiveEstimates {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<std::vector<double>> action_marginal;          // [s][a]
    std::vector<std::vector<double>> reward_mean;              // [s][a], meaningful where valid
    std::vector<std::vector<char>> valid;                      // [s][a]
    std::vector<std::vector<std::vector<double>>> successor_cond; // [s][succ][a], rows follow obs successors
};

NaiveEstimates naive_estimates(const ObservationalDistribution& obs);

/// Assemble the MDP the naive estimates describe. `reference` supplies the
/// spaces, discount, and initial distribution (typically the true marginal
/// environment). Throws std::invalid_argument if any (s, a) lacks data.
Mdp naive_mdp(const ObservationalDistribution& obs, const Mdp& reference);

} // namespace causalrl
