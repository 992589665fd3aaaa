#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causalrl/demonstrator.hpp"
#include "causalrl/lp.hpp"
#include "causalrl/value_bounds.hpp"

namespace causalrl {

/// Implicit enumeration of all N_o^{N_a} deterministic action-to-outcome
/// response mappings in fixed mixed-radix order: mapping j assigns outcome
/// digit(a, j) to action a, and the LAST action's digit varies fastest as j
/// increases. All indices are 0-based.
class ResponseMappingSet {
public:
    static constexpr std::size_t kDefaultCap = static_cast<std::size_t>(1) << 20;

    ResponseMappingSet(std::size_t n_actions, std::size_t n_outcomes,
                       std::size_t max_mappings = kDefaultCap);

    std::size_t n_actions() const { return n_actions_; }
    std::size_t n_outcomes() const { return n_outcomes_; }
    std::size_t n_mappings() const { return n_mappings_; }

    /// Outcome assigned to `action` by mapping `mapping`.
    std::size_t digit(std::size_t action, std::size_t mapping) const;

    /// The index set S(outcome, action): every mapping that assigns `outcome`
    /// to `action`. For a fixed action these sets partition all mappings.
    std::vector<std::size_t> index_set(std::size_t outcome, std::size_t action) const;

private:
    std::size_t n_actions_;
    std::size_t n_outcomes_;
    std::size_t n_mappings_;
    std::vector<std::size_t> stride_; ///< N_o^(N_a - 1 - a) per action
};

enum class CausalKind { reward_expectation, transition_probability };

struct CausalTarget {
    std::size_t state = 0;
    std::size_t action = 0;
    std::optional<std::size_t> next_state; ///< set for transition bounds only
};

/// Partial-identification interval for one interventional quantity.
struct CausalInterval {
    double lo = 0.0;
    double hi = 0.0;
    CausalTarget target;
    CausalKind kind = CausalKind::reward_expectation;
    void validate() const;
};

/// Known interventional distribution for one action at a state, expressed
/// over the same outcome indexing as the state's observation (reward-value
/// index for reward bounds, successor-list index for transition bounds).
struct DoPrior {
    std::size_t action = 0;
    std::vector<double> outcome_probs;
    void validate(std::size_t n_outcomes) const;
};

/// Point-mass prior asserting that do(action) yields `reward_value` surely;
/// the value must be in the state's observed reward support.
DoPrior point_reward_prior(const StateObservation& state_obs, std::size_t action, double reward_value);

/// Interval for E[r | state, do(target_action)] from the state's observational
/// joint P(r, a), by LP over joint distributions of (observed action, response
/// mapping) that reproduce the joint and satisfy the priors.
CausalInterval reward_do_bounds(const StateObservation& state_obs, std::size_t state,
                                std::size_t target_action, const std::vector<DoPrior>& priors = {},
                                const LpOptions& lp_options = {});

/// Interval for P(next | state, do(target_action)); `next` must appear in the
/// state's observed successor list. One LP per queried successor.
CausalInterval transition_do_bounds(const StateObservation& state_obs, std::size_t state,
                                    std::size_t target_action, std::size_t next,
                                    const std::vector<DoPrior>& priors = {},
                                    const LpOptions& lp_options = {});

/// Which state-action pairs get LP-computed intervals in bound_all.
enum class BoundScope {
    critical_pairs, ///< exactly the pairs listed in the options
    heuristic,      ///< pairs whose observed outcome support has >= 2 entries
    all,            ///< every observed pair
};

/// How priors are attached when bounding a pair.
enum class PriorMode {
    none,
    /// For each other action at the state whose observed reward support is a
    /// single value, assert that value as the known do-outcome. Expresses
    /// "every alternative had a fixed known payoff" side knowledge.
    singleton_support,
};

struct BoundOptions {
    BoundScope scope = BoundScope::heuristic;
    PriorMode prior_mode = PriorMode::none;
    /// Explicit (state, action) lists, used when scope == critical_pairs.
    std::vector<std::pair<std::size_t, std::size_t>> reward_pairs;
    std::vector<std::pair<std::size_t, std::size_t>> transition_pairs;
    /// Global reward range; must cover every observed reward value.
    double fallback_reward_lo = 0.0;
    double fallback_reward_hi = 0.0;
    std::size_t workers = 1;
    LpOptions lp;
};

/// Assembles a complete interval model over the full state-action space:
///   - pairs in scope: LP intervals (reward, and per-successor transition);
///   - observed pairs out of scope: point intervals at the naive estimates;
///   - unobserved pairs: vacuous fallback ([lo, hi] rewards, [0, 1] per
///     successor probability).
/// Successors outside a state's observed outcome space get probability zero
/// for observed pairs (the outcome space is taken as exhaustive).
BoundedMdpModel bound_all(const ObservationalDistribution& obs, const StateSpace& states,
                          const ActionSpace& actions, double gamma, const BoundOptions& options);

/// The pairs the heuristic scope would bound: observed pairs with at least two
/// distinct observed rewards (first list) or successors (second list).
struct CriticalPairReport {
    std::vector<std::pair<std::size_t, std::size_t>> reward_pairs;
    std::vector<std::pair<std::size_t, std::size_t>> transition_pairs;
};
CriticalPairReport detect_critical_pairs(const ObservationalDistribution& obs);

} // namespace causalrl
