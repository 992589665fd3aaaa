#pragma once

#include <cstddef>
#include <vector>

#include "causalrl/mdp.hpp"

namespace causalrl {

/// Interval model of an unknown MDP: per-pair reward ranges, per-successor
/// transition-probability ranges, a discount factor, and the global reward
/// range used for vacuous fallbacks.
struct BoundedMdpModel {
    StateSpace states;
    ActionSpace actions;
    double gamma = 0.9;
    double reward_min = 0.0; ///< global lower reward bound, covers every r_lo
    double reward_max = 0.0; ///< global upper reward bound, covers every r_hi
    std::vector<std::vector<double>> r_lo; ///< [s][a]
    std::vector<std::vector<double>> r_hi; ///< [s][a]
    std::vector<std::vector<std::vector<double>>> p_lo; ///< [s][a][s']
    std::vector<std::vector<std::vector<double>>> p_hi; ///< [s][a][s']

    std::size_t n_states() const { return states.size; }
    std::size_t n_actions() const { return actions.size; }

    /// Checks interval consistency; in particular each transition box must
    /// intersect the simplex (sum of lower bounds <= 1 <= sum of upper bounds).
    void validate() const;

    /// Degenerate model whose intervals are the exact quantities of `mdp`.
    static BoundedMdpModel from_mdp(const Mdp& mdp);

    /// Fully uninformative model: rewards in [reward_min, reward_max],
    /// every transition probability in [0, 1].
    static BoundedMdpModel vacuous(const StateSpace& states, const ActionSpace& actions, double gamma,
                                   double reward_min, double reward_max);
};

/// Per-state value interval.
struct VBoundTable {
    std::vector<double> lo;
    std::vector<double> hi;
    void validate() const;
};

/// Per-(state, action) value interval, row-major over actions.
struct QBoundTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> lo;
    std::vector<double> hi;

    double lo_at(std::size_t s, std::size_t a) const { return lo[s * n_actions + a]; }
    double hi_at(std::size_t s, std::size_t a) const { return hi[s * n_actions + a]; }
    void validate() const;
};

/// Strictly positive per-state weights for the weighted-objective programs.
struct StateWeights {
    std::vector<double> c;
    void validate() const;
    static StateWeights uniform(std::size_t n_states, double value = 1.0);
    /// Uniform weights with a single amplified entry at `state`.
    static StateWeights amplified(std::size_t n_states, std::size_t state, double amplification);
};

enum class Extremum { maximize, minimize };

/// The distribution p in the box [p_lo, p_hi] with sum(p) = 1 that extremizes
/// p . v: start every coordinate at its lower bound and pour the remaining
/// mass into successors in order of decreasing (maximize) or increasing
/// (minimize) value, ties broken by the lower index. Throws
/// std::invalid_argument when the box misses the simplex.
std::vector<double> extremal_distribution(const std::vector<double>& v, const std::vector<double>& p_lo,
                                          const std::vector<double>& p_hi, Extremum direction);

enum class RobustDirection {
    optimistic,  ///< best-case rewards and transitions (upper value)
    pessimistic, ///< worst-case rewards and transitions (lower value)
};

struct RobustValueResult {
    ValueTable v;
    Policy policy; ///< greedy in the robust backup, lowest-index tie-break
    std::size_t iterations = 0;
    double residual = 0.0;
    /// Sup-norm change per sweep; contracts geometrically with factor gamma.
    std::vector<double> sweep_changes;
};

/// One robust Bellman backup of `v` at (s, a): the extremal reward endpoint
/// plus gamma times the extremal expected continuation over the (s,a) box.
double robust_backup(const BoundedMdpModel& model, const ValueTable& v, std::size_t s, std::size_t a,
                     RobustDirection direction);

/// Interval value iteration. The optimistic direction returns the pointwise
/// largest optimal value over all MDPs in the model (pessimistic: smallest);
/// because reward/transition choices decouple across state-action pairs, the
/// pointwise extremal table exists, and its weighted sum attains the optimum
/// of the weighted-objective program for every positive weight vector.
RobustValueResult robust_value_bounds(const BoundedMdpModel& model, RobustDirection direction,
                                      double tol = 1e-10);

/// Both directions assembled into one per-state interval table.
VBoundTable robust_v_table(const BoundedMdpModel& model, double tol = 1e-10);

struct Theorem1Interval {
    double lower = 0.0;
    double upper = 0.0;
};

/// Per-state value bounds extracted from the weighted optimistic/pessimistic
/// solutions: the bound at `state` pays for the other states' slack through
/// the weight ratio, so amplifying c(state) tightens it toward the pointwise
/// robust interval.
Theorem1Interval theorem1_bounds(const BoundedMdpModel& model, const StateWeights& weights,
                                 std::size_t state, const ValueTable& v_optimistic,
                                 const ValueTable& v_pessimistic);
Theorem1Interval theorem1_bounds(const BoundedMdpModel& model, const StateWeights& weights,
                                 std::size_t state, double tol = 1e-10);

/// Q intervals from value intervals:
///   hi(s,a) = r_hi + gamma * max_p sum p(s') v_hi(s')
///   lo(s,a) = r_lo + gamma * min_p sum p(s') v_lo(s')
/// with p ranging over the (s,a) transition box intersected with the simplex.
QBoundTable q_bounds(const BoundedMdpModel& model, const VBoundTable& v);

} // namespace causalrl
