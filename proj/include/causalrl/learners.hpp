#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "causalrl/mdp.hpp"
#include "causalrl/rng.hpp"
#include "causalrl/value_bounds.hpp"

namespace causalrl {

enum class AlphaSchedule {
    constant,      ///< alpha_k = alpha
    inverse_visit, ///< alpha_k = 1 / k
    ucb_horizon,   ///< alpha_k = (H + 1) / (H + k), H = horizon
};

struct LearnerConfig {
    AlphaSchedule schedule = AlphaSchedule::ucb_horizon;
    double alpha = 0.1;            ///< constant-schedule rate
    double epsilon = 0.1;          ///< exploration mass for the Q-learning variants
    double ucb_bonus_scale = 1.0;  ///< c_b in the exploration bonus
    double ucb_confidence = 0.05;  ///< delta in the exploration bonus
    std::size_t episodes = 20000;  ///< K (0 allowed: empty run)
    std::size_t horizon = 60;      ///< T
    double gamma = 0.9;
    std::uint64_t seed = 1;
    std::size_t checkpoint_every = 50;
    /// Monte-Carlo evaluation episodes of the greedy policy per checkpoint;
    /// 0 skips evaluation (the value-estimate metric is always recorded).
    std::size_t eval_episodes = 0;

    void validate() const;
};

/// Learning rate for the k-th visit of a pair (k >= 1).
double alpha_for(const LearnerConfig& cfg, std::size_t visit_count);

/// Exploration bonus c_b * sqrt(ln(S*A*K*T/delta) / k) for the k-th visit.
double ucb_bonus(const LearnerConfig& cfg, std::size_t n_states, std::size_t n_actions,
                 std::size_t visit_count);

struct CurvePoint {
    std::size_t episode = 0;      ///< episodes completed at this checkpoint
    double value_estimate = 0.0;  ///< sum_s rho0(s) max_a Q(s,a)
    double mc_return = 0.0;       ///< Monte-Carlo return of the greedy policy
    bool has_mc = false;
};

struct LearningCurve {
    std::vector<CurvePoint> points;
    void validate() const; ///< episode indices strictly increasing
};

struct LearnerRun {
    QTable q; ///< final table (Q, or Q_U for the UCB variants)
    LearningCurve curve;
    std::vector<std::vector<std::size_t>> visits; ///< [s][a] visit counts
    /// Number of post-update states where the table exceeded its upper bound
    /// at the visited pair (CB-UCB only; 0 when the clip is applied).
    std::size_t clip_violations = 0;
};

/// One tabular Bellman update: Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')).
/// Only the (s,a) entry changes.
QTable q_learning_step(const QTable& q, const EpisodeStep& tr, double alpha, double gamma);

/// The same update projected into [lo(s,a), hi(s,a)] at the visited pair.
QTable cbc_q_learning_step(const QTable& q, const EpisodeStep& tr, double alpha, double gamma,
                           const QBoundTable& bounds);

/// Optimistic update with exploration bonus:
/// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a') + bonus(k)).
/// alpha comes from cfg's schedule at visit count k.
QTable ucb_q_learning_step(const QTable& q, const EpisodeStep& tr, std::size_t visit_count,
                           std::size_t n_states, const LearnerConfig& cfg);

/// Episodic runs on a contextual environment. The latent context is redrawn
/// every step and never shown to the learner, so the learner's world is
/// exactly the context-marginal MDP (whose Q* the bound tables bracket).
/// Q-learning variants act epsilon-greedily (greedy mass 1-epsilon, rest
/// split over other actions); UCB variants act purely greedily in the
/// optimistically initialized table. All runs are bit-reproducible from
/// (cfg, env).
LearnerRun run_q_learning(const ContextualMdp& env, const LearnerConfig& cfg);
LearnerRun run_cbc_q(const ContextualMdp& env, const LearnerConfig& cfg, const QBoundTable& bounds);
LearnerRun run_ucb_q(const ContextualMdp& env, const LearnerConfig& cfg);
/// UCB-Q whose table is clipped to min(Q_U, hi) at the visited pair after
/// every update, using the causal upper bound as the confidence ceiling.
LearnerRun run_cb_ucb_q(const ContextualMdp& env, const LearnerConfig& cfg, const QBoundTable& bounds);

} // namespace causalrl
