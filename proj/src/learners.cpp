#include "causalrl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace causalrl {

void LearnerConfig::validate() const {
    if (schedule == AlphaSchedule::constant && !(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("learner config: constant alpha outside (0,1]");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("learner config: epsilon outside [0,1]");
    if (!(ucb_bonus_scale >= 0.0)) throw std::invalid_argument("learner config: negative bonus scale");
    if (!(ucb_confidence > 0.0 && ucb_confidence < 1.0))
        throw std::invalid_argument("learner config: confidence outside (0,1)");
    if (horizon == 0) throw std::invalid_argument("learner config: horizon must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("learner config: gamma outside (0,1)");
    if (checkpoint_every == 0) throw std::invalid_argument("learner config: checkpoint cadence must be >= 1");
}

double alpha_for(const LearnerConfig& cfg, std::size_t visit_count) {
    if (visit_count == 0) throw std::invalid_argument("alpha schedule: visit count must be >= 1");
    switch (cfg.schedule) {
        case AlphaSchedule::constant: return cfg.alpha;
        case AlphaSchedule::inverse_visit: return 1.0 / static_cast<double>(visit_count);
        case AlphaSchedule::ucb_horizon: {
            const double h = static_cast<double>(cfg.horizon);
            return (h + 1.0) / (h + static_cast<double>(visit_count));
        }
    }
    throw std::logic_error("alpha schedule: unknown schedule");
}

double ucb_bonus(const LearnerConfig& cfg, std::size_t n_states, std::size_t n_actions,
                 std::size_t visit_count) {
    if (visit_count == 0) throw std::invalid_argument("ucb bonus: visit count must be >= 1");
    const double pairs = static_cast<double>(n_states) * static_cast<double>(n_actions);
    const double steps = static_cast<double>(std::max<std::size_t>(cfg.episodes, 1)) *
                         static_cast<double>(cfg.horizon);
    const double log_term = std::log(pairs * steps / cfg.ucb_confidence);
    return cfg.ucb_bonus_scale * std::sqrt(std::max(log_term, 0.0) / static_cast<double>(visit_count));
}

void LearningCurve::validate() const {
    for (std::size_t i = 1; i < points.size(); i++)
        if (points[i].episode <= points[i - 1].episode)
            throw std::invalid_argument("learning curve: episodes not increasing");
}

namespace {

double greedy_backup(const QTable& q, std::size_t s) { return q.max_value(s); }

void update_in_place(QTable& q, const EpisodeStep& tr, double alpha, double gamma, double bonus) {
    const double target = tr.r + gamma * greedy_backup(q, tr.s_next) + bonus;
    double& cell = q.at(tr.s, tr.a);
    cell = (1.0 - alpha) * cell + alpha * target;
}

} // namespace

QTable q_learning_step(const QTable& q, const EpisodeStep& tr, double alpha, double gamma) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("q step: alpha outside (0,1]");
    QTable out = q;
    update_in_place(out, tr, alpha, gamma, 0.0);
    return out;
}

QTable cbc_q_learning_step(const QTable& q, const EpisodeStep& tr, double alpha, double gamma,
                           const QBoundTable& bounds) {
    QTable out = q_learning_step(q, tr, alpha, gamma);
    double& cell = out.at(tr.s, tr.a);
    cell = std::clamp(cell, bounds.lo_at(tr.s, tr.a), bounds.hi_at(tr.s, tr.a));
    return out;
}

QTable ucb_q_learning_step(const QTable& q, const EpisodeStep& tr, std::size_t visit_count,
                           std::size_t n_states, const LearnerConfig& cfg) {
    QTable out = q;
    update_in_place(out, tr, alpha_for(cfg, visit_count), cfg.gamma,
                    ucb_bonus(cfg, n_states, q.n_actions, visit_count));
    return out;
}

namespace {

enum class Variant { plain_q, cbc_q, ucb_q, cb_ucb_q };

bool is_ucb(Variant v) { return v == Variant::ucb_q || v == Variant::cb_ucb_q; }

std::size_t epsilon_greedy_action(const QTable& q, std::size_t s, double epsilon, Rng& rng) {
    const std::size_t greedy = q.greedy(s);
    if (q.n_actions <= 1 || epsilon <= 0.0) return greedy;
    if (rng.uniform() >= epsilon) return greedy;
    // Exploration mass is split over the non-greedy actions.
    std::size_t pick = static_cast<std::size_t>(rng.uniform() * static_cast<double>(q.n_actions - 1));
    if (pick >= q.n_actions - 1) pick = q.n_actions - 2;
    return pick >= greedy ? pick + 1 : pick;
}

double value_estimate(const QTable& q, const std::vector<double>& initial_dist) {
    double v = 0.0;
    for (std::size_t s = 0; s < q.n_states; s++)
        if (initial_dist[s] > 0.0) v += initial_dist[s] * q.max_value(s);
    return v;
}

Policy greedy_policy(const QTable& q) {
    std::vector<std::size_t> choice(q.n_states, 0);
    for (std::size_t s = 0; s < q.n_states; s++) choice[s] = q.greedy(s);
    return Policy::deterministic(choice, q.n_actions);
}

constexpr std::uint64_t kLearnStream = 1;
constexpr std::uint64_t kEvalStreamBase = 1u << 20;

LearnerRun run_variant(const ContextualMdp& env, const LearnerConfig& cfg, const QBoundTable* bounds,
                       Variant variant) {
    cfg.validate();
    env.validate();
    const std::size_t ns = env.n_states(), na = env.n_actions();
    if (bounds && (bounds->n_states != ns || bounds->n_actions != na))
        throw std::invalid_argument("learner: bound table dimension mismatch");

    LearnerRun run;
    run.q = QTable(ns, na);
    if (is_ucb(variant)) {
        // Optimistic start at the best geometric-series value the environment
        // allows; required for the pure greedy-in-Q rule to explore.
        double r_max = env.contexts.front().max_reward();
        for (const Mdp& m : env.contexts) r_max = std::max(r_max, m.max_reward());
        const double init = r_max / (1.0 - cfg.gamma);
        std::fill(run.q.data.begin(), run.q.data.end(), init);
    }
    run.visits.assign(ns, std::vector<std::size_t>(na, 0));

    const std::vector<double>& rho0 = env.contexts.front().initial_dist;
    Rng learn_rng = Rng(cfg.seed).derive(kLearnStream);

    for (std::size_t episode = 0; episode < cfg.episodes; episode++) {
        std::size_t s = learn_rng.categorical(rho0);
        for (std::size_t t = 0; t < cfg.horizon; t++) {
            const std::size_t a = is_ucb(variant) ? run.q.greedy(s)
                                                  : epsilon_greedy_action(run.q, s, cfg.epsilon, learn_rng);
            // The latent context is redrawn every step: the learner's world is
            // then exactly the context-marginal MDP (the model Q* is defined
            // on), while each step's (reward, successor) joint stays exact.
            // Episode-persistent contexts would correlate repeat visits within
            // an episode and shift the pooled kernels away from the marginal.
            const std::size_t u = learn_rng.categorical(env.context_dist);
            const Mdp& world = env.contexts[u];
            const RewardDistribution& rd = world.reward[s][a];
            const double r = rd.values[learn_rng.categorical(rd.probs)];
            const std::size_t s_next = learn_rng.categorical(world.transition[s][a]);

            const std::size_t k = ++run.visits[s][a];
            const double alpha = alpha_for(cfg, k);
            const double bonus = is_ucb(variant) ? ucb_bonus(cfg, ns, na, k) : 0.0;
            update_in_place(run.q, EpisodeStep{s, a, s_next, r}, alpha, cfg.gamma, bonus);

            double& cell = run.q.at(s, a);
            if (variant == Variant::cbc_q)
                cell = std::clamp(cell, bounds->lo_at(s, a), bounds->hi_at(s, a));
            if (variant == Variant::cb_ucb_q) {
                cell = std::min(cell, bounds->hi_at(s, a));
                if (cell > bounds->hi_at(s, a) + 1e-12) run.clip_violations++;
            }
            s = s_next;
        }

        const std::size_t done = episode + 1;
        if (done % cfg.checkpoint_every == 0 || done == cfg.episodes) {
            CurvePoint point;
            point.episode = done;
            point.value_estimate = value_estimate(run.q, rho0);
            if (cfg.eval_episodes > 0) {
                Rng eval_rng = Rng(cfg.seed).derive(kEvalStreamBase + done);
                point.mc_return =
                    evaluate_policy(env, greedy_policy(run.q), cfg.eval_episodes, cfg.horizon, eval_rng)
                        .mean;
                point.has_mc = true;
            }
            run.curve.points.push_back(point);
        }
    }
    run.curve.validate();
    return run;
}

} // namespace

LearnerRun run_q_learning(const ContextualMdp& env, const LearnerConfig& cfg) {
    return run_variant(env, cfg, nullptr, Variant::plain_q);
}

LearnerRun run_cbc_q(const ContextualMdp& env, const LearnerConfig& cfg, const QBoundTable& bounds) {
    bounds.validate();
    return run_variant(env, cfg, &bounds, Variant::cbc_q);
}

LearnerRun run_ucb_q(const ContextualMdp& env, const LearnerConfig& cfg) {
    return run_variant(env, cfg, nullptr, Variant::ucb_q);
}

LearnerRun run_cb_ucb_q(const ContextualMdp& env, const LearnerConfig& cfg, const QBoundTable& bounds) {
    bounds.validate();
    return run_variant(env, cfg, &bounds, Variant::cb_ucb_q);
}

} // namespace causalrl
