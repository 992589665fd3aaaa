#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "causalrl/causal_bounds.hpp"
#include "causalrl/demonstrator.hpp"
#include "causalrl/gridworld.hpp"
#include "causalrl/learners.hpp"
#include "causalrl/mdp.hpp"
#include "causalrl/value_bounds.hpp"

using namespace causalrl;

namespace {

// One state, two actions, deterministic: action 0 pays 1, action 1 pays 0.
// With gamma 0.9: Q*(0) = 10, Q*(1) = 9.
ContextualMdp tiny_env() {
    Mdp mdp;
    mdp.states.size = 1;
    mdp.actions.size = 2;
    mdp.transition = {{{1.0}, {1.0}}};
    mdp.reward = {{RewardDistribution::point(1.0), RewardDistribution::point(0.0)}};
    mdp.gamma = 0.9;
    mdp.initial_dist = {1.0};
    ContextualMdp cmdp;
    cmdp.context_dist = {1.0};
    cmdp.contexts = {mdp};
    return cmdp;
}

QBoundTable flat_bounds(std::size_t ns, std::size_t na, double lo, double hi) {
    QBoundTable b;
    b.n_states = ns;
    b.n_actions = na;
    b.lo.assign(ns * na, lo);
    b.hi.assign(ns * na, hi);
    return b;
}

LearnerConfig tiny_cfg() {
    LearnerConfig cfg;
    cfg.episodes = 800;
    cfg.horizon = 10;
    cfg.gamma = 0.9;
    cfg.epsilon = 0.5;
    cfg.schedule = AlphaSchedule::ucb_horizon;
    cfg.seed = 3;
    cfg.checkpoint_every = 100;
    return cfg;
}

bool same_run(const LearnerRun& a, const LearnerRun& b) {
    if (a.q.data != b.q.data) return false;
    if (a.visits != b.visits) return false;
    if (a.curve.points.size() != b.curve.points.size()) return false;
    for (std::size_t i = 0; i < a.curve.points.size(); i++) {
        const CurvePoint& p = a.curve.points[i];
        const CurvePoint& q = b.curve.points[i];
        if (p.episode != q.episode || p.value_estimate != q.value_estimate || p.mc_return != q.mc_return ||
            p.has_mc != q.has_mc)
            return false;
    }
    return a.clip_violations == b.clip_violations;
}

} // namespace

TEST_CASE("learning-rate schedules") {
    LearnerConfig cfg;
    cfg.horizon = 60;
    SUBCASE("constant") {
        cfg.schedule = AlphaSchedule::constant;
        cfg.alpha = 0.37;
        CHECK(alpha_for(cfg, 1) == 0.37);
        CHECK(alpha_for(cfg, 1000) == 0.37);
    }
    SUBCASE("inverse visit count") {
        cfg.schedule = AlphaSchedule::inverse_visit;
        CHECK(alpha_for(cfg, 1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(alpha_for(cfg, 4) == doctest::Approx(0.25).epsilon(1e-12));
    }
    SUBCASE("horizon-weighted") {
        cfg.schedule = AlphaSchedule::ucb_horizon;
        CHECK(alpha_for(cfg, 1) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(alpha_for(cfg, 2) == doctest::Approx(61.0 / 62.0).epsilon(1e-12));
        CHECK(alpha_for(cfg, 100) == doctest::Approx(61.0 / 160.0).epsilon(1e-12));
    }
}

TEST_CASE("exploration bonus") {
    LearnerConfig cfg;
    cfg.ucb_bonus_scale = 1.0;
    cfg.ucb_confidence = 0.05;
    cfg.episodes = 6000;
    cfg.horizon = 60;
    double expected = std::sqrt(std::log(25.0 * 4.0 * 6000.0 * 60.0 / 0.05) / 7.0);
    CHECK(ucb_bonus(cfg, 25, 4, 7) == doctest::Approx(expected).epsilon(1e-12));

    SUBCASE("scales linearly in c_b") {
        cfg.ucb_bonus_scale = 2.5;
        CHECK(ucb_bonus(cfg, 25, 4, 7) == doctest::Approx(2.5 * expected).epsilon(1e-12));
    }
    SUBCASE("quadrupling the visit count halves the bonus") {
        double b1 = ucb_bonus(cfg, 25, 4, 13);
        double b4 = ucb_bonus(cfg, 25, 4, 52);
        CHECK(b1 / b4 == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("single tabular updates") {
    QTable q(2, 2, 0.0);
    q.at(0, 0) = 5.0;
    q.at(1, 0) = 2.0;
    q.at(1, 1) = 7.0;
    EpisodeStep tr{0, 0, 1, 3.0};

    SUBCASE("plain update moves one entry toward the bootstrap target") {
        // target = 3 + 0.9 * max(2, 7) = 9.3
        QTable next = q_learning_step(q, tr, 0.5, 0.9);
        CHECK(next.at(0, 0) == doctest::Approx(0.5 * 5.0 + 0.5 * 9.3).epsilon(1e-12));
        CHECK(next.at(0, 1) == 0.0);
        CHECK(next.at(1, 0) == 2.0);
        CHECK(next.at(1, 1) == 7.0);
    }
    SUBCASE("alpha=1 replaces the entry with the target") {
        QTable next = q_learning_step(q, tr, 1.0, 0.9);
        CHECK(next.at(0, 0) == doctest::Approx(9.3).epsilon(1e-12));
    }
    SUBCASE("alpha=0 is rejected like any rate outside (0,1]") {
        CHECK_THROWS_AS(q_learning_step(q, tr, 0.0, 0.9), std::invalid_argument);
    }
    SUBCASE("the clipped update projects into the interval") {
        // Raw update at alpha=0.5 gives 7.15.
        QTable inside = cbc_q_learning_step(q, tr, 0.5, 0.9, flat_bounds(2, 2, -100.0, 100.0));
        CHECK(inside.at(0, 0) == doctest::Approx(7.15).epsilon(1e-12));
        QTable above = cbc_q_learning_step(q, tr, 0.5, 0.9, flat_bounds(2, 2, -100.0, 6.5));
        CHECK(above.at(0, 0) == 6.5);
        QTable below = cbc_q_learning_step(q, tr, 0.5, 0.9, flat_bounds(2, 2, 8.25, 100.0));
        CHECK(below.at(0, 0) == 8.25);
        // Untouched entries are not projected.
        QTable far = cbc_q_learning_step(q, tr, 0.5, 0.9, flat_bounds(2, 2, -1.0, 6.5));
        CHECK(far.at(1, 1) == 7.0);
    }
    SUBCASE("a zero bonus reduces the optimistic update to the plain one") {
        LearnerConfig cfg;
        cfg.schedule = AlphaSchedule::constant;
        cfg.alpha = 0.5;
        cfg.gamma = 0.9;
        cfg.ucb_bonus_scale = 0.0;
        QTable a = ucb_q_learning_step(q, tr, 12, 2, cfg);
        QTable b = q_learning_step(q, tr, 0.5, 0.9);
        CHECK(a.data == b.data);
    }
    SUBCASE("the optimistic update adds the visit-count bonus") {
        LearnerConfig cfg;
        cfg.schedule = AlphaSchedule::constant;
        cfg.alpha = 1.0;
        cfg.gamma = 0.9;
        cfg.ucb_bonus_scale = 1.0;
        QTable a = ucb_q_learning_step(q, tr, 4, 2, cfg);
        CHECK(a.at(0, 0) == doctest::Approx(9.3 + ucb_bonus(cfg, 2, 2, 4)).epsilon(1e-12));
    }
}

TEST_CASE("repeated updates reach the deterministic fixed point") {
    // Drive both actions by hand: the targets are deterministic, so with a
    // constant rate the error contracts geometrically to zero.
    QTable q(1, 2, 0.0);
    for (std::size_t it = 0; it < 2000; it++) {
        q = q_learning_step(q, {0, 0, 0, 1.0}, 0.5, 0.9);
        q = q_learning_step(q, {0, 1, 0, 0.0}, 0.5, 0.9);
    }
    CHECK(q.at(0, 0) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(q.at(0, 1) == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("episodic q-learning") {
    ContextualMdp env = tiny_env();
    LearnerConfig cfg = tiny_cfg();

    SUBCASE("converges near the true q-table") {
        // The horizon-based schedule has a 1/k tail, so give it enough visits.
        LearnerConfig long_cfg = cfg;
        long_cfg.episodes = 20000;
        LearnerRun run = run_q_learning(env, long_cfg);
        CHECK(std::abs(run.q.at(0, 0) - 10.0) <= 5e-3);
        CHECK(std::abs(run.q.at(0, 1) - 9.0) <= 5e-3);
    }
    SUBCASE("is bit-reproducible") {
        CHECK(same_run(run_q_learning(env, cfg), run_q_learning(env, cfg)));
    }
    SUBCASE("a different seed gives a different trajectory") {
        LearnerConfig other = cfg;
        other.seed = 4;
        CHECK_FALSE(same_run(run_q_learning(env, cfg), run_q_learning(env, other)));
    }
    SUBCASE("spends every step") {
        LearnerRun run = run_q_learning(env, cfg);
        std::size_t total = 0;
        for (const auto& row : run.visits)
            for (std::size_t v : row) total += v;
        CHECK(total == cfg.episodes * cfg.horizon);
    }
    SUBCASE("checkpoints follow the cadence and end at the final episode") {
        LearnerRun run = run_q_learning(env, cfg);
        run.curve.validate();
        REQUIRE_FALSE(run.curve.points.empty());
        CHECK(run.curve.points.front().episode == cfg.checkpoint_every);
        CHECK(run.curve.points.back().episode == cfg.episodes);
        // Value estimate at the last checkpoint summarizes the final table
        // through the initial distribution (a point mass on state 0 here).
        double expect = std::max(run.q.at(0, 0), run.q.at(0, 1));
        CHECK(run.curve.points.back().value_estimate == doctest::Approx(expect).epsilon(1e-12));
        CHECK_FALSE(run.curve.points.back().has_mc);
    }
    SUBCASE("zero episodes produce an empty run") {
        LearnerConfig none = cfg;
        none.episodes = 0;
        LearnerRun run = run_q_learning(env, none);
        CHECK(run.curve.points.empty());
        CHECK(run.q.data == std::vector<double>{0.0, 0.0});
        for (const auto& row : run.visits)
            for (std::size_t v : row) CHECK(v == 0);
    }
}

TEST_CASE("clipped q-learning") {
    ContextualMdp env = tiny_env();
    LearnerConfig cfg = tiny_cfg();

    SUBCASE("vacuous bounds reproduce the plain run exactly") {
        QBoundTable huge = flat_bounds(1, 2, -1e30, 1e30);
        CHECK(same_run(run_q_learning(env, cfg), run_cbc_q(env, cfg, huge)));
    }
    SUBCASE("sound bounds keep the run near the fixed point and inside the box") {
        QBoundTable sound;
        sound.n_states = 1;
        sound.n_actions = 2;
        sound.lo = {8.0, 7.0};
        sound.hi = {12.0, 11.0};
        LearnerConfig long_cfg = cfg;
        long_cfg.episodes = 20000;
        LearnerRun run = run_cbc_q(env, long_cfg, sound);
        CHECK(std::abs(run.q.at(0, 0) - 10.0) <= 5e-3);
        CHECK(std::abs(run.q.at(0, 1) - 9.0) <= 5e-3);
        for (std::size_t a = 0; a < 2; a++) {
            CHECK(run.q.at(0, a) >= sound.lo[a] - 1e-12);
            CHECK(run.q.at(0, a) <= sound.hi[a] + 1e-12);
        }
    }
}

TEST_CASE("optimistic learners") {
    ContextualMdp env = tiny_env();
    LearnerConfig cfg = tiny_cfg();

    SUBCASE("the table starts at the optimistic ceiling") {
        LearnerConfig none = cfg;
        none.episodes = 0;
        LearnerRun run = run_ucb_q(env, none);
        // r_max / (1 - gamma) = 1 / 0.1.
        CHECK(run.q.at(0, 0) == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(run.q.at(0, 1) == doctest::Approx(10.0).epsilon(1e-12));
    }
    SUBCASE("vacuous ceilings reproduce the plain optimistic run exactly") {
        QBoundTable huge = flat_bounds(1, 2, -1e30, 1e30);
        CHECK(same_run(run_ucb_q(env, cfg), run_cb_ucb_q(env, cfg, huge)));
    }
    SUBCASE("the causal ceiling is enforced at every visited pair") {
        ContextualMdp grid = build_reward_gridworld();
        GridSpec spec = reward_grid_spec();
        ContextPolicy demo =
            epsilon_greedy(reward_grid_demo_spec(spec).build(2, grid.n_states(), grid.n_actions()), 0.3);
        ObservationalDistribution obs = analytic_observational(grid, demo);
        BoundOptions options;
        options.scope = BoundScope::heuristic;
        options.prior_mode = PriorMode::singleton_support;
        options.fallback_reward_lo = -1.0;
        options.fallback_reward_hi = 10.0;
        BoundedMdpModel model = bound_all(obs, grid.states(), grid.actions(), grid.gamma(), options);
        QBoundTable qb = q_bounds(model, robust_v_table(model, 1e-10));

        LearnerConfig gcfg;
        gcfg.episodes = 1500;
        gcfg.horizon = 60;
        gcfg.gamma = 0.9;
        gcfg.seed = 7;
        gcfg.checkpoint_every = 500;
        LearnerRun run = run_cb_ucb_q(grid, gcfg, qb);
        CHECK(run.clip_violations == 0);
        for (std::size_t s = 0; s < grid.n_states(); s++)
            for (std::size_t a = 0; a < grid.n_actions(); a++)
                if (run.visits[s][a] > 0) CHECK(run.q.at(s, a) <= qb.hi_at(s, a) + 1e-9);
    }
    SUBCASE("optimistic runs are bit-reproducible") {
        CHECK(same_run(run_ucb_q(env, cfg), run_ucb_q(env, cfg)));
    }
}

TEST_CASE("learner configuration validation") {
    LearnerConfig cfg = tiny_cfg();
    cfg.validate();
    SUBCASE("constant rate must lie in (0, 1]") {
        cfg.schedule = AlphaSchedule::constant;
        cfg.alpha = 0.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
        cfg.alpha = 1.5;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("epsilon must lie in [0, 1]") {
        cfg.epsilon = 1.5;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("horizon must be positive") {
        cfg.horizon = 0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("discount must be inside (0, 1)") {
        cfg.gamma = 1.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("checkpoint cadence must be positive") {
        cfg.checkpoint_every = 0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("bonus confidence must be inside (0, 1)") {
        cfg.ucb_confidence = 0.0;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
    SUBCASE("bonus scale must be nonnegative") {
        cfg.ucb_bonus_scale = -0.1;
        CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    }
}

TEST_CASE("learning curves validate their episode axis") {
    LearningCurve curve;
    curve.points.push_back({5, 0.0, 0.0, false});
    curve.points.push_back({10, 0.0, 0.0, false});
    curve.validate();
    curve.points.push_back({10, 0.0, 0.0, false});
    CHECK_THROWS_AS(curve.validate(), std::invalid_argument);
}
