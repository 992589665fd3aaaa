#include "causalrl/demonstrator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace causalrl {

ContextPolicy contextual_optimal_policy(const ContextualMdp& cmdp, double tol) {
    ContextPolicy cp;
    for (const Mdp& m : cmdp.contexts) cp.per_context.push_back(value_iteration(m, tol).policy);
    return cp;
}

Policy epsilon_greedy(const Policy& base, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon_greedy: eps must lie in [0,1]");
    Policy out = base;
    for (auto& row : out.probs) {
        const std::size_t n = row.size();
        if (n <= 1) continue;
        std::vector<double> soft(n, 0.0);
        for (std::size_t a = 0; a < n; a++) {
            // Base mass shrinks to (1-eps); the explore mass spreads over the
            // actions the base would not have taken.
            soft[a] += (1.0 - eps) * row[a];
            double off = eps * row[a] / static_cast<double>(n - 1);
            for (std::size_t b = 0; b < n; b++)
                if (b != a) soft[b] += off;
        }
        row = soft;
    }
    return out;
}

ContextPolicy epsilon_greedy(const ContextPolicy& base, double eps) {
    ContextPolicy out;
    for (const Policy& p : base.per_context) out.per_context.push_back(epsilon_greedy(p, eps));
    return out;
}

ContextPolicy DeterministicContextPolicySpec::build(std::size_t n_contexts, std::size_t n_states,
                                                    std::size_t n_actions) const {
    if (default_action >= n_actions) throw std::invalid_argument("policy spec: default action out of range");
    std::vector<std::vector<std::size_t>> choice(n_contexts, std::vector<std::size_t>(n_states, default_action));
    for (const auto& ov : overrides) {
        if (ov.state >= n_states || ov.context >= n_contexts || ov.action >= n_actions)
            throw std::invalid_argument("policy spec: override out of range");
        choice[ov.context][ov.state] = ov.action;
    }
    ContextPolicy cp;
    for (std::size_t u = 0; u < n_contexts; u++)
        cp.per_context.push_back(Policy::deterministic(choice[u], n_actions));
    return cp;
}

DeterministicContextPolicySpec reward_grid_demo_spec(const GridSpec& grid) {
    DeterministicContextPolicySpec spec;
    spec.default_action = kUp;
    const std::size_t near_red = grid.index(Cell{1, 4});
    const std::size_t near_green = grid.index(Cell{3, 4});
    spec.overrides = {
        {near_red, 0, kLeft}, {near_red, 1, kUp},
        {near_green, 0, kRight}, {near_green, 1, kLeft},
    };
    return spec;
}

DeterministicContextPolicySpec transition_grid_demo_spec(const GridSpec& grid) {
    DeterministicContextPolicySpec spec;
    spec.default_action = kUp;
    const std::size_t below_red = grid.index(Cell{0, 2});
    const std::size_t below_green = grid.index(Cell{4, 2});
    spec.overrides = {
        {below_red, 0, kUp}, {below_red, 1, kRight},
        {below_green, 0, kUp}, {below_green, 1, kLeft},
    };
    return spec;
}

double StateObservation::action_marginal(std::size_t a) const {
    double p = 0.0;
    for (const auto& row : reward_joint) p += row[a];
    return p;
}

namespace {

/// Mutable accumulator for one state's counts/probabilities.
struct StateAccumulator {
    double visits = 0;
    std::vector<double> reward_values;
    std::vector<std::size_t> successors;
    std::vector<std::vector<double>> reward_rows;    // parallel to reward_values
    std::vector<std::vector<double>> successor_rows; // parallel to successors
    std::size_t n_actions = 0;

    std::size_t reward_row(double r) {
        for (std::size_t i = 0; i < reward_values.size(); i++)
            if (reward_values[i] == r) return i;
        reward_values.push_back(r);
        reward_rows.emplace_back(n_actions, 0.0);
        return reward_values.size() - 1;
    }

    std::size_t successor_row(std::size_t s) {
        for (std::size_t i = 0; i < successors.size(); i++)
            if (successors[i] == s) return i;
        successors.push_back(s);
        successor_rows.emplace_back(n_actions, 0.0);
        return successors.size() - 1;
    }

    void add(std::size_t a, double r, std::size_t s_next, double weight) {
        reward_rows[reward_row(r)][a] += weight;
        successor_rows[successor_row(s_next)][a] += weight;
    }

    /// Ensure a reward value exists in the outcome space even at mass zero.
    void touch_reward(double r) { reward_row(r); }
    void touch_successor(std::size_t s) { successor_row(s); }

    StateObservation finish(double normalizer) const {
        StateObservation out;
        out.covered = normalizer > 0.0;
        out.visits = visits;
        if (!out.covered) return out;

        std::vector<std::size_t> ri(reward_values.size());
        for (std::size_t i = 0; i < ri.size(); i++) ri[i] = i;
        std::sort(ri.begin(), ri.end(),
                  [&](std::size_t a, std::size_t b) { return reward_values[a] < reward_values[b]; });
        std::vector<std::size_t> si(successors.size());
        for (std::size_t i = 0; i < si.size(); i++) si[i] = i;
        std::sort(si.begin(), si.end(), [&](std::size_t a, std::size_t b) { return successors[a] < successors[b]; });

        for (std::size_t i : ri) {
            out.reward_values.push_back(reward_values[i]);
            std::vector<double> row = reward_rows[i];
            for (double& x : row) x /= normalizer;
            out.reward_joint.push_back(std::move(row));
        }
        for (std::size_t i : si) {
            out.successors.push_back(successors[i]);
            std::vector<double> row = successor_rows[i];
            for (double& x : row) x /= normalizer;
            out.successor_joint.push_back(std::move(row));
        }
        return out;
    }
};

ObservationalDistribution finish_all(std::vector<StateAccumulator>& accs, std::size_t n_states,
                                     std::size_t n_actions, ObservationalDistribution::Source source,
                                     bool normalize_by_visits) {
    ObservationalDistribution obs;
    obs.source = source;
    obs.n_states = n_states;
    obs.n_actions = n_actions;
    for (auto& acc : accs) obs.states.push_back(acc.finish(normalize_by_visits ? acc.visits : 1.0));
    return obs;
}

} // namespace

ObservationalDistribution analytic_observational(const ContextualMdp& cmdp, const ContextPolicy& policy) {
    const std::size_t ns = cmdp.n_states(), na = cmdp.n_actions(), nu = cmdp.n_contexts();
    policy.validate(nu, ns, na);
    std::vector<StateAccumulator> accs(ns);
    for (auto& acc : accs) acc.n_actions = na;
    for (std::size_t s = 0; s < ns; s++) {
        StateAccumulator& acc = accs[s];
        acc.visits = 0;
        for (std::size_t u = 0; u < nu; u++) {
            const Mdp& m = cmdp.contexts[u];
            for (std::size_t a = 0; a < na; a++) {
                // The outcome space lists every value/successor the state can
                // produce, even at observational mass zero.
                const RewardDistribution& rd = m.reward[s][a];
                for (std::size_t i = 0; i < rd.values.size(); i++)
                    if (rd.probs[i] > 0.0) acc.touch_reward(rd.values[i]);
                for (std::size_t t = 0; t < ns; t++)
                    if (m.transition[s][a][t] > 0.0) acc.touch_successor(t);

                double pa = cmdp.context_dist[u] * policy.per_context[u].probs[s][a];
                if (pa == 0.0) continue;
                for (std::size_t i = 0; i < rd.values.size(); i++)
                    if (rd.probs[i] > 0.0) acc.reward_rows[acc.reward_row(rd.values[i])][a] += pa * rd.probs[i];
                for (std::size_t t = 0; t < ns; t++)
                    if (m.transition[s][a][t] > 0.0)
                        acc.successor_rows[acc.successor_row(t)][a] += pa * m.transition[s][a][t];
            }
        }
        acc.visits = 1.0; // marks covered; analytic states carry no counts
    }
    ObservationalDistribution obs = finish_all(accs, ns, na, ObservationalDistribution::Source::analytic, false);
    for (auto& st : obs.states) st.visits = 0;
    return obs;
}

namespace {

void record_step(std::vector<StateAccumulator>& accs, const EpisodeStep& step, DemoDataset* keep) {
    StateAccumulator& acc = accs[step.s];
    acc.visits += 1.0;
    acc.add(step.a, step.r, step.s_next, 1.0);
    if (keep) keep->tuples.push_back(step);
}

} // namespace

ObservationalDistribution collect_observations(const ContextualMdp& cmdp, const ContextPolicy& policy,
                                               std::size_t episodes, std::size_t T, Rng& rng,
                                               DemoDataset* keep_tuples) {
    const std::size_t ns = cmdp.n_states(), na = cmdp.n_actions();
    policy.validate(cmdp.n_contexts(), ns, na);
    std::vector<StateAccumulator> accs(ns);
    for (auto& acc : accs) acc.n_actions = na;
    for (std::size_t e = 0; e < episodes; e++) {
        EpisodeLog log = simulate_episode(cmdp, policy, T, rng);
        for (const auto& step : log.steps) record_step(accs, step, keep_tuples);
    }
    return finish_all(accs, ns, na, ObservationalDistribution::Source::episodic, true);
}

ObservationalDistribution collect_observations_query(const ContextualMdp& cmdp, const ContextPolicy& policy,
                                                     std::size_t samples, Rng& rng, DemoDataset* keep_tuples) {
    const std::size_t ns = cmdp.n_states(), na = cmdp.n_actions();
    policy.validate(cmdp.n_contexts(), ns, na);
    std::vector<StateAccumulator> accs(ns);
    for (auto& acc : accs) acc.n_actions = na;
    for (std::size_t i = 0; i < samples; i++) {
        std::size_t u = rng.categorical(cmdp.context_dist);
        std::size_t s = static_cast<std::size_t>(rng.uniform() * static_cast<double>(ns));
        if (s >= ns) s = ns - 1;
        const Mdp& m = cmdp.contexts[u];
        std::size_t a = policy.act(s, u, rng);
        double r = m.reward[s][a].values[rng.categorical(m.reward[s][a].probs)];
        std::size_t s_next = rng.categorical(m.transition[s][a]);
        record_step(accs, EpisodeStep{s, a, s_next, r}, keep_tuples);
    }
    return finish_all(accs, ns, na, ObservationalDistribution::Source::query, true);
}

ObservationalDistribution DemoDataset::to_observational(std::size_t n_states, std::size_t n_actions) const {
    std::vector<StateAccumulator> accs(n_states);
    for (auto& acc : accs) acc.n_actions = n_actions;
    for (const auto& step : tuples) {
        if (step.s >= n_states || step.a >= n_actions || step.s_next >= n_states)
            throw std::invalid_argument("DemoDataset: tuple outside the declared spaces");
        StateAccumulator& acc = accs[step.s];
        acc.visits += 1.0;
        acc.add(step.a, step.r, step.s_next, 1.0);
    }
    ObservationalDistribution obs;
    obs.source = ObservationalDistribution::Source::episodic;
    obs.n_states = n_states;
    obs.n_actions = n_actions;
    for (auto& acc : accs) obs.states.push_back(acc.finish(acc.visits));
    return obs;
}

NaiveEstimates naive_estimates(const ObservationalDistribution& obs) {
    NaiveEstimates est;
    est.n_states = obs.n_states;
    est.n_actions = obs.n_actions;
    est.action_marginal.assign(obs.n_states, std::vector<double>(obs.n_actions, 0.0));
    est.reward_mean.assign(obs.n_states, std::vector<double>(obs.n_actions, 0.0));
    est.valid.assign(obs.n_states, std::vector<char>(obs.n_actions, 0));
    est.successor_cond.resize(obs.n_states);
    for (std::size_t s = 0; s < obs.n_states; s++) {
        const StateObservation& st = obs.states[s];
        if (!st.covered) continue;
        est.successor_cond[s].assign(st.successors.size(), std::vector<double>(obs.n_actions, 0.0));
        for (std::size_t a = 0; a < obs.n_actions; a++) {
            double pa = st.action_marginal(a);
            est.action_marginal[s][a] = pa;
            if (pa <= 0.0) continue;
            est.valid[s][a] = 1;
            double mean = 0.0;
            for (std::size_t i = 0; i < st.reward_values.size(); i++)
                mean += st.reward_values[i] * st.reward_joint[i][a];
            est.reward_mean[s][a] = mean / pa;
            for (std::size_t i = 0; i < st.successors.size(); i++)
                est.successor_cond[s][i][a] = st.successor_joint[i][a] / pa;
        }
    }
    return est;
}

Mdp naive_mdp(const ObservationalDistribution& obs, const Mdp& reference) {
    if (obs.n_states != reference.n_states() || obs.n_actions != reference.n_actions())
        throw std::invalid_argument("naive_mdp: observational/reference space mismatch");
    NaiveEstimates est = naive_estimates(obs);
    Mdp out;
    out.states = reference.states;
    out.actions = reference.actions;
    out.gamma = reference.gamma;
    out.initial_dist = reference.initial_dist;
    out.transition.assign(obs.n_states,
                          std::vector<std::vector<double>>(obs.n_actions, std::vector<double>(obs.n_states, 0.0)));
    out.reward.assign(obs.n_states, std::vector<RewardDistribution>(obs.n_actions));
    for (std::size_t s = 0; s < obs.n_states; s++) {
        const StateObservation& st = obs.states[s];
        for (std::size_t a = 0; a < obs.n_actions; a++) {
            if (!st.covered || !est.valid[s][a])
                throw std::invalid_argument("naive_mdp: no observations for state " + std::to_string(s) +
                                            " action " + std::to_string(a));
            out.reward[s][a] = RewardDistribution::point(est.reward_mean[s][a]);
            double total = 0.0;
            for (std::size_t i = 0; i < st.successors.size(); i++) {
                out.transition[s][a][st.successors[i]] = est.successor_cond[s][i][a];
                total += est.successor_cond[s][i][a];
            }
            // Empirical conditioning can be off by rounding; renormalize.
            if (std::abs(total - 1.0) > 1e-9) {
                if (total <= 0.0) throw std::invalid_argument("naive_mdp: empty successor row");
                for (std::size_t t = 0; t < obs.n_states; t++) out.transition[s][a][t] /= total;
            }
        }
    }
    out.validate();
    return out;
}

} // namespace causalrl
