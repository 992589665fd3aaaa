#include "causalrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace causalrl {

namespace {

constexpr double kDistTol = 1e-9;

void check_distribution(const std::vector<double>& p, const char* what) {
    double sum = 0.0;
    for (double x : p) {
        if (x < -kDistTol) throw std::invalid_argument(std::string(what) + ": negative probability");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
}

} // namespace

double RewardDistribution::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); i++) m += values[i] * probs[i];
    return m;
}

double RewardDistribution::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

double RewardDistribution::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

RewardDistribution RewardDistribution::point(double value) { return RewardDistribution{{value}, {1.0}}; }

void RewardDistribution::validate() const {
    if (values.empty() || values.size() != probs.size())
        throw std::invalid_argument("RewardDistribution: values/probs size mismatch");
    check_distribution(probs, "RewardDistribution");
}

const std::string& StateSpace::label(std::size_t s) const {
    if (s < labels.size()) return labels[s];
    scratch_ = "s" + std::to_string(s);
    return scratch_;
}

void StateSpace::validate() const {
    if (size == 0) throw std::invalid_argument("StateSpace: empty");
    if (!labels.empty() && labels.size() != size) throw std::invalid_argument("StateSpace: label count mismatch");
}

const std::string& ActionSpace::label(std::size_t a) const {
    if (a < labels.size()) return labels[a];
    scratch_ = "a" + std::to_string(a);
    return scratch_;
}

void ActionSpace::validate() const {
    if (size == 0) throw std::invalid_argument("ActionSpace: empty");
    if (!labels.empty() && labels.size() != size) throw std::invalid_argument("ActionSpace: label count mismatch");
}

double Mdp::min_reward() const {
    double m = reward[0][0].min_value();
    for (const auto& row : reward)
        for (const auto& d : row) m = std::min(m, d.min_value());
    return m;
}

double Mdp::max_reward() const {
    double m = reward[0][0].max_value();
    for (const auto& row : reward)
        for (const auto& d : row) m = std::max(m, d.max_value());
    return m;
}

void Mdp::validate() const {
    states.validate();
    actions.validate();
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("Mdp: gamma must lie in (0,1)");
    if (transition.size() != n_states() || reward.size() != n_states())
        throw std::invalid_argument("Mdp: table state dimension mismatch");
    for (std::size_t s = 0; s < n_states(); s++) {
        if (transition[s].size() != n_actions() || reward[s].size() != n_actions())
            throw std::invalid_argument("Mdp: table action dimension mismatch");
        for (std::size_t a = 0; a < n_actions(); a++) {
            if (transition[s][a].size() != n_states())
                throw std::invalid_argument("Mdp: transition row size mismatch");
            check_distribution(transition[s][a], "Mdp transition row");
            reward[s][a].validate();
        }
    }
    if (initial_dist.size() != n_states()) throw std::invalid_argument("Mdp: initial_dist size mismatch");
    check_distribution(initial_dist, "Mdp initial_dist");
}

std::size_t Policy::act(std::size_t s, Rng& rng) const { return rng.categorical(probs.at(s)); }

Policy Policy::deterministic(const std::vector<std::size_t>& actions, std::size_t n_actions) {
    Policy p;
    p.probs.assign(actions.size(), std::vector<double>(n_actions, 0.0));
    for (std::size_t s = 0; s < actions.size(); s++) p.probs[s].at(actions[s]) = 1.0;
    return p;
}

void Policy::validate(std::size_t n_states, std::size_t n_actions) const {
    if (probs.size() != n_states) throw std::invalid_argument("Policy: state dimension mismatch");
    for (const auto& row : probs) {
        if (row.size() != n_actions) throw std::invalid_argument("Policy: action dimension mismatch");
        check_distribution(row, "Policy row");
    }
}

void ContextualMdp::validate() const {
    if (contexts.empty()) throw std::invalid_argument("ContextualMdp: no contexts");
    if (context_dist.size() != contexts.size())
        throw std::invalid_argument("ContextualMdp: context_dist size mismatch");
    check_distribution(context_dist, "ContextualMdp context_dist");
    for (const auto& m : contexts) m.validate();
    const Mdp& first = contexts[0];
    for (const auto& m : contexts) {
        if (m.n_states() != first.n_states() || m.n_actions() != first.n_actions())
            throw std::invalid_argument("ContextualMdp: contexts disagree on spaces");
        if (m.gamma != first.gamma) throw std::invalid_argument("ContextualMdp: contexts disagree on gamma");
        if (m.initial_dist != first.initial_dist)
            throw std::invalid_argument("ContextualMdp: contexts disagree on initial distribution");
    }
}

ContextPolicy ContextPolicy::from_policy(const Policy& p, std::size_t n_contexts) {
    ContextPolicy cp;
    cp.per_context.assign(n_contexts, p);
    return cp;
}

void ContextPolicy::validate(std::size_t n_contexts, std::size_t n_states, std::size_t n_actions) const {
    if (per_context.size() != n_contexts) throw std::invalid_argument("ContextPolicy: context count mismatch");
    for (const auto& p : per_context) p.validate(n_states, n_actions);
}

std::size_t QTable::greedy(std::size_t s) const {
    std::size_t best = 0;
    double best_q = at(s, 0);
    for (std::size_t a = 1; a < n_actions; a++) {
        if (at(s, a) > best_q) {
            best_q = at(s, a);
            best = a;
        }
    }
    return best;
}

double QTable::max_value(std::size_t s) const { return at(s, greedy(s)); }

ValueTable bellman_backup(const Mdp& mdp, const ValueTable& v) {
    ValueTable out(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); s++) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mdp.n_actions(); a++) {
            double q = mdp.expected_reward(s, a);
            const auto& row = mdp.transition[s][a];
            double ev = 0.0;
            for (std::size_t t = 0; t < row.size(); t++)
                if (row[t] != 0.0) ev += row[t] * v[t];
            q += mdp.gamma * ev;
            best = std::max(best, q);
        }
        out[s] = best;
    }
    return out;
}

ValueIterationResult value_iteration(const Mdp& mdp, double tol) {
    const std::size_t max_iters = 5'000'000;
    ValueTable v(mdp.n_states(), 0.0);
    std::size_t iters = 0;
    // Stop once the sweep delta guarantees a Bellman residual <= tol.
    const double stop = tol / std::max(mdp.gamma, 1e-12);
    while (iters < max_iters) {
        ValueTable next = bellman_backup(mdp, v);
        double delta = 0.0;
        for (std::size_t s = 0; s < v.size(); s++) delta = std::max(delta, std::abs(next[s] - v[s]));
        v = std::move(next);
        iters++;
        if (delta <= stop) break;
    }
    QTable q = q_from_v(mdp, v);
    std::vector<std::size_t> greedy(mdp.n_states());
    double residual = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); s++) {
        greedy[s] = q.greedy(s);
        residual = std::max(residual, std::abs(q.max_value(s) - v[s]));
    }
    ValueIterationResult res;
    res.v = std::move(v);
    res.policy = Policy::deterministic(greedy, mdp.n_actions());
    res.iterations = iters;
    res.residual = residual;
    return res;
}

QTable q_from_v(const Mdp& mdp, const ValueTable& v) {
    if (v.size() != mdp.n_states()) throw std::invalid_argument("q_from_v: value table size mismatch");
    QTable q(mdp.n_states(), mdp.n_actions());
    for (std::size_t s = 0; s < mdp.n_states(); s++) {
        for (std::size_t a = 0; a < mdp.n_actions(); a++) {
            double ev = 0.0;
            const auto& row = mdp.transition[s][a];
            for (std::size_t t = 0; t < row.size(); t++)
                if (row[t] != 0.0) ev += row[t] * v[t];
            q.at(s, a) = mdp.expected_reward(s, a) + mdp.gamma * ev;
        }
    }
    return q;
}

double initial_value(const Mdp& mdp, const ValueTable& v) {
    double out = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); s++) out += mdp.initial_dist[s] * v[s];
    return out;
}

namespace {

/// Mix finite reward distributions with given weights, merging equal values.
RewardDistribution mix_rewards(const std::vector<const RewardDistribution*>& dists,
                               const std::vector<double>& weights) {
    RewardDistribution out;
    for (std::size_t k = 0; k < dists.size(); k++) {
        for (std::size_t i = 0; i < dists[k]->values.size(); i++) {
            double v = dists[k]->values[i];
            double p = weights[k] * dists[k]->probs[i];
            if (p == 0.0) continue;
            auto it = std::find(out.values.begin(), out.values.end(), v);
            if (it == out.values.end()) {
                out.values.push_back(v);
                out.probs.push_back(p);
            } else {
                out.probs[static_cast<std::size_t>(it - out.values.begin())] += p;
            }
        }
    }
    // Canonical order: ascending by value.
    std::vector<std::size_t> idx(out.values.size());
    for (std::size_t i = 0; i < idx.size(); i++) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return out.values[a] < out.values[b]; });
    RewardDistribution sorted;
    for (std::size_t i : idx) {
        sorted.values.push_back(out.values[i]);
        sorted.probs.push_back(out.probs[i]);
    }
    return sorted;
}

} // namespace

Mdp marginalize(const ContextualMdp& cmdp) {
    const std::size_t ns = cmdp.n_states(), na = cmdp.n_actions(), nu = cmdp.n_contexts();
    Mdp out;
    out.states = cmdp.states();
    out.actions = cmdp.actions();
    out.gamma = cmdp.gamma();
    out.initial_dist = cmdp.contexts[0].initial_dist;
    out.transition.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));
    out.reward.assign(ns, std::vector<RewardDistribution>(na));
    for (std::size_t s = 0; s < ns; s++) {
        for (std::size_t a = 0; a < na; a++) {
            std::vector<const RewardDistribution*> dists(nu);
            for (std::size_t u = 0; u < nu; u++) {
                dists[u] = &cmdp.contexts[u].reward[s][a];
                const auto& row = cmdp.contexts[u].transition[s][a];
                for (std::size_t t = 0; t < ns; t++) out.transition[s][a][t] += cmdp.context_dist[u] * row[t];
            }
            out.reward[s][a] = mix_rewards(dists, cmdp.context_dist);
        }
    }
    return out;
}

namespace {

EpisodeLog simulate_impl(const ContextualMdp& cmdp, const ContextPolicy* cpolicy, const Policy* policy,
                         std::size_t T, Rng& rng) {
    EpisodeLog log;
    log.context = rng.categorical(cmdp.context_dist);
    const Mdp& m = cmdp.contexts[log.context];
    std::size_t s = rng.categorical(m.initial_dist);
    log.steps.reserve(T);
    for (std::size_t t = 0; t < T; t++) {
        std::size_t a = cpolicy ? cpolicy->act(s, log.context, rng) : policy->act(s, rng);
        double r = m.reward[s][a].values[rng.categorical(m.reward[s][a].probs)];
        std::size_t s_next = rng.categorical(m.transition[s][a]);
        log.steps.push_back(EpisodeStep{s, a, s_next, r});
        s = s_next;
    }
    return log;
}

} // namespace

EpisodeLog simulate_episode(const ContextualMdp& cmdp, const ContextPolicy& policy, std::size_t T, Rng& rng) {
    return simulate_impl(cmdp, &policy, nullptr, T, rng);
}

EpisodeLog simulate_episode(const ContextualMdp& cmdp, const Policy& policy, std::size_t T, Rng& rng) {
    return simulate_impl(cmdp, nullptr, &policy, T, rng);
}

ReturnEstimate evaluate_policy(const ContextualMdp& cmdp, const Policy& policy, std::size_t episodes,
                               std::size_t T, Rng& rng) {
    double sum = 0.0, sumsq = 0.0;
    const double gamma = cmdp.gamma();
    const std::vector<double>& rho0 = cmdp.contexts.front().initial_dist;
    for (std::size_t e = 0; e < episodes; e++) {
        // A context-free policy's deployment world is the context-marginal
        // MDP: the latent context is redrawn every step (unlike demonstrator
        // episodes, where it persists and confounds the pooled data).
        std::size_t s = rng.categorical(rho0);
        double g = 0.0, disc = 1.0;
        for (std::size_t t = 0; t < T; t++) {
            const std::size_t a = policy.act(s, rng);
            const std::size_t u = rng.categorical(cmdp.context_dist);
            const Mdp& world = cmdp.contexts[u];
            const RewardDistribution& rd = world.reward[s][a];
            g += disc * rd.values[rng.categorical(rd.probs)];
            disc *= gamma;
            s = rng.categorical(world.transition[s][a]);
        }
        sum += g;
        sumsq += g * g;
    }
    ReturnEstimate est;
    est.episodes = episodes;
    est.mean = sum / static_cast<double>(episodes);
    double var = sumsq / static_cast<double>(episodes) - est.mean * est.mean;
    est.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(episodes));
    return est;
}

} // namespace causalrl
