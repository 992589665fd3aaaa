#include "causalrl/value_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace causalrl {

namespace {

void check_shape(const std::vector<std::vector<double>>& table, std::size_t ns, std::size_t na,
                 const char* what) {
    if (table.size() != ns) throw std::invalid_argument(std::string("bounded model: bad ") + what);
    for (const auto& row : table)
        if (row.size() != na) throw std::invalid_argument(std::string("bounded model: bad ") + what);
}

} // namespace

void BoundedMdpModel::validate() const {
    states.validate();
    actions.validate();
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("bounded model: gamma outside (0,1)");
    if (reward_min > reward_max) throw std::invalid_argument("bounded model: global reward range empty");
    const std::size_t ns = n_states(), na = n_actions();
    check_shape(r_lo, ns, na, "reward table");
    check_shape(r_hi, ns, na, "reward table");
    if (p_lo.size() != ns || p_hi.size() != ns)
        throw std::invalid_argument("bounded model: bad transition table");
    for (std::size_t s = 0; s < ns; s++) {
        if (p_lo[s].size() != na || p_hi[s].size() != na)
            throw std::invalid_argument("bounded model: bad transition table");
        for (std::size_t a = 0; a < na; a++) {
            if (!(r_lo[s][a] <= r_hi[s][a]))
                throw std::invalid_argument("bounded model: empty reward interval");
            if (r_lo[s][a] < reward_min - 1e-9 || r_hi[s][a] > reward_max + 1e-9)
                throw std::invalid_argument("bounded model: reward interval escapes the global range");
            const auto& lo = p_lo[s][a];
            const auto& hi = p_hi[s][a];
            if (lo.size() != ns || hi.size() != ns)
                throw std::invalid_argument("bounded model: bad transition row");
            double lo_sum = 0.0, hi_sum = 0.0;
            for (std::size_t t = 0; t < ns; t++) {
                if (!(lo[t] >= -1e-12 && hi[t] <= 1.0 + 1e-12 && lo[t] <= hi[t] + 1e-12))
                    throw std::invalid_argument("bounded model: transition interval outside [0,1]");
                lo_sum += lo[t];
                hi_sum += hi[t];
            }
            if (lo_sum > 1.0 + 1e-9 || hi_sum < 1.0 - 1e-9)
                throw std::invalid_argument("bounded model: transition box misses the simplex");
        }
    }
}

BoundedMdpModel BoundedMdpModel::from_mdp(const Mdp& mdp) {
    mdp.validate();
    BoundedMdpModel model;
    model.states = mdp.states;
    model.actions = mdp.actions;
    model.gamma = mdp.gamma;
    model.reward_min = mdp.min_reward();
    model.reward_max = mdp.max_reward();
    const std::size_t ns = mdp.n_states(), na = mdp.n_actions();
    model.r_lo.assign(ns, std::vector<double>(na, 0.0));
    model.r_hi = model.r_lo;
    model.p_lo = mdp.transition;
    model.p_hi = mdp.transition;
    for (std::size_t s = 0; s < ns; s++)
        for (std::size_t a = 0; a < na; a++) {
            double mean = mdp.expected_reward(s, a);
            model.r_lo[s][a] = mean;
            model.r_hi[s][a] = mean;
        }
    model.validate();
    return model;
}

BoundedMdpModel BoundedMdpModel::vacuous(const StateSpace& states, const ActionSpace& actions, double gamma,
                                         double reward_min, double reward_max) {
    BoundedMdpModel model;
    model.states = states;
    model.actions = actions;
    model.gamma = gamma;
    model.reward_min = reward_min;
    model.reward_max = reward_max;
    const std::size_t ns = states.size, na = actions.size;
    model.r_lo.assign(ns, std::vector<double>(na, reward_min));
    model.r_hi.assign(ns, std::vector<double>(na, reward_max));
    model.p_lo.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));
    model.p_hi.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 1.0)));
    model.validate();
    return model;
}

void VBoundTable::validate() const {
    if (lo.size() != hi.size()) throw std::invalid_argument("v-bound table: size mismatch");
    for (std::size_t s = 0; s < lo.size(); s++)
        if (!(lo[s] <= hi[s])) throw std::invalid_argument("v-bound table: empty interval");
}

void QBoundTable::validate() const {
    if (lo.size() != n_states * n_actions || hi.size() != lo.size())
        throw std::invalid_argument("q-bound table: size mismatch");
    for (std::size_t i = 0; i < lo.size(); i++)
        if (!(lo[i] <= hi[i])) throw std::invalid_argument("q-bound table: empty interval");
}

void StateWeights::validate() const {
    if (c.empty()) throw std::invalid_argument("state weights: empty");
    for (double w : c)
        if (!(w > 0.0)) throw std::invalid_argument("state weights: non-positive entry");
}

StateWeights StateWeights::uniform(std::size_t n_states, double value) {
    StateWeights w;
    w.c.assign(n_states, value);
    w.validate();
    return w;
}

StateWeights StateWeights::amplified(std::size_t n_states, std::size_t state, double amplification) {
    StateWeights w = uniform(n_states, 1.0);
    if (state >= n_states) throw std::invalid_argument("state weights: state out of range");
    w.c[state] = amplification;
    w.validate();
    return w;
}

std::vector<double> extremal_distribution(const std::vector<double>& v, const std::vector<double>& p_lo,
                                          const std::vector<double>& p_hi, Extremum direction) {
    const std::size_t n = v.size();
    if (p_lo.size() != n || p_hi.size() != n)
        throw std::invalid_argument("extremal distribution: size mismatch");
    double lo_sum = 0.0, hi_sum = 0.0;
    for (std::size_t i = 0; i < n; i++) {
        if (!(p_lo[i] >= -1e-12) || !(p_hi[i] >= p_lo[i] - 1e-12))
            throw std::invalid_argument("extremal distribution: invalid interval");
        lo_sum += p_lo[i];
        hi_sum += p_hi[i];
    }
    if (lo_sum > 1.0 + 1e-9 || hi_sum < 1.0 - 1e-9)
        throw std::invalid_argument("extremal distribution: box misses the simplex");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return direction == Extremum::maximize ? v[a] > v[b] : v[a] < v[b];
        return a < b;
    });

    std::vector<double> p = p_lo;
    double residual = 1.0 - lo_sum;
    for (std::size_t i : order) {
        if (residual <= 0.0) break;
        double add = std::min(p_hi[i] - p_lo[i], residual);
        if (add <= 0.0) continue;
        p[i] += add;
        residual -= add;
    }
    // Round-off guard: fold any leftover mass into the last coordinate that
    // still has headroom (at most ~1e-9 by the simplex check above).
    if (residual > 0.0) {
        for (std::size_t i : order)
            if (p[i] < p_hi[i]) {
                p[i] += residual;
                break;
            }
    }
    return p;
}

double robust_backup(const BoundedMdpModel& model, const ValueTable& v, std::size_t s, std::size_t a,
                     RobustDirection direction) {
    const bool up = direction == RobustDirection::optimistic;
    const std::vector<double> p = extremal_distribution(
        v, model.p_lo[s][a], model.p_hi[s][a], up ? Extremum::maximize : Extremum::minimize);
    double cont = 0.0;
    for (std::size_t t = 0; t < p.size(); t++) cont += p[t] * v[t];
    return (up ? model.r_hi[s][a] : model.r_lo[s][a]) + model.gamma * cont;
}

RobustValueResult robust_value_bounds(const BoundedMdpModel& model, RobustDirection direction, double tol) {
    model.validate();
    if (!(tol > 0.0)) throw std::invalid_argument("robust value iteration: tol must be positive");
    const std::size_t ns = model.n_states(), na = model.n_actions();
    RobustValueResult res;
    res.v.assign(ns, 0.0);
    ValueTable next(ns, 0.0);
    const double stop = tol / std::max(model.gamma, 1e-12);
    const std::size_t max_iters = 5000000;
    for (std::size_t iter = 0; iter < max_iters; iter++) {
        double change = 0.0;
        for (std::size_t s = 0; s < ns; s++) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < na; a++)
                best = std::max(best, robust_backup(model, res.v, s, a, direction));
            next[s] = best;
            change = std::max(change, std::abs(next[s] - res.v[s]));
        }
        std::swap(res.v, next);
        res.iterations = iter + 1;
        res.sweep_changes.push_back(change);
        if (change <= stop) break;
    }

    // Measure the final residual and extract the greedy policy in one pass.
    std::vector<std::size_t> greedy(ns, 0);
    double residual = 0.0;
    for (std::size_t s = 0; s < ns; s++) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_a = 0;
        for (std::size_t a = 0; a < na; a++) {
            double q = robust_backup(model, res.v, s, a, direction);
            if (q > best) {
                best = q;
                best_a = a;
            }
        }
        greedy[s] = best_a;
        residual = std::max(residual, std::abs(best - res.v[s]));
    }
    res.residual = residual;
    res.policy = Policy::deterministic(greedy, na);
    return res;
}

VBoundTable robust_v_table(const BoundedMdpModel& model, double tol) {
    VBoundTable table;
    table.hi = robust_value_bounds(model, RobustDirection::optimistic, tol).v;
    table.lo = robust_value_bounds(model, RobustDirection::pessimistic, tol).v;
    table.validate();
    return table;
}

Theorem1Interval theorem1_bounds(const BoundedMdpModel& model, const StateWeights& weights,
                                 std::size_t state, const ValueTable& v_optimistic,
                                 const ValueTable& v_pessimistic) {
    weights.validate();
    const std::size_t ns = model.n_states();
    if (weights.c.size() != ns) throw std::invalid_argument("theorem1 bounds: weight count mismatch");
    if (state >= ns) throw std::invalid_argument("theorem1 bounds: state out of range");
    if (v_optimistic.size() != ns || v_pessimistic.size() != ns)
        throw std::invalid_argument("theorem1 bounds: value table size mismatch");

    const double floor_value = model.reward_min / (1.0 - model.gamma);
    const double ceil_value = model.reward_max / (1.0 - model.gamma);
    Theorem1Interval out;
    double upper_slack = 0.0, lower_slack = 0.0;
    for (std::size_t t = 0; t < ns; t++) {
        if (t == state) continue;
        upper_slack += weights.c[t] * (v_optimistic[t] - floor_value);
        lower_slack += weights.c[t] * (ceil_value - v_pessimistic[t]);
    }
    out.upper = v_optimistic[state] + upper_slack / weights.c[state];
    out.lower = v_pessimistic[state] - lower_slack / weights.c[state];
    return out;
}

Theorem1Interval theorem1_bounds(const BoundedMdpModel& model, const StateWeights& weights,
                                 std::size_t state, double tol) {
    const ValueTable hi = robust_value_bounds(model, RobustDirection::optimistic, tol).v;
    const ValueTable lo = robust_value_bounds(model, RobustDirection::pessimistic, tol).v;
    return theorem1_bounds(model, weights, state, hi, lo);
}

QBoundTable q_bounds(const BoundedMdpModel& model, const VBoundTable& v) {
    model.validate();
    v.validate();
    const std::size_t ns = model.n_states(), na = model.n_actions();
    if (v.lo.size() != ns) throw std::invalid_argument("q bounds: value table size mismatch");
    QBoundTable q;
    q.n_states = ns;
    q.n_actions = na;
    q.lo.assign(ns * na, 0.0);
    q.hi.assign(ns * na, 0.0);
    for (std::size_t s = 0; s < ns; s++)
        for (std::size_t a = 0; a < na; a++) {
            q.hi[s * na + a] = robust_backup(model, v.hi, s, a, RobustDirection::optimistic);
            q.lo[s * na + a] = robust_backup(model, v.lo, s, a, RobustDirection::pessimistic);
        }
    q.validate();
    return q;
}

} // namespace causalrl
