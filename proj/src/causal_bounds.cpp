#include "causalrl/causal_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "causalrl/errors.hpp"

namespace causalrl {

ResponseMappingSet::ResponseMappingSet(std::size_t n_actions, std::size_t n_outcomes,
                                       std::size_t max_mappings)
    : n_actions_(n_actions), n_outcomes_(n_outcomes) {
    if (n_actions == 0 || n_outcomes == 0)
        throw std::invalid_argument("response mappings: empty action or outcome space");
    n_mappings_ = 1;
    for (std::size_t a = 0; a < n_actions; a++) {
        if (n_mappings_ > max_mappings / n_outcomes && n_outcomes > 1)
            throw EnumerationLimitError("response mappings: " + std::to_string(n_outcomes) + "^" +
                                        std::to_string(n_actions) + " exceeds the enumeration cap");
        n_mappings_ *= n_outcomes;
    }
    if (n_mappings_ > max_mappings)
        throw EnumerationLimitError("response mappings: enumeration cap exceeded");
    stride_.assign(n_actions, 1);
    for (std::size_t a = n_actions; a-- > 1;) stride_[a - 1] = stride_[a] * n_outcomes;
}

std::size_t ResponseMappingSet::digit(std::size_t action, std::size_t mapping) const {
    if (action >= n_actions_ || mapping >= n_mappings_)
        throw std::out_of_range("response mappings: index out of range");
    return (mapping / stride_[action]) % n_outcomes_;
}

std::vector<std::size_t> ResponseMappingSet::index_set(std::size_t outcome, std::size_t action) const {
    if (outcome >= n_outcomes_ || action >= n_actions_)
        throw std::out_of_range("response mappings: index out of range");
    std::vector<std::size_t> out;
    out.reserve(n_mappings_ / n_outcomes_);
    for (std::size_t j = 0; j < n_mappings_; j++)
        if (digit(action, j) == outcome) out.push_back(j);
    return out;
}

void CausalInterval::validate() const {
    if (!(lo <= hi)) throw std::invalid_argument("causal interval: lo > hi");
    if (kind == CausalKind::transition_probability && (lo < 0.0 || hi > 1.0))
        throw std::invalid_argument("causal interval: probability outside [0,1]");
    if (kind == CausalKind::transition_probability && !target.next_state)
        throw std::invalid_argument("causal interval: transition target missing next state");
}

void DoPrior::validate(std::size_t n_outcomes) const {
    if (outcome_probs.size() != n_outcomes)
        throw std::invalid_argument("do prior: outcome count mismatch");
    double sum = 0.0;
    for (double p : outcome_probs) {
        if (p < -1e-12) throw std::invalid_argument("do prior: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("do prior: probabilities do not sum to 1");
}

DoPrior point_reward_prior(const StateObservation& state_obs, std::size_t action, double reward_value) {
    DoPrior prior;
    prior.action = action;
    prior.outcome_probs.assign(state_obs.reward_values.size(), 0.0);
    for (std::size_t i = 0; i < state_obs.reward_values.size(); i++)
        if (std::abs(state_obs.reward_values[i] - reward_value) <= 1e-12) {
            prior.outcome_probs[i] = 1.0;
            return prior;
        }
    throw std::invalid_argument("do prior: reward value not in the observed support");
}

namespace {

/// Clip negatives and renormalize so the joint is an exact distribution.
std::vector<std::vector<double>> project_joint(const std::vector<std::vector<double>>& joint) {
    std::vector<std::vector<double>> out = joint;
    double sum = 0.0;
    for (auto& row : out)
        for (double& v : row) {
            if (v < 0.0) v = 0.0;
            sum += v;
        }
    if (sum <= 0.0) throw std::invalid_argument("do bounds: empty observational joint");
    if (std::abs(sum - 1.0) > 1e-12)
        for (auto& row : out)
            for (double& v : row) v /= sum;
    return out;
}

/// The identification program over q(i, j) = P(observed action i, mapping j):
/// rows reproduce the observational joint per (outcome, action); prior rows
/// pin the interventional distribution of their action across all blocks. The
/// total-mass row is implied by the observational rows and omitted.
LinearProgram assemble_do_lp(const std::vector<std::vector<double>>& joint,
                             const std::vector<double>& payoff, std::size_t target_action,
                             const std::vector<DoPrior>& priors) {
    const std::size_t n_out = joint.size();
    const std::size_t n_act = joint.empty() ? 0 : joint[0].size();
    ResponseMappingSet maps(n_act, n_out);
    const std::size_t M = maps.n_mappings();
    const std::size_t n_vars = n_act * M;

    LinearProgram lp;
    lp.c.assign(n_vars, 0.0);
    for (std::size_t i = 0; i < n_act; i++)
        for (std::size_t j = 0; j < M; j++) lp.c[i * M + j] = payoff[maps.digit(target_action, j)];

    lp.A.reserve(n_act * n_out + priors.size() * n_out);
    for (std::size_t a = 0; a < n_act; a++)
        for (std::size_t o = 0; o < n_out; o++) {
            std::vector<double> row(n_vars, 0.0);
            for (std::size_t j = 0; j < M; j++)
                if (maps.digit(a, j) == o) row[a * M + j] = 1.0;
            lp.A.push_back(std::move(row));
            lp.b.push_back(joint[o][a]);
        }
    for (const DoPrior& prior : priors) {
        prior.validate(n_out);
        if (prior.action >= n_act) throw std::invalid_argument("do prior: action out of range");
        for (std::size_t o = 0; o < n_out; o++) {
            std::vector<double> row(n_vars, 0.0);
            for (std::size_t j = 0; j < M; j++)
                if (maps.digit(prior.action, j) == o)
                    for (std::size_t i = 0; i < n_act; i++) row[i * M + j] = 1.0;
            lp.A.push_back(std::move(row));
            lp.b.push_back(prior.outcome_probs[o]);
        }
    }
    return lp;
}

double solve_direction(LinearProgram& lp, LpSense sense, const LpOptions& options) {
    lp.sense = sense;
    LpSolution sol = solve_lp(lp, options);
    switch (sol.status) {
        case LpStatus::optimal: return sol.objective;
        case LpStatus::infeasible:
            throw InfeasibleError("do bounds: observational joint and priors are inconsistent");
        case LpStatus::unbounded:
            throw UnboundedError("do bounds: malformed identification program");
    }
    throw std::logic_error("do bounds: unknown LP status");
}

std::pair<double, double> solve_do_program(const std::vector<std::vector<double>>& raw_joint,
                                           const std::vector<double>& payoff, std::size_t target_action,
                                           const std::vector<DoPrior>& priors, const LpOptions& options) {
    const std::vector<std::vector<double>> joint = project_joint(raw_joint);
    LinearProgram lp = assemble_do_lp(joint, payoff, target_action, priors);
    double lo = solve_direction(lp, LpSense::minimize, options);
    double hi = solve_direction(lp, LpSense::maximize, options);
    if (hi < lo) hi = lo; // round-off guard
    return {lo, hi};
}

void require_covered(const StateObservation& state_obs, std::size_t target_action) {
    if (!state_obs.covered) throw std::invalid_argument("do bounds: state has no observations");
    if (!state_obs.reward_joint.empty() && target_action >= state_obs.reward_joint[0].size())
        throw std::invalid_argument("do bounds: action out of range");
}

} // namespace

CausalInterval reward_do_bounds(const StateObservation& state_obs, std::size_t state,
                                std::size_t target_action, const std::vector<DoPrior>& priors,
                                const LpOptions& lp_options) {
    require_covered(state_obs, target_action);
    auto [lo, hi] =
        solve_do_program(state_obs.reward_joint, state_obs.reward_values, target_action, priors, lp_options);
    CausalInterval out;
    out.lo = lo;
    out.hi = hi;
    out.target.state = state;
    out.target.action = target_action;
    out.kind = CausalKind::reward_expectation;
    out.validate();
    return out;
}

CausalInterval transition_do_bounds(const StateObservation& state_obs, std::size_t state,
                                    std::size_t target_action, std::size_t next,
                                    const std::vector<DoPrior>& priors, const LpOptions& lp_options) {
    require_covered(state_obs, target_action);
    std::vector<double> payoff(state_obs.successors.size(), 0.0);
    bool found = false;
    for (std::size_t o = 0; o < state_obs.successors.size(); o++)
        if (state_obs.successors[o] == next) {
            payoff[o] = 1.0;
            found = true;
        }
    if (!found) throw std::invalid_argument("do bounds: successor not in the observed outcome space");
    auto [lo, hi] =
        solve_do_program(state_obs.successor_joint, payoff, target_action, priors, lp_options);
    CausalInterval out;
    out.lo = std::max(0.0, lo);
    out.hi = std::min(1.0, std::max(hi, out.lo));
    out.target.state = state;
    out.target.action = target_action;
    out.target.next_state = next;
    out.kind = CausalKind::transition_probability;
    out.validate();
    return out;
}

namespace {

constexpr double kMassTol = 1e-12;

std::size_t support_count(const std::vector<std::vector<double>>& joint, std::size_t action) {
    std::size_t n = 0;
    for (const auto& row : joint)
        if (row[action] > kMassTol) n++;
    return n;
}

bool pair_listed(const std::vector<std::pair<std::size_t, std::size_t>>& pairs, std::size_t s,
                 std::size_t a) {
    for (const auto& p : pairs)
        if (p.first == s && p.second == a) return true;
    return false;
}

/// Point priors for every other observed action with a single-outcome support.
std::vector<DoPrior> singleton_priors(const std::vector<std::vector<double>>& joint,
                                      std::size_t target_action) {
    std::vector<DoPrior> priors;
    const std::size_t n_act = joint.empty() ? 0 : joint[0].size();
    for (std::size_t a = 0; a < n_act; a++) {
        if (a == target_action) continue;
        std::size_t seen = 0, where = 0;
        double mass = 0.0;
        for (std::size_t o = 0; o < joint.size(); o++) {
            mass += joint[o][a];
            if (joint[o][a] > kMassTol) {
                seen++;
                where = o;
            }
        }
        if (mass <= kMassTol || seen != 1) continue;
        DoPrior prior;
        prior.action = a;
        prior.outcome_probs.assign(joint.size(), 0.0);
        prior.outcome_probs[where] = 1.0;
        priors.push_back(std::move(prior));
    }
    return priors;
}

} // namespace

CriticalPairReport detect_critical_pairs(const ObservationalDistribution& obs) {
    CriticalPairReport report;
    for (std::size_t s = 0; s < obs.n_states; s++) {
        const StateObservation& st = obs.states[s];
        if (!st.covered) continue;
        for (std::size_t a = 0; a < obs.n_actions; a++) {
            if (st.action_marginal(a) <= kMassTol) continue;
            if (support_count(st.reward_joint, a) >= 2) report.reward_pairs.emplace_back(s, a);
            if (support_count(st.successor_joint, a) >= 2) report.transition_pairs.emplace_back(s, a);
        }
    }
    return report;
}

BoundedMdpModel bound_all(const ObservationalDistribution& obs, const StateSpace& states,
                          const ActionSpace& actions, double gamma, const BoundOptions& options) {
    if (obs.n_states != states.size || obs.n_actions != actions.size)
        throw std::invalid_argument("bound_all: observation/space dimension mismatch");
    if (!(options.fallback_reward_lo <= options.fallback_reward_hi))
        throw std::invalid_argument("bound_all: empty fallback reward range");
    for (const StateObservation& st : obs.states)
        for (double r : st.reward_values)
            if (r < options.fallback_reward_lo - 1e-12 || r > options.fallback_reward_hi + 1e-12)
                throw std::invalid_argument("bound_all: fallback range does not cover observed rewards");

    const std::size_t ns = states.size, na = actions.size;
    BoundedMdpModel model;
    model.states = states;
    model.actions = actions;
    model.gamma = gamma;
    model.reward_min = options.fallback_reward_lo;
    model.reward_max = options.fallback_reward_hi;
    model.r_lo.assign(ns, std::vector<double>(na, 0.0));
    model.r_hi.assign(ns, std::vector<double>(na, 0.0));
    model.p_lo.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));
    model.p_hi.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));

    const NaiveEstimates naive = naive_estimates(obs);

    auto fill_vacuous = [&](std::size_t s, std::size_t a) {
        model.r_lo[s][a] = options.fallback_reward_lo;
        model.r_hi[s][a] = options.fallback_reward_hi;
        model.p_lo[s][a].assign(ns, 0.0);
        model.p_hi[s][a].assign(ns, 1.0);
    };

    auto process_state = [&](std::size_t s) {
        const StateObservation& st = obs.states[s];
        for (std::size_t a = 0; a < na; a++) {
            if (!st.covered || st.action_marginal(a) <= kMassTol) {
                fill_vacuous(s, a);
                continue;
            }

            bool reward_in_scope = false, transition_in_scope = false;
            switch (options.scope) {
                case BoundScope::all:
                    reward_in_scope = transition_in_scope = true;
                    break;
                case BoundScope::heuristic:
                    reward_in_scope = support_count(st.reward_joint, a) >= 2;
                    transition_in_scope = support_count(st.successor_joint, a) >= 2;
                    break;
                case BoundScope::critical_pairs:
                    reward_in_scope = pair_listed(options.reward_pairs, s, a);
                    transition_in_scope = pair_listed(options.transition_pairs, s, a);
                    break;
            }

            if (reward_in_scope) {
                std::vector<DoPrior> priors;
                if (options.prior_mode == PriorMode::singleton_support)
                    priors = singleton_priors(st.reward_joint, a);
                CausalInterval iv = reward_do_bounds(st, s, a, priors, options.lp);
                model.r_lo[s][a] = std::max(iv.lo, options.fallback_reward_lo);
                model.r_hi[s][a] = std::min(iv.hi, options.fallback_reward_hi);
            } else {
                model.r_lo[s][a] = naive.reward_mean[s][a];
                model.r_hi[s][a] = naive.reward_mean[s][a];
            }

            if (transition_in_scope) {
                std::vector<DoPrior> priors;
                if (options.prior_mode == PriorMode::singleton_support)
                    priors = singleton_priors(st.successor_joint, a);
                for (std::size_t o = 0; o < st.successors.size(); o++) {
                    CausalInterval iv =
                        transition_do_bounds(st, s, a, st.successors[o], priors, options.lp);
                    model.p_lo[s][a][st.successors[o]] = iv.lo;
                    model.p_hi[s][a][st.successors[o]] = iv.hi;
                }
            } else {
                for (std::size_t o = 0; o < st.successors.size(); o++) {
                    double p = naive.successor_cond[s][o][a];
                    model.p_lo[s][a][st.successors[o]] = p;
                    model.p_hi[s][a][st.successors[o]] = p;
                }
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, options.workers);
    if (workers == 1) {
        for (std::size_t s = 0; s < ns; s++) process_state(s);
    } else {
        std::vector<std::thread> pool;
        std::mutex error_mutex;
        std::exception_ptr first_error;
        for (std::size_t w = 0; w < workers; w++)
            pool.emplace_back([&, w]() {
                try {
                    for (std::size_t s = w; s < ns; s += workers) process_state(s);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    model.validate();
    return model;
}

} // namespace causalrl
