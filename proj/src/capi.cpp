#include "causalrl/causalrl.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

#include "causalrl/errors.hpp"
#include "causalrl/experiment.hpp"
#include "causalrl/io.hpp"

struct causalrl_config {
    causalrl::ExperimentConfig cfg;
};

struct causalrl_env {
    causalrl::EnvironmentBundle bundle;
};

struct causalrl_obs {
    causalrl::ObservationalDistribution obs;
};

struct causalrl_bounds {
    causalrl::BoundedMdpModel model;
    causalrl::VBoundTable v;
    causalrl::QBoundTable q;
};

namespace {

thread_local std::string g_last_error;

causalrl_status set_error(causalrl_status status, const char* what) {
    g_last_error = what == nullptr ? "" : what;
    return status;
}

template <typename Fn>
causalrl_status wrap(Fn&& fn) {
    try {
        fn();
        return CAUSALRL_OK;
    } catch (const causalrl::InfeasibleError& e) {
        return set_error(CAUSALRL_ERR_INFEASIBLE, e.what());
    } catch (const causalrl::UnboundedError& e) {
        return set_error(CAUSALRL_ERR_UNBOUNDED, e.what());
    } catch (const causalrl::EnumerationLimitError& e) {
        return set_error(CAUSALRL_ERR_LIMIT, e.what());
    } catch (const causalrl::IoError& e) {
        return set_error(CAUSALRL_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return set_error(CAUSALRL_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return set_error(CAUSALRL_ERR_INTERNAL, e.what());
    } catch (...) {
        return set_error(CAUSALRL_ERR_INTERNAL, "unknown error");
    }
}

causalrl_status require_arg(bool ok, const char* msg) {
    return ok ? CAUSALRL_OK : set_error(CAUSALRL_ERR_INVALID_ARGUMENT, msg);
}

/* Copies a std::string into a malloc'd buffer the C caller frees with
 * causalrl_string_free. */
char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

causalrl::RunFlags to_flags(const causalrl_run_flags* flags) {
    causalrl::RunFlags out;
    if (flags != nullptr) {
        out.seed_base = flags->seed_base;
        out.workers = flags->workers == 0 ? 1 : flags->workers;
        if (flags->out_dir != nullptr) out.out_dir = flags->out_dir;
    }
    return out;
}

} // namespace

extern "C" {

const char* causalrl_version(void) { return "1.0.0"; }

const char* causalrl_last_error(void) { return g_last_error.c_str(); }

void causalrl_string_free(char* s) { std::free(s); }

/* -------------------------------------------------------------------- config */

causalrl_status causalrl_config_preset(const char* name, causalrl_config** out) {
    if (causalrl_status s = require_arg(name != nullptr && out != nullptr, "null argument")) return s;
    return wrap([&] { *out = new causalrl_config{causalrl::ExperimentConfig::preset(name)}; });
}

causalrl_status causalrl_config_load(const char* path, causalrl_config** out) {
    if (causalrl_status s = require_arg(path != nullptr && out != nullptr, "null argument")) return s;
    return wrap([&] { *out = new causalrl_config{causalrl::ExperimentConfig::load(path)}; });
}

causalrl_status causalrl_config_parse(const char* json_text, causalrl_config** out) {
    if (causalrl_status s = require_arg(json_text != nullptr && out != nullptr, "null argument")) return s;
    return wrap([&] { *out = new causalrl_config{causalrl::ExperimentConfig::from_json(json_text)}; });
}

causalrl_status causalrl_config_to_json(const causalrl_config* cfg, char** out_json) {
    if (causalrl_status s = require_arg(cfg != nullptr && out_json != nullptr, "null argument")) return s;
    return wrap([&] { *out_json = dup_string(cfg->cfg.to_json()); });
}

void causalrl_config_free(causalrl_config* cfg) { delete cfg; }

/* --------------------------------------------------------------- environment */

causalrl_status causalrl_env_create(const causalrl_config* cfg, causalrl_env** out) {
    if (causalrl_status s = require_arg(cfg != nullptr && out != nullptr, "null argument")) return s;
    return wrap([&] { *out = new causalrl_env{causalrl::build_environment(cfg->cfg)}; });
}

causalrl_status causalrl_env_dims(const causalrl_env* env, size_t* n_states, size_t* n_actions,
                                  size_t* n_contexts) {
    if (causalrl_status s = require_arg(env != nullptr, "null environment")) return s;
    if (n_states != nullptr) *n_states = env->bundle.cmdp.n_states();
    if (n_actions != nullptr) *n_actions = env->bundle.cmdp.n_actions();
    if (n_contexts != nullptr) *n_contexts = env->bundle.cmdp.n_contexts();
    return CAUSALRL_OK;
}

void causalrl_env_free(causalrl_env* env) { delete env; }

/* -------------------------------------------------------------- observations */

causalrl_status causalrl_observe(const causalrl_env* env, const causalrl_config* cfg,
                                 uint64_t seed_base, causalrl_obs** out) {
    if (causalrl_status s =
            require_arg(env != nullptr && cfg != nullptr && out != nullptr, "null argument"))
        return s;
    return wrap([&] {
        *out = new causalrl_obs{causalrl::make_observations(env->bundle, cfg->cfg, seed_base)};
    });
}

causalrl_status causalrl_obs_to_json(const causalrl_obs* obs, char** out_json) {
    if (causalrl_status s = require_arg(obs != nullptr && out_json != nullptr, "null argument")) return s;
    return wrap([&] { *out_json = dup_string(causalrl::observational_to_json(obs->obs)); });
}

causalrl_status causalrl_obs_parse(const char* json_text, causalrl_obs** out) {
    if (causalrl_status s = require_arg(json_text != nullptr && out != nullptr, "null argument")) return s;
    return wrap([&] { *out = new causalrl_obs{causalrl::observational_from_json(json_text)}; });
}

void causalrl_obs_free(causalrl_obs* obs) { delete obs; }

/* -------------------------------------------------------------------- bounds */

causalrl_status causalrl_bounds_compute(const causalrl_env* env, const causalrl_config* cfg,
                                        const causalrl_obs* obs, size_t workers,
                                        causalrl_bounds** out) {
    if (causalrl_status s = require_arg(
            env != nullptr && cfg != nullptr && obs != nullptr && out != nullptr, "null argument"))
        return s;
    return wrap([&] {
        causalrl::BoundOptions options;
        options.scope = cfg->cfg.bounds.scope;
        options.prior_mode = cfg->cfg.bounds.prior_mode;
        for (const auto& [cell, action] : cfg->cfg.bounds.reward_pairs)
            options.reward_pairs.emplace_back(cfg->cfg.grid.index(cell),
                                              static_cast<std::size_t>(action - 1));
        for (const auto& [cell, action] : cfg->cfg.bounds.transition_pairs)
            options.transition_pairs.emplace_back(cfg->cfg.grid.index(cell),
                                                  static_cast<std::size_t>(action - 1));
        options.fallback_reward_lo = cfg->cfg.bounds.fallback_lo;
        options.fallback_reward_hi = cfg->cfg.bounds.fallback_hi;
        options.workers = workers == 0 ? 1 : workers;
        causalrl::BoundedMdpModel model =
            causalrl::bound_all(obs->obs, env->bundle.marginal.states, env->bundle.marginal.actions,
                                env->bundle.cmdp.gamma(), options);
        causalrl::VBoundTable v = causalrl::robust_v_table(model);
        causalrl::QBoundTable q = causalrl::q_bounds(model, v);
        *out = new causalrl_bounds{std::move(model), std::move(v), std::move(q)};
    });
}

causalrl_status causalrl_bounds_model_json(const causalrl_bounds* bounds, char** out_json) {
    if (causalrl_status s = require_arg(bounds != nullptr && out_json != nullptr, "null argument"))
        return s;
    return wrap([&] { *out_json = dup_string(causalrl::bounded_model_to_json(bounds->model)); });
}

causalrl_status causalrl_bounds_q_json(const causalrl_bounds* bounds, char** out_json) {
    if (causalrl_status s = require_arg(bounds != nullptr && out_json != nullptr, "null argument"))
        return s;
    return wrap([&] { *out_json = dup_string(causalrl::q_bounds_to_json(bounds->q)); });
}

causalrl_status causalrl_bounds_reward_interval(const causalrl_bounds* bounds, size_t state,
                                                size_t action, double* lo, double* hi) {
    if (causalrl_status s = require_arg(bounds != nullptr, "null bounds")) return s;
    if (causalrl_status s = require_arg(
            state < bounds->model.n_states() && action < bounds->model.n_actions(), "index out of range"))
        return s;
    if (lo != nullptr) *lo = bounds->model.r_lo[state][action];
    if (hi != nullptr) *hi = bounds->model.r_hi[state][action];
    return CAUSALRL_OK;
}

causalrl_status causalrl_bounds_q_interval(const causalrl_bounds* bounds, size_t state, size_t action,
                                           double* lo, double* hi) {
    if (causalrl_status s = require_arg(bounds != nullptr, "null bounds")) return s;
    if (causalrl_status s = require_arg(
            state < bounds->q.n_states && action < bounds->q.n_actions, "index out of range"))
        return s;
    if (lo != nullptr) *lo = bounds->q.lo_at(state, action);
    if (hi != nullptr) *hi = bounds->q.hi_at(state, action);
    return CAUSALRL_OK;
}

void causalrl_bounds_free(causalrl_bounds* bounds) { delete bounds; }

/* ------------------------------------------------------------------ commands */

causalrl_status causalrl_cmd_reproduce_tables(const causalrl_config* cfg,
                                              const causalrl_run_flags* flags, int* all_ok,
                                              char** report_json) {
    if (causalrl_status s = require_arg(cfg != nullptr, "null config")) return s;
    return wrap([&] {
        causalrl::RunFlags rf = to_flags(flags);
        causalrl::TableReport report = causalrl::cmd_reproduce_tables(cfg->cfg, rf);
        if (all_ok != nullptr) *all_ok = report.all_ok ? 1 : 0;
        if (report_json != nullptr) {
            std::filesystem::path dir = rf.out_dir.empty() ? cfg->cfg.out_dir : rf.out_dir;
            *report_json = dup_string(causalrl::read_text_file((dir / "table_check.json").string()));
        }
    });
}

causalrl_status causalrl_cmd_compute_bounds(const causalrl_config* cfg,
                                            const causalrl_run_flags* flags) {
    if (causalrl_status s = require_arg(cfg != nullptr, "null config")) return s;
    return wrap([&] { causalrl::cmd_compute_bounds(cfg->cfg, to_flags(flags)); });
}

causalrl_status causalrl_cmd_run_learning(const causalrl_config* cfg,
                                          const causalrl_run_flags* flags, char** summary_json) {
    if (causalrl_status s = require_arg(cfg != nullptr, "null config")) return s;
    return wrap([&] {
        causalrl::LearningArtifacts artifacts = causalrl::cmd_run_learning(cfg->cfg, to_flags(flags));
        if (summary_json != nullptr) {
            nlohmann::json j;
            j["optimal_value"] = artifacts.optimal_value;
            j["naive_planning_value"] = artifacts.naive_planning_value;
            *summary_json = dup_string(j.dump(2) + "\n");
        }
    });
}

causalrl_status causalrl_cmd_evaluate(const causalrl_config* cfg, const causalrl_run_flags* flags,
                                      char** report_json) {
    if (causalrl_status s = require_arg(cfg != nullptr, "null config")) return s;
    return wrap([&] {
        causalrl::EvaluationReport report = causalrl::cmd_evaluate(cfg->cfg, to_flags(flags));
        if (report_json != nullptr) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& row : report.rows) {
                nlohmann::json r;
                r["policy"] = row.policy;
                r["planning_value"] = row.planning_value;
                r["mc_mean"] = row.estimate.mean;
                r["mc_stderr"] = row.estimate.stderr_;
                r["episodes"] = row.estimate.episodes;
                rows.push_back(r);
            }
            *report_json = dup_string(rows.dump(2) + "\n");
        }
    });
}

} /* extern "C" */
