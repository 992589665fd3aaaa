// Command-line front end. Consumes the core exclusively through the C API so
// it doubles as a smoke test of the shared library's public surface.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <causalrl/causalrl.h>

namespace {

struct CommonOpts {
    std::string config;
    std::string preset;
    std::uint64_t seed_base = 0;
    std::size_t workers = 1;
    std::string out;
};

void add_common_flags(CLI::App* cmd, CommonOpts& opts) {
    auto* config = cmd->add_option("--config", opts.config, "Experiment config JSON file")
                       ->check(CLI::ExistingFile);
    auto* preset =
        cmd->add_option("--preset", opts.preset, "Built-in preset: reward-grid | transition-grid");
    config->excludes(preset);
    preset->excludes(config);
    cmd->add_option("--seed-base", opts.seed_base,
                    "Offset added to every configured seed and sampling stream");
    cmd->add_option("--workers", opts.workers, "Worker threads for parallel stages")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opts.out, "Output directory (overrides the config's choice)");
}

int fail_with_last_error(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, causalrl_last_error());
    return 1;
}

/// Loads the selected config; prints an error and returns nullptr when the
/// selection is missing or invalid.
causalrl_config* load_config(const CommonOpts& opts) {
    causalrl_config* cfg = nullptr;
    causalrl_status status;
    if (!opts.config.empty()) {
        status = causalrl_config_load(opts.config.c_str(), &cfg);
    } else if (!opts.preset.empty()) {
        status = causalrl_config_preset(opts.preset.c_str(), &cfg);
    } else {
        std::fprintf(stderr, "error: pass --config PATH or --preset NAME\n");
        return nullptr;
    }
    if (status != CAUSALRL_OK) {
        fail_with_last_error("loading config");
        return nullptr;
    }
    return cfg;
}

causalrl_run_flags make_flags(const CommonOpts& opts) {
    causalrl_run_flags flags;
    flags.seed_base = opts.seed_base;
    flags.workers = opts.workers;
    flags.out_dir = opts.out.empty() ? nullptr : opts.out.c_str();
    return flags;
}

int run_reproduce_one(causalrl_config* cfg, const causalrl_run_flags& flags, const char* label) {
    int all_ok = 0;
    char* report = nullptr;
    causalrl_status status = causalrl_cmd_reproduce_tables(cfg, &flags, &all_ok, &report);
    if (status != CAUSALRL_OK) return fail_with_last_error("reproduce-tables");
    causalrl_string_free(report);
    std::printf("%s: table check %s\n", label, all_ok ? "PASS" : "FAIL");
    return all_ok ? 0 : 1;
}

int run_reproduce(const CommonOpts& opts) {
    // With no explicit selection this command covers both built-in
    // environments, writing each table under its own subdirectory.
    if (opts.config.empty() && opts.preset.empty()) {
        int rc = 0;
        for (const char* name : {"reward-grid", "transition-grid"}) {
            causalrl_config* cfg = nullptr;
            if (causalrl_config_preset(name, &cfg) != CAUSALRL_OK)
                return fail_with_last_error("loading preset");
            CommonOpts sub = opts;
            if (!opts.out.empty()) sub.out = opts.out + "/" + name;
            causalrl_run_flags flags = make_flags(sub);
            int one = run_reproduce_one(cfg, flags, name);
            causalrl_config_free(cfg);
            if (one != 0) rc = one;
        }
        return rc;
    }
    causalrl_config* cfg = load_config(opts);
    if (cfg == nullptr) return 2;
    causalrl_run_flags flags = make_flags(opts);
    const char* label = opts.config.empty() ? opts.preset.c_str() : opts.config.c_str();
    int rc = run_reproduce_one(cfg, flags, label);
    causalrl_config_free(cfg);
    return rc;
}

int run_compute_bounds(const CommonOpts& opts) {
    causalrl_config* cfg = load_config(opts);
    if (cfg == nullptr) return 2;
    causalrl_run_flags flags = make_flags(opts);
    causalrl_status status = causalrl_cmd_compute_bounds(cfg, &flags);
    causalrl_config_free(cfg);
    if (status != CAUSALRL_OK) return fail_with_last_error("compute-bounds");
    std::printf("bound artifacts written\n");
    return 0;
}

int run_learning(const CommonOpts& opts) {
    causalrl_config* cfg = load_config(opts);
    if (cfg == nullptr) return 2;
    causalrl_run_flags flags = make_flags(opts);
    char* summary = nullptr;
    causalrl_status status = causalrl_cmd_run_learning(cfg, &flags, &summary);
    causalrl_config_free(cfg);
    if (status != CAUSALRL_OK) return fail_with_last_error("run-learning");
    std::printf("%s", summary);
    causalrl_string_free(summary);
    return 0;
}

int run_evaluate(const CommonOpts& opts) {
    causalrl_config* cfg = load_config(opts);
    if (cfg == nullptr) return 2;
    causalrl_run_flags flags = make_flags(opts);
    char* report = nullptr;
    causalrl_status status = causalrl_cmd_evaluate(cfg, &flags, &report);
    causalrl_config_free(cfg);
    if (status != CAUSALRL_OK) return fail_with_last_error("evaluate");
    std::printf("%s", report);
    causalrl_string_free(report);
    return 0;
}

int run_show_config(const CommonOpts& opts) {
    causalrl_config* cfg = load_config(opts);
    if (cfg == nullptr) return 2;
    char* text = nullptr;
    causalrl_status status = causalrl_config_to_json(cfg, &text);
    causalrl_config_free(cfg);
    if (status != CAUSALRL_OK) return fail_with_last_error("serializing config");
    std::printf("%s", text);
    causalrl_string_free(text);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer RL with causal partial-identification bounds"};
    app.set_version_flag("--version", causalrl_version());
    app.require_subcommand(1);

    CommonOpts reproduce_opts;
    CLI::App* reproduce = app.add_subcommand(
        "reproduce-tables", "Re-derive the benchmark do-effect tables and verify every cell "
                            "(both built-in environments when no config is selected)");
    add_common_flags(reproduce, reproduce_opts);

    CommonOpts bounds_opts;
    CLI::App* bounds = app.add_subcommand(
        "compute-bounds", "Collect demonstrator data and emit the interval model and Q intervals");
    add_common_flags(bounds, bounds_opts);

    CommonOpts learn_opts;
    CLI::App* learn = app.add_subcommand(
        "run-learning", "Run the configured learner matrix across seeds and emit curves");
    add_common_flags(learn, learn_opts);

    CommonOpts eval_opts;
    CLI::App* evaluate = app.add_subcommand(
        "evaluate", "Monte-Carlo evaluate the exact-model and naive-model policies");
    add_common_flags(evaluate, eval_opts);

    CommonOpts show_opts;
    CLI::App* show = app.add_subcommand("show-config", "Print the resolved experiment config JSON");
    add_common_flags(show, show_opts);

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(reproduce)) return run_reproduce(reproduce_opts);
    if (app.got_subcommand(bounds)) return run_compute_bounds(bounds_opts);
    if (app.got_subcommand(learn)) return run_learning(learn_opts);
    if (app.got_subcommand(evaluate)) return run_evaluate(eval_opts);
    if (app.got_subcommand(show)) return run_show_config(show_opts);
    return 2;
}
