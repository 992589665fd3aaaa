#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "causalrl/causal_bounds.hpp"
#include "causalrl/demonstrator.hpp"
#include "causalrl/gridworld.hpp"
#include "causalrl/learners.hpp"
#include "causalrl/value_bounds.hpp"

namespace causalrl {

enum class EnvironmentKind { reward_grid, transition_grid, custom };
enum class ObservationMode { analytic, episodic, query };
enum class Algorithm { q, cbc_q, ucb_q, cb_ucb_q };

std::string to_string(EnvironmentKind kind);
std::string to_string(ObservationMode mode);
std::string to_string(Algorithm algorithm);

struct DemonstratorSettings {
    double epsilon = 0.3;
    ObservationMode mode = ObservationMode::analytic;
    std::size_t episodes = 200000; ///< episodic mode
    std::size_t horizon = 60;      ///< episodic mode
    std::size_t samples = 4000000; ///< query mode
    bool export_dataset = false;   ///< write the raw tuples CSV (sampled modes)
};

struct BoundSettings {
    BoundScope scope = BoundScope::heuristic;
    PriorMode prior_mode = PriorMode::none;
    /// Explicit pairs for the critical-pairs scope, in config form:
    /// grid cell plus 1-based action.
    std::vector<std::pair<Cell, int>> reward_pairs;
    std::vector<std::pair<Cell, int>> transition_pairs;
    double fallback_lo = -1.0;
    double fallback_hi = 10.0;
};

struct LearnerSettings {
    std::vector<Algorithm> algorithms;
    LearnerConfig base;               ///< seed field is overridden per run
    std::vector<std::uint64_t> seeds; ///< distinct; offset by the CLI seed base
};

struct EvaluationSettings {
    std::size_t episodes = 20000;
    std::size_t horizon = 60;
};

struct ExperimentConfig {
    EnvironmentKind kind = EnvironmentKind::reward_grid;
    GridSpec grid; ///< resolved, including custom layouts
    /// Scripted demonstrator; empty means "greedy from per-context planning".
    std::optional<DeterministicContextPolicySpec> demo_policy;
    DemonstratorSettings demonstrator;
    BoundSettings bounds;
    LearnerSettings learners;
    EvaluationSettings evaluation;
    std::string out_dir = "out";

    void validate() const;
    std::string to_json() const;
    /// Parses a config document; grid files referenced by the document are
    /// loaded relative to the process working directory.
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    /// Shipped presets: "reward-grid" and "transition-grid".
    static ExperimentConfig preset(const std::string& name);
    static std::vector<std::string> preset_names();
};

/// Runtime flags shared by every command.
struct RunFlags {
    std::uint64_t seed_base = 0;
    std::size_t workers = 1;
    std::string out_dir; ///< empty keeps the config's directory
};

struct EnvironmentBundle {
    GridSpec grid;
    ContextualMdp cmdp;
    Mdp marginal;
    ContextPolicy demo; ///< scripted or planned policy with exploration mixed in
};
EnvironmentBundle build_environment(const ExperimentConfig& cfg);

/// Observational joints per the configured collection mode (sampled modes
/// derive their stream from the seed base). `keep` optionally receives the
/// raw tuples for sampled modes.
ObservationalDistribution make_observations(const EnvironmentBundle& env, const ExperimentConfig& cfg,
                                            std::uint64_t seed_base, DemoDataset* keep = nullptr);

struct TableRow {
    Cell cell;
    int action = 1; ///< 1-based
    std::optional<Cell> next;
    double do_effect = 0.0;
    double naive = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct TableReport {
    std::vector<TableRow> rows;
    bool checked = false; ///< expected constants exist for this environment
    bool all_ok = true;
    std::vector<std::string> failures;
};

/// Emits the do-effect/naive/bounds table for the configured environment and,
/// for the two shipped environments, verifies every cell against the expected
/// constants at 1e-3. Artifacts: table.csv and table_check.json.
TableReport cmd_reproduce_tables(const ExperimentConfig& cfg, const RunFlags& flags);

struct BoundArtifacts {
    ObservationalDistribution obs;
    BoundedMdpModel model;
    VBoundTable v;
    QBoundTable q;
};

/// Demonstrator -> interval model -> value/Q intervals; writes
/// observational.json, bounded_model.json, q_bounds.json (and dataset.csv
/// when configured).
BoundArtifacts cmd_compute_bounds(const ExperimentConfig& cfg, const RunFlags& flags);

struct AlgorithmCurves {
    Algorithm algorithm = Algorithm::q;
    std::vector<std::uint64_t> seeds; ///< effective (base-offset) seeds
    std::vector<LearningCurve> curves;
};

struct LearningArtifacts {
    std::vector<AlgorithmCurves> runs;
    double optimal_value = 0.0;       ///< exact planning optimum at the start
    double naive_planning_value = 0.0; ///< optimum promised by the naive model
};

/// Multi-seed learner comparison; writes curves_<algorithm>.csv, summary.csv,
/// references.json and learning_curves.svg.
LearningArtifacts cmd_run_learning(const ExperimentConfig& cfg, const RunFlags& flags);

struct EvaluationRow {
    std::string policy;
    double planning_value = 0.0; ///< value the policy's model promises
    ReturnEstimate estimate;     ///< Monte-Carlo performance in the true env
};

struct EvaluationReport {
    std::vector<EvaluationRow> rows;
};

/// Monte-Carlo evaluation of the exact-model optimal policy and the
/// naive-model greedy policy; writes evaluation.csv.
EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const RunFlags& flags);

} // namespace causalrl
