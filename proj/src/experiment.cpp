#include "causalrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include <json.hpp>

#include "causalrl/io.hpp"

namespace causalrl {
namespace {

using nlohmann::json;

/// Fixed stream ids for seed derivation; changing them changes every sampled
/// artifact, so they are part of the file-format contract.
constexpr std::uint64_t kObservationStream = 101;
constexpr std::uint64_t kEvaluationStreamBase = 211;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("experiment config: " + msg);
}

void require(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
}

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) fail(std::string(where) + ": unknown key '" + it.key() + "'");
    }
}

EnvironmentKind kind_from_string(const std::string& s) {
    if (s == "reward-grid") return EnvironmentKind::reward_grid;
    if (s == "transition-grid") return EnvironmentKind::transition_grid;
    if (s == "custom") return EnvironmentKind::custom;
    fail("unknown environment kind '" + s + "'");
}

ObservationMode mode_from_string(const std::string& s) {
    if (s == "analytic") return ObservationMode::analytic;
    if (s == "episodic") return ObservationMode::episodic;
    if (s == "query") return ObservationMode::query;
    fail("unknown observation mode '" + s + "'");
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "q") return Algorithm::q;
    if (s == "cbc-q") return Algorithm::cbc_q;
    if (s == "ucb-q") return Algorithm::ucb_q;
    if (s == "cb-ucb-q") return Algorithm::cb_ucb_q;
    fail("unknown algorithm '" + s + "'");
}

BoundScope scope_from_string(const std::string& s) {
    if (s == "critical-pairs") return BoundScope::critical_pairs;
    if (s == "heuristic") return BoundScope::heuristic;
    if (s == "all") return BoundScope::all;
    fail("unknown bound scope '" + s + "'");
}

std::string scope_name(BoundScope s) {
    switch (s) {
    case BoundScope::critical_pairs: return "critical-pairs";
    case BoundScope::heuristic: return "heuristic";
    case BoundScope::all: return "all";
    }
    return "heuristic";
}

PriorMode prior_from_string(const std::string& s) {
    if (s == "none") return PriorMode::none;
    if (s == "singleton-support") return PriorMode::singleton_support;
    fail("unknown prior mode '" + s + "'");
}

std::string prior_name(PriorMode m) {
    return m == PriorMode::singleton_support ? "singleton-support" : "none";
}

AlphaSchedule schedule_from_string(const std::string& s) {
    if (s == "constant") return AlphaSchedule::constant;
    if (s == "inverse-visit") return AlphaSchedule::inverse_visit;
    if (s == "ucb-horizon") return AlphaSchedule::ucb_horizon;
    fail("unknown learning-rate schedule '" + s + "'");
}

std::string schedule_name(AlphaSchedule s) {
    switch (s) {
    case AlphaSchedule::constant: return "constant";
    case AlphaSchedule::inverse_visit: return "inverse-visit";
    case AlphaSchedule::ucb_horizon: return "ucb-horizon";
    }
    return "ucb-horizon";
}

std::string display_name(Algorithm a) {
    switch (a) {
    case Algorithm::q: return "Q learning";
    case Algorithm::cbc_q: return "CBC-Q";
    case Algorithm::ucb_q: return "UCB-Q";
    case Algorithm::cb_ucb_q: return "CB-UCB-Q";
    }
    return "Q learning";
}

std::string file_slug(Algorithm a) {
    std::string s = to_string(a);
    std::replace(s.begin(), s.end(), '-', '_');
    return s;
}

Cell cell_from_json(const json& j, const char* where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        fail(std::string(where) + ": cells are [x, y] integer pairs");
    return Cell{j[0].get<int>(), j[1].get<int>()};
}

json cell_to_json(Cell c) { return json::array({c.x, c.y}); }

int action_from_json(const json& j, const char* where) {
    if (!j.is_number_integer()) fail(std::string(where) + ": actions are 1-based integers");
    int a = j.get<int>();
    if (a < 1 || a > 4) fail(std::string(where) + ": action must be in 1..4");
    return a;
}

DeterministicContextPolicySpec policy_from_json(const json& j, const GridSpec& grid) {
    check_keys(j, "demonstrator.policy", {"default_action", "overrides"});
    DeterministicContextPolicySpec spec;
    spec.default_action =
        static_cast<std::size_t>(action_from_json(j.at("default_action"), "demonstrator.policy") - 1);
    if (j.contains("overrides")) {
        if (!j.at("overrides").is_array()) fail("demonstrator.policy.overrides must be an array");
        for (const auto& o : j.at("overrides")) {
            check_keys(o, "demonstrator.policy.overrides[]", {"cell", "context", "action"});
            Cell cell = cell_from_json(o.at("cell"), "demonstrator.policy.overrides[]");
            require(grid.in_bounds(cell), "policy override cell out of bounds");
            if (!o.at("context").is_number_integer() || o.at("context").get<int>() < 0)
                fail("policy override context must be a non-negative integer");
            DeterministicContextPolicySpec::Override ov;
            ov.state = grid.index(cell);
            ov.context = o.at("context").get<std::size_t>();
            ov.action = static_cast<std::size_t>(
                action_from_json(o.at("action"), "demonstrator.policy.overrides[]") - 1);
            spec.overrides.push_back(ov);
        }
    }
    return spec;
}

json policy_to_json(const DeterministicContextPolicySpec& spec, const GridSpec& grid) {
    json j;
    j["default_action"] = static_cast<int>(spec.default_action) + 1;
    json overrides = json::array();
    for (const auto& ov : spec.overrides) {
        json o;
        o["cell"] = cell_to_json(grid.cell(ov.state));
        o["context"] = ov.context;
        o["action"] = static_cast<int>(ov.action) + 1;
        overrides.push_back(o);
    }
    j["overrides"] = overrides;
    return j;
}

std::vector<std::pair<Cell, int>> pairs_from_json(const json& j, const GridSpec& grid, const char* where) {
    std::vector<std::pair<Cell, int>> out;
    if (!j.is_array()) fail(std::string(where) + " must be an array");
    for (const auto& p : j) {
        check_keys(p, where, {"cell", "action"});
        Cell cell = cell_from_json(p.at("cell"), where);
        require(grid.in_bounds(cell), std::string(where) + ": cell out of bounds");
        out.emplace_back(cell, action_from_json(p.at("action"), where));
    }
    return out;
}

json pairs_to_json(const std::vector<std::pair<Cell, int>>& pairs) {
    json arr = json::array();
    for (const auto& [cell, action] : pairs) {
        json p;
        p["cell"] = cell_to_json(cell);
        p["action"] = action;
        arr.push_back(p);
    }
    return arr;
}

ExperimentConfig config_from_json_impl(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(std::string("not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object()) fail("top level must be an object");
        check_keys(doc, "config",
                   {"format", "version", "environment", "demonstrator", "bounds", "learners",
                    "evaluation", "output"});
        if (doc.contains("format") && doc.at("format").get<std::string>() != "experiment-config")
            fail("format must be \"experiment-config\"");
        if (doc.contains("version") && doc.at("version").get<int>() != 1)
            fail("unsupported config version");

        ExperimentConfig cfg;

        const json env = doc.value("environment", json::object());
        check_keys(env, "environment", {"kind", "grid", "grid_file"});
        cfg.kind = kind_from_string(env.value("kind", std::string("reward-grid")));
        if (cfg.kind == EnvironmentKind::custom) {
            if (env.contains("grid")) {
                cfg.grid = grid_spec_from_json(env.at("grid").dump());
            } else if (env.contains("grid_file")) {
                std::filesystem::path p = env.at("grid_file").get<std::string>();
                if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
                cfg.grid = grid_spec_from_json(read_text_file(p.string()));
            } else {
                fail("custom environment needs \"grid\" or \"grid_file\"");
            }
        } else {
            if (env.contains("grid") || env.contains("grid_file"))
                fail("built-in environments fix their own grid; drop \"grid\"/\"grid_file\"");
            cfg.grid = cfg.kind == EnvironmentKind::reward_grid ? reward_grid_spec() : transition_grid_spec();
        }

        const json dem = doc.value("demonstrator", json::object());
        check_keys(dem, "demonstrator",
                   {"epsilon", "mode", "episodes", "horizon", "samples", "export_dataset", "policy"});
        cfg.demonstrator.epsilon = dem.value("epsilon", cfg.demonstrator.epsilon);
        cfg.demonstrator.mode = mode_from_string(dem.value("mode", std::string("analytic")));
        cfg.demonstrator.episodes = dem.value("episodes", cfg.demonstrator.episodes);
        cfg.demonstrator.horizon = dem.value("horizon", cfg.demonstrator.horizon);
        cfg.demonstrator.samples = dem.value("samples", cfg.demonstrator.samples);
        cfg.demonstrator.export_dataset = dem.value("export_dataset", cfg.demonstrator.export_dataset);
        if (dem.contains("policy") && !dem.at("policy").is_null())
            cfg.demo_policy = policy_from_json(dem.at("policy"), cfg.grid);

        const json bnd = doc.value("bounds", json::object());
        check_keys(bnd, "bounds",
                   {"scope", "priors", "reward_pairs", "transition_pairs", "fallback"});
        cfg.bounds.scope = scope_from_string(bnd.value("scope", std::string("heuristic")));
        cfg.bounds.prior_mode = prior_from_string(bnd.value("priors", std::string("none")));
        if (bnd.contains("reward_pairs"))
            cfg.bounds.reward_pairs = pairs_from_json(bnd.at("reward_pairs"), cfg.grid, "bounds.reward_pairs");
        if (bnd.contains("transition_pairs"))
            cfg.bounds.transition_pairs =
                pairs_from_json(bnd.at("transition_pairs"), cfg.grid, "bounds.transition_pairs");
        if (bnd.contains("fallback")) {
            const json& f = bnd.at("fallback");
            if (!f.is_array() || f.size() != 2) fail("bounds.fallback must be [lo, hi]");
            cfg.bounds.fallback_lo = f[0].get<double>();
            cfg.bounds.fallback_hi = f[1].get<double>();
        }

        const json lrn = doc.value("learners", json::object());
        check_keys(lrn, "learners",
                   {"algorithms", "episodes", "horizon", "epsilon", "schedule", "alpha",
                    "ucb_bonus_scale", "ucb_confidence", "checkpoint_every", "eval_episodes", "seeds"});
        if (lrn.contains("algorithms")) {
            cfg.learners.algorithms.clear();
            for (const auto& a : lrn.at("algorithms"))
                cfg.learners.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
        }
        cfg.learners.base.episodes = lrn.value("episodes", cfg.learners.base.episodes);
        cfg.learners.base.horizon = lrn.value("horizon", cfg.learners.base.horizon);
        cfg.learners.base.epsilon = lrn.value("epsilon", cfg.learners.base.epsilon);
        cfg.learners.base.schedule = schedule_from_string(lrn.value("schedule", std::string("ucb-horizon")));
        cfg.learners.base.alpha = lrn.value("alpha", cfg.learners.base.alpha);
        cfg.learners.base.ucb_bonus_scale = lrn.value("ucb_bonus_scale", cfg.learners.base.ucb_bonus_scale);
        cfg.learners.base.ucb_confidence = lrn.value("ucb_confidence", cfg.learners.base.ucb_confidence);
        cfg.learners.base.checkpoint_every = lrn.value("checkpoint_every", cfg.learners.base.checkpoint_every);
        cfg.learners.base.eval_episodes = lrn.value("eval_episodes", cfg.learners.base.eval_episodes);
        if (lrn.contains("seeds")) {
            cfg.learners.seeds.clear();
            for (const auto& s : lrn.at("seeds")) cfg.learners.seeds.push_back(s.get<std::uint64_t>());
        }

        const json ev = doc.value("evaluation", json::object());
        check_keys(ev, "evaluation", {"episodes", "horizon"});
        cfg.evaluation.episodes = ev.value("episodes", cfg.evaluation.episodes);
        cfg.evaluation.horizon = ev.value("horizon", cfg.evaluation.horizon);

        const json out = doc.value("output", json::object());
        check_keys(out, "output", {"dir"});
        cfg.out_dir = out.value("dir", cfg.out_dir);

        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        fail(std::string("malformed document: ") + e.what());
    }
}

BoundOptions resolve_bound_options(const ExperimentConfig& cfg, std::size_t workers) {
    BoundOptions o;
    o.scope = cfg.bounds.scope;
    o.prior_mode = cfg.bounds.prior_mode;
    for (const auto& [cell, action] : cfg.bounds.reward_pairs)
        o.reward_pairs.emplace_back(cfg.grid.index(cell), static_cast<std::size_t>(action - 1));
    for (const auto& [cell, action] : cfg.bounds.transition_pairs)
        o.transition_pairs.emplace_back(cfg.grid.index(cell), static_cast<std::size_t>(action - 1));
    o.fallback_reward_lo = cfg.bounds.fallback_lo;
    o.fallback_reward_hi = cfg.bounds.fallback_hi;
    o.workers = workers == 0 ? 1 : workers;
    return o;
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    std::size_t count = std::min(workers, n);
    pool.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg, const RunFlags& flags) {
    std::filesystem::path dir = flags.out_dir.empty() ? cfg.out_dir : flags.out_dir;
    std::filesystem::create_directories(dir);
    return dir;
}

/// Frozen benchmark-table constants the reproduce command verifies against.
struct ExpectedRow {
    Cell cell;
    int action;
    bool has_next;
    Cell next;
    double do_effect;
    double naive;
    double lo;
    double hi;
    /// Rounded naive value as printed in the benchmark write-up (transition
    /// table prints two decimals); < 0 disables the rounding check.
    double naive_printed;
};

const std::vector<ExpectedRow>& expected_rows(EnvironmentKind kind) {
    static const std::vector<ExpectedRow> reward = {
        {{0, 3}, 1, false, {}, 1.2, 1.2, 0.54, 3.84, -1.0},
        {{1, 4}, 4, false, {}, 1.2, 3.6, 0.012, 8.5920, -1.0},
        {{3, 4}, 2, false, {}, 3.2, 1.8909, -0.3640, 4.3160, -1.0},
        {{4, 3}, 1, false, {}, 3.2, 3.2, 1.94, 3.74, -1.0},
    };
    static const std::vector<ExpectedRow> transition = {
        {{0, 2}, 1, true, {0, 3}, 0.18, 51.0 / 110.0, 0.1020, 0.8820, 0.46},
        {{0, 2}, 1, true, {0, 1}, 0.82, 59.0 / 110.0, 0.1180, 0.8980, 0.54},
        {{4, 2}, 1, true, {4, 3}, 0.72, 6.0 / 11.0, 0.12, 0.90, 0.55},
        {{4, 2}, 1, true, {4, 1}, 0.28, 5.0 / 11.0, 0.10, 0.88, 0.45},
    };
    static const std::vector<ExpectedRow> none;
    switch (kind) {
    case EnvironmentKind::reward_grid: return reward;
    case EnvironmentKind::transition_grid: return transition;
    case EnvironmentKind::custom: return none;
    }
    return none;
}

std::string describe_row(Cell cell, int action, const std::optional<Cell>& next) {
    std::ostringstream os;
    os << "([" << cell.x << "," << cell.y << "]," << action;
    if (next) os << ",[" << next->x << "," << next->y << "]";
    os << ")";
    return os.str();
}

void check_against_expected(const ExperimentConfig& cfg, TableReport& report) {
    const auto& expected = expected_rows(cfg.kind);
    if (expected.empty()) {
        report.checked = false;
        report.all_ok = true;
        return;
    }
    report.checked = true;
    report.all_ok = true;
    constexpr double kTol = 1e-3;
    auto mismatch = [&](const std::string& what, const std::string& row, double got, double want) {
        std::ostringstream os;
        os << row << " " << what << ": got " << format_double(got) << ", expected "
           << format_double(want);
        report.failures.push_back(os.str());
        report.all_ok = false;
    };
    for (const auto& exp : expected) {
        const TableRow* found = nullptr;
        for (const auto& row : report.rows) {
            if (row.cell == exp.cell && row.action == exp.action &&
                row.next.has_value() == exp.has_next && (!exp.has_next || *row.next == exp.next)) {
                found = &row;
                break;
            }
        }
        std::string name = describe_row(exp.cell, exp.action,
                                        exp.has_next ? std::optional<Cell>(exp.next) : std::nullopt);
        if (!found) {
            report.failures.push_back(name + ": row missing from the computed table");
            report.all_ok = false;
            continue;
        }
        if (std::abs(found->do_effect - exp.do_effect) > kTol)
            mismatch("do-effect", name, found->do_effect, exp.do_effect);
        if (std::abs(found->naive - exp.naive) > kTol) mismatch("naive", name, found->naive, exp.naive);
        if (std::abs(found->lo - exp.lo) > kTol) mismatch("lower bound", name, found->lo, exp.lo);
        if (std::abs(found->hi - exp.hi) > kTol) mismatch("upper bound", name, found->hi, exp.hi);
        if (exp.naive_printed >= 0.0) {
            double rounded = std::round(found->naive * 100.0) / 100.0;
            if (std::abs(rounded - exp.naive_printed) > 1e-9)
                mismatch("naive (2-decimal print)", name, rounded, exp.naive_printed);
        }
    }
    for (const auto& row : report.rows) {
        bool known = false;
        for (const auto& exp : expected) {
            if (row.cell == exp.cell && row.action == exp.action &&
                row.next.has_value() == exp.has_next && (!exp.has_next || *row.next == exp.next)) {
                known = true;
                break;
            }
        }
        if (!known) {
            report.failures.push_back(describe_row(row.cell, row.action, row.next) +
                                      ": unexpected extra table row");
            report.all_ok = false;
        }
    }
}

std::string table_to_csv(const TableReport& report) {
    std::ostringstream os;
    os << "# do-effect-table v1\n";
    os << "kind,state_x,state_y,action,next_x,next_y,do_effect,naive,bound_lo,bound_hi\n";
    for (const auto& row : report.rows) {
        os << (row.next ? "transition" : "reward") << "," << row.cell.x << "," << row.cell.y << ","
           << row.action << ",";
        if (row.next)
            os << row.next->x << "," << row.next->y;
        else
            os << ",";
        os << "," << format_double(row.do_effect) << "," << format_double(row.naive) << ","
           << format_double(row.lo) << "," << format_double(row.hi) << "\n";
    }
    return os.str();
}

std::string table_check_to_json(const ExperimentConfig& cfg, const TableReport& report) {
    json doc;
    doc["format"] = "table-check";
    doc["version"] = 1;
    doc["environment"] = to_string(cfg.kind);
    doc["checked"] = report.checked;
    doc["all_ok"] = report.all_ok;
    doc["failures"] = report.failures;
    json rows = json::array();
    for (const auto& row : report.rows) {
        json r;
        r["kind"] = row.next ? "transition" : "reward";
        r["cell"] = cell_to_json(row.cell);
        r["action"] = row.action;
        if (row.next) r["next"] = cell_to_json(*row.next);
        r["do_effect"] = row.do_effect;
        r["naive"] = row.naive;
        r["bound_lo"] = row.lo;
        r["bound_hi"] = row.hi;
        rows.push_back(r);
    }
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
}

LearnerRun run_one(Algorithm algorithm, const ContextualMdp& env, const LearnerConfig& cfg,
                   const QBoundTable* bounds) {
    switch (algorithm) {
    case Algorithm::q: return run_q_learning(env, cfg);
    case Algorithm::cbc_q: return run_cbc_q(env, cfg, *bounds);
    case Algorithm::ucb_q: return run_ucb_q(env, cfg);
    case Algorithm::cb_ucb_q: return run_cb_ucb_q(env, cfg, *bounds);
    }
    throw std::logic_error("unreachable algorithm case");
}

bool uses_bounds(Algorithm a) { return a == Algorithm::cbc_q || a == Algorithm::cb_ucb_q; }

} // namespace

std::string to_string(EnvironmentKind kind) {
    switch (kind) {
    case EnvironmentKind::reward_grid: return "reward-grid";
    case EnvironmentKind::transition_grid: return "transition-grid";
    case EnvironmentKind::custom: return "custom";
    }
    return "custom";
}

std::string to_string(ObservationMode mode) {
    switch (mode) {
    case ObservationMode::analytic: return "analytic";
    case ObservationMode::episodic: return "episodic";
    case ObservationMode::query: return "query";
    }
    return "analytic";
}

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::q: return "q";
    case Algorithm::cbc_q: return "cbc-q";
    case Algorithm::ucb_q: return "ucb-q";
    case Algorithm::cb_ucb_q: return "cb-ucb-q";
    }
    return "q";
}

void ExperimentConfig::validate() const {
    grid.validate();
    require(demonstrator.epsilon >= 0.0 && demonstrator.epsilon < 1.0,
            "demonstrator.epsilon must be in [0, 1)");
    if (demonstrator.mode == ObservationMode::episodic) {
        require(demonstrator.episodes >= 1, "episodic collection needs episodes >= 1");
        require(demonstrator.horizon >= 1, "episodic collection needs horizon >= 1");
    }
    if (demonstrator.mode == ObservationMode::query)
        require(demonstrator.samples >= 1, "query collection needs samples >= 1");
    require(bounds.fallback_lo <= bounds.fallback_hi, "bounds.fallback must satisfy lo <= hi");
    for (const auto& [cell, action] : bounds.reward_pairs) {
        require(grid.in_bounds(cell), "bounds.reward_pairs cell out of bounds");
        require(action >= 1 && action <= 4, "bounds.reward_pairs action must be in 1..4");
    }
    for (const auto& [cell, action] : bounds.transition_pairs) {
        require(grid.in_bounds(cell), "bounds.transition_pairs cell out of bounds");
        require(action >= 1 && action <= 4, "bounds.transition_pairs action must be in 1..4");
    }
    learners.base.validate();
    std::set<std::uint64_t> distinct(learners.seeds.begin(), learners.seeds.end());
    require(distinct.size() == learners.seeds.size(), "learners.seeds must be distinct");
    require(evaluation.episodes >= 1, "evaluation.episodes must be >= 1");
    require(evaluation.horizon >= 1, "evaluation.horizon must be >= 1");
    require(!out_dir.empty(), "output.dir must not be empty");
}

std::string ExperimentConfig::to_json() const {
    json doc;
    doc["format"] = "experiment-config";
    doc["version"] = 1;

    json env;
    env["kind"] = causalrl::to_string(kind);
    if (kind == EnvironmentKind::custom) env["grid"] = json::parse(grid_spec_to_json(grid));
    doc["environment"] = env;

    json dem;
    dem["epsilon"] = demonstrator.epsilon;
    dem["mode"] = causalrl::to_string(demonstrator.mode);
    dem["episodes"] = demonstrator.episodes;
    dem["horizon"] = demonstrator.horizon;
    dem["samples"] = demonstrator.samples;
    dem["export_dataset"] = demonstrator.export_dataset;
    if (demo_policy) dem["policy"] = policy_to_json(*demo_policy, grid);
    doc["demonstrator"] = dem;

    json bnd;
    bnd["scope"] = scope_name(bounds.scope);
    bnd["priors"] = prior_name(bounds.prior_mode);
    bnd["reward_pairs"] = pairs_to_json(bounds.reward_pairs);
    bnd["transition_pairs"] = pairs_to_json(bounds.transition_pairs);
    bnd["fallback"] = json::array({bounds.fallback_lo, bounds.fallback_hi});
    doc["bounds"] = bnd;

    json lrn;
    json algos = json::array();
    for (Algorithm a : learners.algorithms) algos.push_back(causalrl::to_string(a));
    lrn["algorithms"] = algos;
    lrn["episodes"] = learners.base.episodes;
    lrn["horizon"] = learners.base.horizon;
    lrn["epsilon"] = learners.base.epsilon;
    lrn["schedule"] = schedule_name(learners.base.schedule);
    lrn["alpha"] = learners.base.alpha;
    lrn["ucb_bonus_scale"] = learners.base.ucb_bonus_scale;
    lrn["ucb_confidence"] = learners.base.ucb_confidence;
    lrn["checkpoint_every"] = learners.base.checkpoint_every;
    lrn["eval_episodes"] = learners.base.eval_episodes;
    lrn["seeds"] = learners.seeds;
    doc["learners"] = lrn;

    json ev;
    ev["episodes"] = evaluation.episodes;
    ev["horizon"] = evaluation.horizon;
    doc["evaluation"] = ev;

    doc["output"] = json{{"dir", out_dir}};
    return doc.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    return config_from_json_impl(text, {});
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    return config_from_json_impl(read_text_file(path), std::filesystem::path(path).parent_path());
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "reward-grid") {
        cfg.kind = EnvironmentKind::reward_grid;
        cfg.grid = reward_grid_spec();
        cfg.demo_policy = reward_grid_demo_spec(cfg.grid);
        cfg.bounds.prior_mode = PriorMode::singleton_support;
        cfg.out_dir = "out/reward-grid";
    } else if (name == "transition-grid") {
        cfg.kind = EnvironmentKind::transition_grid;
        cfg.grid = transition_grid_spec();
        cfg.demo_policy = transition_grid_demo_spec(cfg.grid);
        cfg.bounds.prior_mode = PriorMode::none;
        cfg.out_dir = "out/transition-grid";
    } else {
        fail("unknown preset '" + name + "' (available: reward-grid, transition-grid)");
    }
    cfg.bounds.scope = BoundScope::heuristic;
    cfg.bounds.fallback_lo = -1.0;
    cfg.bounds.fallback_hi = 10.0;
    cfg.learners.algorithms = {Algorithm::q, Algorithm::cbc_q, Algorithm::ucb_q, Algorithm::cb_ucb_q};
    cfg.learners.base.schedule = AlphaSchedule::ucb_horizon;
    cfg.learners.base.epsilon = 0.1;
    cfg.learners.base.episodes = 6000;
    cfg.learners.base.horizon = 60;
    cfg.learners.base.checkpoint_every = 5;
    cfg.learners.base.eval_episodes = 0;
    cfg.learners.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    return cfg;
}

std::vector<std::string> ExperimentConfig::preset_names() { return {"reward-grid", "transition-grid"}; }

EnvironmentBundle build_environment(const ExperimentConfig& cfg) {
    cfg.validate();
    EnvironmentBundle bundle;
    bundle.grid = cfg.grid;
    bundle.cmdp = build_grid(cfg.grid);
    bundle.marginal = marginalize(bundle.cmdp);
    ContextPolicy base;
    if (cfg.demo_policy) {
        base = cfg.demo_policy->build(bundle.cmdp.n_contexts(), bundle.cmdp.n_states(),
                                      bundle.cmdp.n_actions());
    } else {
        base = contextual_optimal_policy(bundle.cmdp);
    }
    bundle.demo = epsilon_greedy(base, cfg.demonstrator.epsilon);
    return bundle;
}

ObservationalDistribution make_observations(const EnvironmentBundle& env, const ExperimentConfig& cfg,
                                            std::uint64_t seed_base, DemoDataset* keep) {
    switch (cfg.demonstrator.mode) {
    case ObservationMode::analytic: return analytic_observational(env.cmdp, env.demo);
    case ObservationMode::episodic: {
        Rng rng = Rng(seed_base).derive(kObservationStream);
        return collect_observations(env.cmdp, env.demo, cfg.demonstrator.episodes,
                                    cfg.demonstrator.horizon, rng, keep);
    }
    case ObservationMode::query: {
        Rng rng = Rng(seed_base).derive(kObservationStream);
        return collect_observations_query(env.cmdp, env.demo, cfg.demonstrator.samples, rng, keep);
    }
    }
    throw std::logic_error("unreachable observation mode");
}

TableReport cmd_reproduce_tables(const ExperimentConfig& cfg, const RunFlags& flags) {
    EnvironmentBundle env = build_environment(cfg);
    // The benchmark tables are exact-arithmetic statements, so this command
    // always consumes the analytic observational joints.
    ObservationalDistribution obs = analytic_observational(env.cmdp, env.demo);
    NaiveEstimates naive = naive_estimates(obs);
    BoundOptions options = resolve_bound_options(cfg, flags.workers);
    BoundedMdpModel model =
        bound_all(obs, env.marginal.states, env.marginal.actions, env.cmdp.gamma(), options);
    CriticalPairReport crit = detect_critical_pairs(obs);

    TableReport report;
    for (const auto& [s, a] : crit.reward_pairs) {
        TableRow row;
        row.cell = env.grid.cell(s);
        row.action = static_cast<int>(a) + 1;
        row.do_effect = env.marginal.expected_reward(s, a);
        row.naive = naive.valid[s][a] ? naive.reward_mean[s][a] : 0.0;
        row.lo = model.r_lo[s][a];
        row.hi = model.r_hi[s][a];
        report.rows.push_back(row);
    }
    for (const auto& [s, a] : crit.transition_pairs) {
        const StateObservation& so = obs.states[s];
        for (std::size_t idx = 0; idx < so.successors.size(); ++idx) {
            if (so.successor_joint[idx][a] <= 1e-12) continue;
            std::size_t next = so.successors[idx];
            TableRow row;
            row.cell = env.grid.cell(s);
            row.action = static_cast<int>(a) + 1;
            row.next = env.grid.cell(next);
            row.do_effect = env.marginal.transition[s][a][next];
            row.naive = naive.valid[s][a] ? naive.successor_cond[s][idx][a] : 0.0;
            row.lo = model.p_lo[s][a][next];
            row.hi = model.p_hi[s][a][next];
            report.rows.push_back(row);
        }
    }

    check_against_expected(cfg, report);

    std::filesystem::path dir = resolve_out_dir(cfg, flags);
    write_text_file((dir / "table.csv").string(), table_to_csv(report));
    write_text_file((dir / "table_check.json").string(), table_check_to_json(cfg, report));
    return report;
}

BoundArtifacts cmd_compute_bounds(const ExperimentConfig& cfg, const RunFlags& flags) {
    EnvironmentBundle env = build_environment(cfg);
    DemoDataset dataset;
    DemoDataset* keep = cfg.demonstrator.export_dataset && cfg.demonstrator.mode != ObservationMode::analytic
                            ? &dataset
                            : nullptr;
    BoundArtifacts artifacts;
    artifacts.obs = make_observations(env, cfg, flags.seed_base, keep);
    BoundOptions options = resolve_bound_options(cfg, flags.workers);
    artifacts.model =
        bound_all(artifacts.obs, env.marginal.states, env.marginal.actions, env.cmdp.gamma(), options);
    artifacts.v = robust_v_table(artifacts.model);
    artifacts.q = q_bounds(artifacts.model, artifacts.v);

    std::filesystem::path dir = resolve_out_dir(cfg, flags);
    write_text_file((dir / "observational.json").string(), observational_to_json(artifacts.obs));
    write_text_file((dir / "bounded_model.json").string(), bounded_model_to_json(artifacts.model));
    write_text_file((dir / "q_bounds.json").string(), q_bounds_to_json(artifacts.q));
    if (keep) write_text_file((dir / "dataset.csv").string(), dataset_to_csv(dataset));
    return artifacts;
}

LearningArtifacts cmd_run_learning(const ExperimentConfig& cfg, const RunFlags& flags) {
    require(!cfg.learners.algorithms.empty(), "run-learning needs at least one algorithm");
    require(!cfg.learners.seeds.empty(), "run-learning needs at least one seed");
    EnvironmentBundle env = build_environment(cfg);

    bool needs_bounds = false;
    for (Algorithm a : cfg.learners.algorithms) needs_bounds = needs_bounds || uses_bounds(a);
    QBoundTable qb;
    if (needs_bounds) {
        ObservationalDistribution obs = make_observations(env, cfg, flags.seed_base, nullptr);
        BoundOptions options = resolve_bound_options(cfg, flags.workers);
        BoundedMdpModel model =
            bound_all(obs, env.marginal.states, env.marginal.actions, env.cmdp.gamma(), options);
        qb = q_bounds(model, robust_v_table(model));
    }

    LearningArtifacts artifacts;
    ValueIterationResult vi = value_iteration(env.marginal);
    artifacts.optimal_value = initial_value(env.marginal, vi.v);
    // The naive reference is an exact quantity: derive it from the analytic
    // joints even when the bounds above consume sampled data.
    ObservationalDistribution analytic = analytic_observational(env.cmdp, env.demo);
    Mdp naive_model = naive_mdp(analytic, env.marginal);
    ValueIterationResult naive_vi = value_iteration(naive_model);
    artifacts.naive_planning_value = initial_value(naive_model, naive_vi.v);

    const std::size_t n_algos = cfg.learners.algorithms.size();
    const std::size_t n_seeds = cfg.learners.seeds.size();
    std::vector<LearnerRun> results(n_algos * n_seeds);
    parallel_for(results.size(), flags.workers, [&](std::size_t i) {
        std::size_t algo_idx = i / n_seeds;
        std::size_t seed_idx = i % n_seeds;
        LearnerConfig rc = cfg.learners.base;
        rc.gamma = env.cmdp.gamma();
        rc.seed = flags.seed_base + cfg.learners.seeds[seed_idx];
        results[i] = run_one(cfg.learners.algorithms[algo_idx], env.cmdp, rc,
                             needs_bounds ? &qb : nullptr);
    });

    std::filesystem::path dir = resolve_out_dir(cfg, flags);
    std::vector<SvgSeries> series;
    std::ostringstream summary;
    summary << "# learning-summary v1\n";
    summary << "algorithm,episode,mean_estimate,stderr_estimate,n_seeds\n";
    for (std::size_t ai = 0; ai < n_algos; ++ai) {
        Algorithm algorithm = cfg.learners.algorithms[ai];
        AlgorithmCurves curves;
        curves.algorithm = algorithm;
        std::vector<SeedCurve> seed_curves;
        for (std::size_t si = 0; si < n_seeds; ++si) {
            std::uint64_t effective = flags.seed_base + cfg.learners.seeds[si];
            curves.seeds.push_back(effective);
            curves.curves.push_back(results[ai * n_seeds + si].curve);
            seed_curves.push_back({effective, results[ai * n_seeds + si].curve});
        }
        write_text_file((dir / ("curves_" + file_slug(algorithm) + ".csv")).string(),
                        curves_to_csv(seed_curves));

        const std::size_t n_points = curves.curves.front().points.size();
        SvgSeries mean_series;
        mean_series.name = display_name(algorithm);
        switch (algorithm) {
        case Algorithm::q: mean_series.color = "#1f77b4"; break;
        case Algorithm::cbc_q: mean_series.color = "#ff7f0e"; break;
        case Algorithm::ucb_q: mean_series.color = "#2ca02c"; break;
        case Algorithm::cb_ucb_q: mean_series.color = "#d62728"; break;
        }
        for (std::size_t k = 0; k < n_points; ++k) {
            double mean = 0.0;
            for (std::size_t si = 0; si < n_seeds; ++si)
                mean += curves.curves[si].points[k].value_estimate;
            mean /= static_cast<double>(n_seeds);
            double var = 0.0;
            for (std::size_t si = 0; si < n_seeds; ++si) {
                double d = curves.curves[si].points[k].value_estimate - mean;
                var += d * d;
            }
            double stderr_ = n_seeds >= 2 ? std::sqrt(var / static_cast<double>(n_seeds - 1)) /
                                                std::sqrt(static_cast<double>(n_seeds))
                                          : 0.0;
            std::size_t episode = curves.curves.front().points[k].episode;
            summary << to_string(algorithm) << "," << episode << "," << format_double(mean) << ","
                    << format_double(stderr_) << "," << n_seeds << "\n";
            mean_series.points.emplace_back(static_cast<double>(episode), mean);
        }
        series.push_back(std::move(mean_series));
        artifacts.runs.push_back(std::move(curves));
    }
    write_text_file((dir / "summary.csv").string(), summary.str());

    json refs;
    refs["format"] = "learning-references";
    refs["version"] = 1;
    refs["optimal_value"] = artifacts.optimal_value;
    refs["naive_planning_value"] = artifacts.naive_planning_value;
    write_text_file((dir / "references.json").string(), refs.dump(2) + "\n");

    std::vector<SvgRefLine> ref_lines = {
        {"True optimum", "#444444", artifacts.optimal_value},
        {"Naive-model optimum", "#999999", artifacts.naive_planning_value},
    };
    write_text_file((dir / "learning_curves.svg").string(),
                    svg_line_chart("Start-state value estimate", "Episodes", "Value estimate",
                                   series, ref_lines));
    return artifacts;
}

EvaluationReport cmd_evaluate(const ExperimentConfig& cfg, const RunFlags& flags) {
    EnvironmentBundle env = build_environment(cfg);
    ValueIterationResult vi = value_iteration(env.marginal);
    ObservationalDistribution analytic = analytic_observational(env.cmdp, env.demo);
    Mdp naive_model = naive_mdp(analytic, env.marginal);
    ValueIterationResult naive_vi = value_iteration(naive_model);

    EvaluationReport report;
    Rng opt_rng = Rng(flags.seed_base).derive(kEvaluationStreamBase);
    EvaluationRow optimal;
    optimal.policy = "optimal";
    optimal.planning_value = initial_value(env.marginal, vi.v);
    optimal.estimate =
        evaluate_policy(env.cmdp, vi.policy, cfg.evaluation.episodes, cfg.evaluation.horizon, opt_rng);
    report.rows.push_back(optimal);

    Rng naive_rng = Rng(flags.seed_base).derive(kEvaluationStreamBase + 1);
    EvaluationRow naive;
    naive.policy = "naive";
    naive.planning_value = initial_value(naive_model, naive_vi.v);
    naive.estimate = evaluate_policy(env.cmdp, naive_vi.policy, cfg.evaluation.episodes,
                                     cfg.evaluation.horizon, naive_rng);
    report.rows.push_back(naive);

    std::filesystem::path dir = resolve_out_dir(cfg, flags);
    std::ostringstream os;
    os << "# policy-evaluation v1\n";
    os << "policy,planning_value,mc_mean,mc_stderr,episodes\n";
    for (const auto& row : report.rows) {
        os << row.policy << "," << format_double(row.planning_value) << ","
           << format_double(row.estimate.mean) << "," << format_double(row.estimate.stderr_) << ","
           << row.estimate.episodes << "\n";
    }
    write_text_file((dir / "evaluation.csv").string(), os.str());
    return report;
}

} // namespace causalrl
