#include "causalrl/gridworld.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace causalrl {

using nlohmann::json;

std::size_t GridSpec::index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
}

Cell GridSpec::cell(std::size_t index) const {
    return Cell{static_cast<int>(index % static_cast<std::size_t>(width)),
                static_cast<int>(index / static_cast<std::size_t>(width))};
}

bool GridSpec::in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }

bool GridSpec::blocked(Cell a, Cell b) const {
    for (const auto& w : walls)
        if ((w.first == a && w.second == b) || (w.first == b && w.second == a)) return true;
    return false;
}

Cell GridSpec::move(Cell from, std::size_t action) const {
    static const int dx[4] = {0, 1, 0, -1};
    static const int dy[4] = {1, 0, -1, 0};
    if (action >= 4) throw std::invalid_argument("GridSpec::move: bad action");
    Cell to{from.x + dx[action], from.y + dy[action]};
    if (!in_bounds(to) || blocked(from, to)) return from;
    return to;
}

std::string GridSpec::label(Cell c) const {
    return "[" + std::to_string(c.x) + "," + std::to_string(c.y) + "]";
}

void GridSpec::validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("GridSpec: empty grid");
    if (!in_bounds(start)) throw std::invalid_argument("GridSpec: start outside grid");
    if (context_dist.empty()) throw std::invalid_argument("GridSpec: no contexts");
    const std::size_t nu = context_dist.size();
    for (const auto& g : goals) {
        if (!in_bounds(g.cell)) throw std::invalid_argument("GridSpec: goal outside grid");
        if (g.success_prob.size() != nu)
            throw std::invalid_argument("GridSpec: goal success_prob needs one entry per context");
    }
    for (const auto& w : walls) {
        if (!in_bounds(w.first) || !in_bounds(w.second)) throw std::invalid_argument("GridSpec: wall outside grid");
        int d = std::abs(w.first.x - w.second.x) + std::abs(w.first.y - w.second.y);
        if (d != 1) throw std::invalid_argument("GridSpec: wall must join adjacent cells");
    }
    for (const auto& sc : stochastic) {
        if (!in_bounds(sc.cell)) throw std::invalid_argument("GridSpec: stochastic cell outside grid");
        if (sc.action >= 4) throw std::invalid_argument("GridSpec: stochastic action out of range");
        if (sc.outcomes.empty()) throw std::invalid_argument("GridSpec: stochastic cell without outcomes");
        for (std::size_t u = 0; u < nu; u++) {
            double sum = 0.0;
            for (const auto& oc : sc.outcomes) {
                if (oc.prob.size() != nu)
                    throw std::invalid_argument("GridSpec: stochastic outcome needs one prob per context");
                sum += oc.prob[u];
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("GridSpec: stochastic outcome probs must sum to 1 per context");
        }
    }
}

namespace {

const GridGoal* goal_at(const GridSpec& spec, Cell c) {
    for (const auto& g : spec.goals)
        if (g.cell == c) return &g;
    return nullptr;
}

const GridSpec::StochasticCell* stochastic_at(const GridSpec& spec, Cell c, std::size_t action) {
    for (const auto& sc : spec.stochastic)
        if (sc.cell == c && sc.action == action) return &sc;
    return nullptr;
}

/// Reward of arriving at `to` under context u: goal payout lottery on goal
/// entry, flat step reward otherwise.
RewardDistribution arrival_reward(const GridSpec& spec, Cell to, std::size_t u) {
    if (const GridGoal* g = goal_at(spec, to)) {
        double p = g->success_prob[u];
        if (p >= 1.0) return RewardDistribution::point(g->value);
        if (p <= 0.0) return RewardDistribution::point(g->failure_reward);
        return RewardDistribution{{g->value, g->failure_reward}, {p, 1.0 - p}};
    }
    return RewardDistribution::point(spec.step_reward);
}

/// Merge a weighted reward lottery into (value -> prob) accumulation.
void accumulate(std::map<double, double>& acc, const RewardDistribution& d, double weight) {
    for (std::size_t i = 0; i < d.values.size(); i++)
        if (weight * d.probs[i] != 0.0) acc[d.values[i]] += weight * d.probs[i];
}

RewardDistribution to_distribution(const std::map<double, double>& acc) {
    RewardDistribution out;
    for (const auto& [v, p] : acc) {
        out.values.push_back(v);
        out.probs.push_back(p);
    }
    return out;
}

} // namespace

ContextualMdp build_grid(const GridSpec& spec) {
    spec.validate();
    const std::size_t ns = spec.n_cells(), na = 4, nu = spec.context_dist.size();

    StateSpace states;
    states.size = ns;
    for (std::size_t s = 0; s < ns; s++) states.labels.push_back(spec.label(spec.cell(s)));
    ActionSpace actions;
    actions.size = na;
    actions.labels = {"up", "right", "down", "left"};

    std::vector<double> init(ns, 0.0);
    init[spec.index(spec.start)] = 1.0;

    ContextualMdp cmdp;
    cmdp.context_dist = spec.context_dist;
    cmdp.contexts.assign(nu, Mdp{});
    for (std::size_t u = 0; u < nu; u++) {
        Mdp& m = cmdp.contexts[u];
        m.states = states;
        m.actions = actions;
        m.gamma = spec.gamma;
        m.initial_dist = init;
        m.transition.assign(ns, std::vector<std::vector<double>>(na, std::vector<double>(ns, 0.0)));
        m.reward.assign(ns, std::vector<RewardDistribution>(na));
        for (std::size_t s = 0; s < ns; s++) {
            Cell c = spec.cell(s);
            for (std::size_t a = 0; a < na; a++) {
                if (goal_at(spec, c)) {
                    // Absorbing: stay put, collect nothing further.
                    m.transition[s][a][s] = 1.0;
                    m.reward[s][a] = RewardDistribution::point(0.0);
                    continue;
                }
                std::map<double, double> racc;
                if (const auto* sc = stochastic_at(spec, c, a)) {
                    for (const auto& oc : sc->outcomes) {
                        double p = oc.prob[u];
                        if (p == 0.0) continue;
                        Cell to = spec.move(c, oc.move);
                        m.transition[s][a][spec.index(to)] += p;
                        accumulate(racc, arrival_reward(spec, to, u), p);
                    }
                } else {
                    Cell to = spec.move(c, a);
                    m.transition[s][a][spec.index(to)] = 1.0;
                    accumulate(racc, arrival_reward(spec, to, u), 1.0);
                }
                m.reward[s][a] = to_distribution(racc);
            }
        }
    }
    cmdp.validate();
    return cmdp;
}

GridSpec reward_grid_spec() {
    GridSpec spec;
    spec.width = 5;
    spec.height = 5;
    spec.start = Cell{2, 0};
    spec.gamma = 0.9;
    spec.step_reward = -1.0;
    spec.context_dist = {0.2, 0.8};
    spec.goals = {
        GridGoal{Cell{0, 4}, "red", 10.0, {0.6, 0.1}, -1.0},
        GridGoal{Cell{4, 4}, "green", 5.0, {0.3, 0.8}, -1.0},
    };
    return spec;
}

GridSpec transition_grid_spec() {
    GridSpec spec;
    spec.width = 5;
    spec.height = 5;
    spec.start = Cell{2, 0};
    spec.gamma = 0.9;
    spec.step_reward = -1.0;
    spec.context_dist = {0.2, 0.8};
    spec.goals = {
        GridGoal{Cell{0, 4}, "red", 10.0, {1.0, 1.0}, -1.0},
        GridGoal{Cell{4, 4}, "green", 5.0, {1.0, 1.0}, -1.0},
    };
    // Each goal pocket is enterable only through the stochastic cell beneath
    // it; all deterministic detours into the top corners are walled off.
    spec.walls = {
        {Cell{0, 3}, Cell{1, 3}},
        {Cell{0, 4}, Cell{1, 4}},
        {Cell{4, 3}, Cell{3, 3}},
        {Cell{4, 4}, Cell{3, 4}},
    };
    spec.stochastic = {
        GridSpec::StochasticCell{Cell{0, 2}, kUp,
                                 {GridSpec::StochasticCell::Outcome{kUp, {0.7, 0.05}},
                                  GridSpec::StochasticCell::Outcome{kDown, {0.3, 0.95}}}},
        GridSpec::StochasticCell{Cell{4, 2}, kUp,
                                 {GridSpec::StochasticCell::Outcome{kUp, {0.4, 0.8}},
                                  GridSpec::StochasticCell::Outcome{kDown, {0.6, 0.2}}}},
    };
    return spec;
}

ContextualMdp build_reward_gridworld() { return build_grid(reward_grid_spec()); }

ContextualMdp build_transition_gridworld() { return build_grid(transition_grid_spec()); }

namespace {

Cell parse_cell(const json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("grid config: cell must be [x,y]");
    return Cell{j[0].get<int>(), j[1].get<int>()};
}

json cell_json(Cell c) { return json::array({c.x, c.y}); }

std::size_t parse_action(const json& j) {
    int a = j.get<int>();
    if (a < 1 || a > 4) throw std::invalid_argument("grid config: actions are 1..4");
    return static_cast<std::size_t>(a - 1);
}

} // namespace

GridSpec grid_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("grid config: parse error: ") + e.what());
    }
    try {
        GridSpec spec;
        if (j.value("version", 1) != 1) throw std::invalid_argument("grid config: unsupported version");
        spec.width = j.value("width", 5);
        spec.height = j.value("height", 5);
        if (j.contains("start")) spec.start = parse_cell(j["start"]);
        spec.gamma = j.value("gamma", 0.9);
        spec.step_reward = j.value("step_reward", -1.0);
        if (j.contains("context_dist")) spec.context_dist = j["context_dist"].get<std::vector<double>>();
        spec.goals.clear();
        for (const auto& gj : j.value("goals", json::array())) {
            GridGoal g;
            g.cell = parse_cell(gj.at("cell"));
            g.name = gj.value("name", "");
            g.value = gj.at("value").get<double>();
            if (gj.contains("success_prob"))
                g.success_prob = gj["success_prob"].get<std::vector<double>>();
            else
                g.success_prob.assign(spec.context_dist.size(), 1.0);
            g.failure_reward = gj.value("failure_reward", -1.0);
            spec.goals.push_back(g);
        }
        for (const auto& wj : j.value("walls", json::array())) {
            if (!wj.is_array() || wj.size() != 2) throw std::invalid_argument("grid config: wall must be [cell,cell]");
            spec.walls.emplace_back(parse_cell(wj[0]), parse_cell(wj[1]));
        }
        for (const auto& sj : j.value("stochastic", json::array())) {
            GridSpec::StochasticCell sc;
            sc.cell = parse_cell(sj.at("cell"));
            sc.action = parse_action(sj.at("action"));
            for (const auto& oj : sj.at("outcomes")) {
                GridSpec::StochasticCell::Outcome oc;
                oc.move = parse_action(oj.at("move"));
                oc.prob = oj.at("prob").get<std::vector<double>>();
                sc.outcomes.push_back(oc);
            }
            spec.stochastic.push_back(sc);
        }
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("grid config: ") + e.what());
    }
}

std::string grid_spec_to_json(const GridSpec& spec) {
    json j;
    j["version"] = 1;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["start"] = cell_json(spec.start);
    j["gamma"] = spec.gamma;
    j["step_reward"] = spec.step_reward;
    j["context_dist"] = spec.context_dist;
    j["goals"] = json::array();
    for (const auto& g : spec.goals) {
        json gj;
        gj["cell"] = cell_json(g.cell);
        gj["name"] = g.name;
        gj["value"] = g.value;
        gj["success_prob"] = g.success_prob;
        gj["failure_reward"] = g.failure_reward;
        j["goals"].push_back(gj);
    }
    j["walls"] = json::array();
    for (const auto& w : spec.walls) j["walls"].push_back(json::array({cell_json(w.first), cell_json(w.second)}));
    j["stochastic"] = json::array();
    for (const auto& sc : spec.stochastic) {
        json sj;
        sj["cell"] = cell_json(sc.cell);
        sj["action"] = static_cast<int>(sc.action) + 1;
        sj["outcomes"] = json::array();
        for (const auto& oc : sc.outcomes) {
            json oj;
            oj["move"] = static_cast<int>(oc.move) + 1;
            oj["prob"] = oc.prob;
            sj["outcomes"].push_back(oj);
        }
        j["stochastic"].push_back(sj);
    }
    return j.dump(2);
}

} // namespace causalrl
