#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "causalrl/mdp.hpp"

namespace causalrl {

/// Grid coordinates: x grows rightward, y grows upward. The start and goal
/// conventions follow the usual motion-planning drawing (start near the
/// bottom, goals on the top row).
struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell& o) const { return x == o.x && y == o.y; }
};

/// Grid actions, 0-based internally: 0=up(+y), 1=right(+x), 2=down(-y),
/// 3=left(-x). Config files and printed tables use the 1-based ids 1..4.
enum GridAction : std::size_t { kUp = 0, kRight = 1, kDown = 2, kLeft = 3 };

struct GridGoal {
    Cell cell;
    std::string name;
    double value = 0.0;
    /// Per-context probability that arrival pays `value`; otherwise the
    /// arrival pays `failure_reward`. Use all-ones for a deterministic payout.
    std::vector<double> success_prob;
    double failure_reward = -1.0;
};

/// Declarative gridworld description, compiled to a ContextualMdp.
struct GridSpec {
    int width = 5;
    int height = 5;
    Cell start{2, 0};
    double gamma = 0.9;
    double step_reward = -1.0;
    std::vector<double> context_dist{1.0};
    std::vector<GridGoal> goals;
    /// Undirected blocked edges between adjacent cells.
    std::vector<std::pair<Cell, Cell>> walls;

    /// Context-dependent motion at one (cell, action): the listed move
    /// directions fire with the listed per-context probabilities (each move
    /// still resolves collisions by staying put).
    struct StochasticCell {
        Cell cell;
        std::size_t action = kUp;
        struct Outcome {
            std::size_t move = kUp;
            std::vector<double> prob; // one entry per context
        };
        std::vector<Outcome> outcomes;
    };
    std::vector<StochasticCell> stochastic;

    std::size_t n_cells() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(Cell c) const;
    Cell cell(std::size_t index) const;
    bool in_bounds(Cell c) const;
    bool blocked(Cell a, Cell b) const;
    /// Resolve one move: target cell, or the same cell on a boundary or wall
    /// collision.
    Cell move(Cell from, std::size_t action) const;
    std::string label(Cell c) const;
    void validate() const;
};

/// Compile a grid description into its contextual MDP. Goal cells are
/// absorbing with reward 0; every non-goal move pays step_reward unless it
/// arrives at a goal, in which case the goal's payout distribution applies.
ContextualMdp build_grid(const GridSpec& spec);

/// Reward-confounded benchmark grid: deterministic motion, context-dependent
/// goal payouts (red 10 @ 0.6/0.1, green 5 @ 0.3/0.8), context weights
/// (0.2, 0.8), gamma 0.9, no interior walls.
GridSpec reward_grid_spec();

/// Transition-confounded benchmark grid: deterministic payouts (red +10,
/// green +5), context-dependent motion at ([0,2],up) and ([4,2],up), and
/// interior walls that seal each goal pocket behind its stochastic cell.
GridSpec transition_grid_spec();

ContextualMdp build_reward_gridworld();
ContextualMdp build_transition_gridworld();

/// Parse / serialize the grid config document (JSON; cells as [x,y], actions
/// 1-based). Throws std::invalid_argument on malformed input.
GridSpec grid_spec_from_json(const std::string& text);
std::string grid_spec_to_json(const GridSpec& spec);

} // namespace causalrl
