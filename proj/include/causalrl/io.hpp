#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalrl/demonstrator.hpp"
#include "causalrl/learners.hpp"
#include "causalrl/value_bounds.hpp"

namespace causalrl {

/// Shortest decimal string that parses back to exactly the same double.
/// Deterministic; rejects non-finite input.
std::string format_double(double value);

/// Demonstrator dataset as versioned CSV with columns (s, a, s_next, r).
std::string dataset_to_csv(const DemoDataset& dataset);
DemoDataset dataset_from_csv(const std::string& text);

/// Observational joints as a versioned JSON document.
std::string observational_to_json(const ObservationalDistribution& obs);
ObservationalDistribution observational_from_json(const std::string& text);

/// Interval model as a versioned JSON document (per-pair reward range and
/// per-successor probability range).
std::string bounded_model_to_json(const BoundedMdpModel& model);
BoundedMdpModel bounded_model_from_json(const std::string& text);

/// Q-interval table as a versioned JSON document.
std::string q_bounds_to_json(const QBoundTable& table);
QBoundTable q_bounds_from_json(const std::string& text);

/// Learning curves as CSV with columns (seed, episode, metric, value);
/// metrics are "value_estimate" and, when recorded, "mc_return".
struct SeedCurve {
    std::uint64_t seed = 0;
    LearningCurve curve;
};
std::string curves_to_csv(const std::vector<SeedCurve>& curves);

/// Minimal static SVG line chart. No timestamps or other run-varying content,
/// so identical inputs produce identical bytes.
struct SvgSeries {
    std::string name;
    std::string color;
    std::vector<std::pair<double, double>> points;
};
struct SvgRefLine {
    std::string name;
    std::string color;
    double y = 0.0;
};
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           const std::vector<SvgRefLine>& ref_lines = {});

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace causalrl
