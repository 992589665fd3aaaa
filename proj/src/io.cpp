#include "causalrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "causalrl/errors.hpp"

#include <json.hpp>

namespace causalrl {

using nlohmann::json;

std::string format_double(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("format_double: non-finite value");
    if (value == 0.0) return "0";
    char buf[64];
    for (int prec = 1; prec <= 17; prec++) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, value);
        if (std::strtod(buf, nullptr) == value) return buf;
    }
    return buf;
}

// --------------------------------------------------------------- dataset CSV

namespace {

constexpr const char* kDatasetHeader = "# dataset v1";
constexpr const char* kDatasetColumns = "s,a,s_next,r";
constexpr const char* kCurveHeader = "# learning-curves v1";
constexpr const char* kCurveColumns = "seed,episode,metric,value";

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    return out;
}

} // namespace

std::string dataset_to_csv(const DemoDataset& dataset) {
    std::ostringstream out;
    out << kDatasetHeader << "\n" << kDatasetColumns << "\n";
    for (const EpisodeStep& t : dataset.tuples)
        out << t.s << "," << t.a << "," << t.s_next << "," << format_double(t.r) << "\n";
    return out.str();
}

DemoDataset dataset_from_csv(const std::string& text) {
    DemoDataset dataset;
    std::istringstream in(text);
    std::string line;
    bool saw_version = false;
    bool saw_columns = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line != kDatasetHeader)
                throw std::invalid_argument("dataset csv: unsupported version marker '" + line + "'");
            saw_version = true;
            continue;
        }
        if (!saw_version)
            throw std::invalid_argument("dataset csv: missing version marker");
        if (!saw_columns) {
            if (line != kDatasetColumns)
                throw std::invalid_argument("dataset csv: unexpected header '" + line + "'");
            saw_columns = true;
            continue;
        }
        std::vector<std::string> fields = split(line, ',');
        if (fields.size() != 4) throw std::invalid_argument("dataset csv: malformed row '" + line + "'");
        EpisodeStep step;
        step.s = std::stoul(fields[0]);
        step.a = std::stoul(fields[1]);
        step.s_next = std::stoul(fields[2]);
        step.r = std::stod(fields[3]);
        dataset.tuples.push_back(step);
    }
    if (!saw_columns) throw std::invalid_argument("dataset csv: missing column header");
    return dataset;
}

// ------------------------------------------------------------ JSON documents

namespace {

/// Parses with nlohmann but reports malformed input as std::invalid_argument,
/// like every other bad-input path, so the C API maps it to the right code.
json parse_doc(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("json: ") + e.what());
    }
}

void check_doc(const json& doc, const char* format, int version) {
    if (!doc.is_object() || doc.value("format", "") != format)
        throw std::invalid_argument(std::string("json: not a ") + format + " document");
    if (doc.value("version", -1) != version)
        throw std::invalid_argument(std::string("json: unsupported ") + format + " version");
}

const char* source_name(ObservationalDistribution::Source source) {
    switch (source) {
        case ObservationalDistribution::Source::analytic: return "analytic";
        case ObservationalDistribution::Source::episodic: return "episodic";
        case ObservationalDistribution::Source::query: return "query";
    }
    return "analytic";
}

ObservationalDistribution::Source source_from_name(const std::string& name) {
    if (name == "analytic") return ObservationalDistribution::Source::analytic;
    if (name == "episodic") return ObservationalDistribution::Source::episodic;
    if (name == "query") return ObservationalDistribution::Source::query;
    throw std::invalid_argument("json: unknown observation source '" + name + "'");
}

} // namespace

std::string observational_to_json(const ObservationalDistribution& obs) {
    json doc;
    doc["format"] = "observational-distribution";
    doc["version"] = 1;
    doc["source"] = source_name(obs.source);
    doc["n_states"] = obs.n_states;
    doc["n_actions"] = obs.n_actions;
    json states = json::array();
    for (const StateObservation& st : obs.states) {
        json item;
        item["covered"] = st.covered;
        if (st.covered) {
            item["visits"] = st.visits;
            item["reward_values"] = st.reward_values;
            item["successors"] = st.successors;
            item["reward_joint"] = st.reward_joint;
            item["successor_joint"] = st.successor_joint;
        }
        states.push_back(std::move(item));
    }
    doc["states"] = std::move(states);
    return doc.dump(2) + "\n";
}

ObservationalDistribution observational_from_json(const std::string& text) {
    const json doc = parse_doc(text);
    check_doc(doc, "observational-distribution", 1);
    ObservationalDistribution obs;
    obs.source = source_from_name(doc.at("source").get<std::string>());
    obs.n_states = doc.at("n_states").get<std::size_t>();
    obs.n_actions = doc.at("n_actions").get<std::size_t>();
    for (const json& item : doc.at("states")) {
        StateObservation st;
        st.covered = item.at("covered").get<bool>();
        if (st.covered) {
            st.visits = item.at("visits").get<double>();
            st.reward_values = item.at("reward_values").get<std::vector<double>>();
            st.successors = item.at("successors").get<std::vector<std::size_t>>();
            st.reward_joint = item.at("reward_joint").get<std::vector<std::vector<double>>>();
            st.successor_joint = item.at("successor_joint").get<std::vector<std::vector<double>>>();
        }
        obs.states.push_back(std::move(st));
    }
    if (obs.states.size() != obs.n_states)
        throw std::invalid_argument("json: observational state count mismatch");
    return obs;
}

namespace {

json space_to_json(std::size_t size, const std::vector<std::string>& labels) {
    json out;
    out["size"] = size;
    out["labels"] = labels;
    return out;
}

void space_from_json(const json& item, std::size_t& size, std::vector<std::string>& labels) {
    size = item.at("size").get<std::size_t>();
    labels = item.value("labels", std::vector<std::string>{});
}

} // namespace

std::string bounded_model_to_json(const BoundedMdpModel& model) {
    json doc;
    doc["format"] = "bounded-mdp-model";
    doc["version"] = 1;
    doc["gamma"] = model.gamma;
    doc["reward_min"] = model.reward_min;
    doc["reward_max"] = model.reward_max;
    doc["states"] = space_to_json(model.states.size, model.states.labels);
    doc["actions"] = space_to_json(model.actions.size, model.actions.labels);
    doc["r_lo"] = model.r_lo;
    doc["r_hi"] = model.r_hi;
    doc["p_lo"] = model.p_lo;
    doc["p_hi"] = model.p_hi;
    return doc.dump(2) + "\n";
}

BoundedMdpModel bounded_model_from_json(const std::string& text) {
    const json doc = parse_doc(text);
    check_doc(doc, "bounded-mdp-model", 1);
    BoundedMdpModel model;
    model.gamma = doc.at("gamma").get<double>();
    model.reward_min = doc.at("reward_min").get<double>();
    model.reward_max = doc.at("reward_max").get<double>();
    space_from_json(doc.at("states"), model.states.size, model.states.labels);
    space_from_json(doc.at("actions"), model.actions.size, model.actions.labels);
    model.r_lo = doc.at("r_lo").get<std::vector<std::vector<double>>>();
    model.r_hi = doc.at("r_hi").get<std::vector<std::vector<double>>>();
    model.p_lo = doc.at("p_lo").get<std::vector<std::vector<std::vector<double>>>>();
    model.p_hi = doc.at("p_hi").get<std::vector<std::vector<std::vector<double>>>>();
    model.validate();
    return model;
}

std::string q_bounds_to_json(const QBoundTable& table) {
    json doc;
    doc["format"] = "q-bound-table";
    doc["version"] = 1;
    doc["n_states"] = table.n_states;
    doc["n_actions"] = table.n_actions;
    doc["lo"] = table.lo;
    doc["hi"] = table.hi;
    return doc.dump(2) + "\n";
}

QBoundTable q_bounds_from_json(const std::string& text) {
    const json doc = parse_doc(text);
    check_doc(doc, "q-bound-table", 1);
    QBoundTable table;
    table.n_states = doc.at("n_states").get<std::size_t>();
    table.n_actions = doc.at("n_actions").get<std::size_t>();
    table.lo = doc.at("lo").get<std::vector<double>>();
    table.hi = doc.at("hi").get<std::vector<double>>();
    table.validate();
    return table;
}

// --------------------------------------------------------------- curves CSV

std::string curves_to_csv(const std::vector<SeedCurve>& curves) {
    std::ostringstream out;
    out << kCurveHeader << "\n" << kCurveColumns << "\n";
    for (const SeedCurve& sc : curves) {
        sc.curve.validate();
        for (const CurvePoint& p : sc.curve.points) {
            out << sc.seed << "," << p.episode << ",value_estimate," << format_double(p.value_estimate)
                << "\n";
            if (p.has_mc)
                out << sc.seed << "," << p.episode << ",mc_return," << format_double(p.mc_return) << "\n";
        }
    }
    return out.str();
}

// ----------------------------------------------------------------- SVG chart

namespace {

std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape_xml(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           const std::vector<SvgRefLine>& ref_lines) {
    const double width = 840, height = 560;
    const double left = 80, right = 820, top = 50, bottom = 500;

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const SvgSeries& s : series)
        for (const auto& [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    for (const SvgRefLine& r : ref_lines) {
        y_min = std::min(y_min, r.y);
        y_max = std::max(y_max, r.y);
    }
    if (!std::isfinite(x_min)) {
        x_min = 0.0;
        x_max = 1.0;
    }
    if (!std::isfinite(y_min)) {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * (right - left); };
    auto py = [&](double y) { return bottom - (y - y_min) / (y_max - y_min) * (bottom - top); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"#ffffff\"/>\n";
    out << "  <text x=\"" << (width / 2) << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"18\">" << escape_xml(title) << "</text>\n";

    // Axes and ticks.
    out << "  <line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
        << "\" stroke=\"#000000\"/>\n";
    out << "  <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"#000000\"/>\n";
    const int ticks = 5;
    for (int i = 0; i <= ticks; i++) {
        const double fx = x_min + (x_max - x_min) * i / ticks;
        const double fy = y_min + (y_max - y_min) * i / ticks;
        const double tx = px(fx), ty = py(fy);
        out << "  <line x1=\"" << svg_num(tx) << "\" y1=\"" << bottom << "\" x2=\"" << svg_num(tx)
            << "\" y2=\"" << bottom + 6 << "\" stroke=\"#000000\"/>\n";
        out << "  <text x=\"" << svg_num(tx) << "\" y=\"" << bottom + 22
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << format_double(fx)
            << "</text>\n";
        out << "  <line x1=\"" << left - 6 << "\" y1=\"" << svg_num(ty) << "\" x2=\"" << left << "\" y2=\""
            << svg_num(ty) << "\" stroke=\"#000000\"/>\n";
        out << "  <text x=\"" << left - 10 << "\" y=\"" << svg_num(ty + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << svg_num(fy) << "</text>\n";
    }
    out << "  <text x=\"" << (left + right) / 2 << "\" y=\"" << bottom + 44
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(x_label)
        << "</text>\n";
    out << "  <text x=\"22\" y=\"" << (top + bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 22 "
        << (top + bottom) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

    for (const SvgRefLine& r : ref_lines) {
        const double ry = py(r.y);
        out << "  <line x1=\"" << left << "\" y1=\"" << svg_num(ry) << "\" x2=\"" << right << "\" y2=\""
            << svg_num(ry) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"8 4\"/>\n";
        out << "  <text x=\"" << right - 4 << "\" y=\"" << svg_num(ry - 6)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << r.color
            << "\">" << escape_xml(r.name) << "</text>\n";
    }

    double legend_y = top + 10;
    for (const SvgSeries& s : series) {
        if (!s.points.empty()) {
            out << "  <polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.points.size(); i++) {
                if (i) out << " ";
                out << svg_num(px(s.points[i].first)) << "," << svg_num(py(s.points[i].second));
            }
            out << "\"/>\n";
        }
        out << "  <line x1=\"" << left + 12 << "\" y1=\"" << svg_num(legend_y) << "\" x2=\"" << left + 40
            << "\" y2=\"" << svg_num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"3\"/>\n";
        out << "  <text x=\"" << left + 46 << "\" y=\"" << svg_num(legend_y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(s.name) << "</text>\n";
        legend_y += 18;
    }
    out << "</svg>\n";
    return out.str();
}

// -------------------------------------------------------------- file helpers

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("io: cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("io: failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("io: cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace causalrl
