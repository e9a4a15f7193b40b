#pragma once
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>
#include <gknock/filter.hpp>
#include <gknock/knockoff_construction.hpp>
#include <gknock/multitask.hpp>
#include <gknock/simulation.hpp>

namespace gknock {
namespace io {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

/**
 * Envelope written by every CLI command. It carries the invocation echo
 * and timing next to the command's payload.
 */
struct ResultEnvelope
{
    int schema = schema_version;
    std::string command;
    json invocation = json::object();
    double seconds = 0.0;
    json result = json::object();

    bool operator==(const ResultEnvelope&) const = default;
};

inline json to_json(const ResultEnvelope& e)
{
    return json{{"schema_version", e.schema},
                {"command", e.command},
                {"invocation", e.invocation},
                {"timing", {{"seconds", e.seconds}}},
                {"result", e.result}};
}

inline ResultEnvelope envelope_from_json(const json& j)
{
    if (!j.contains("schema_version")) throw validation_error("result file has no schema_version");
    ResultEnvelope e;
    e.schema = j.at("schema_version").get<int>();
    e.command = j.at("command").get<std::string>();
    e.invocation = j.at("invocation");
    e.seconds = j.at("timing").at("seconds").get<double>();
    e.result = j.at("result");
    return e;
}

/// Pretty JSON to path, or stdout when path is "-" or empty.
inline void write_results(const ResultEnvelope& e, const std::string& path)
{
    const std::string text = to_json(e).dump(2) + "\n";
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw io_error("failed writing '" + path + "'");
}

inline ResultEnvelope read_results(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    try {
        return envelope_from_json(json::parse(in));
    } catch (const json::exception& ex) {
        throw validation_error(path + ": " + ex.what());
    }
}

inline json indices_1based(const std::vector<index_t>& idx)
{
    json a = json::array();
    for (auto i : idx) a.push_back(i + 1);
    return a;
}

inline json to_json(const ConditionReport& r)
{
    return json{{"gram_deviation", r.gram_deviation},
                {"cross_deviation", r.cross_deviation},
                {"off_block_max", r.off_block_max},
                {"s_min_eigenvalue", r.s_min_eigenvalue},
                {"two_sigma_minus_s_min_eigenvalue", r.two_sigma_minus_s_min_eigenvalue},
                {"tol", r.tol},
                {"pass", r.pass}};
}

/// Selection payload; labels name each statistic's group or feature.
inline json to_json(const FilterResult& r, const std::vector<std::string>& labels)
{
    json selected = json::array();
    for (auto i : r.selected) selected.push_back(labels.at(i));
    json W = json::array();
    for (size_t i = 0; i < r.W.size(); ++i) W.push_back({{"id", labels.at(i)}, {"W", r.W[i]}});
    return json{{"variant", to_string(r.variant)},
                {"q", r.q},
                {"threshold", r.threshold ? json(*r.threshold) : json(nullptr)},
                {"fdp_estimate", r.fdp_estimate},
                {"selected", selected},
                {"selected_indices", indices_1based(r.selected)},
                {"W", W}};
}

inline json path_diagnostics(const PathResult& p, double lambda_max)
{
    int max_it = 0;
    double max_kkt = 0.0;
    for (const auto& s : p.stats) {
        max_it = std::max(max_it, s.iterations);
        max_kkt = std::max(max_kkt, s.kkt);
    }
    return json{{"lambda_max", lambda_max},
                {"grid_points_solved", p.stats.size()},
                {"grid_points_not_converged", p.non_converged},
                {"max_iterations", max_it},
                {"max_kkt_residual", max_kkt}};
}

inline std::string csv_number(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Long-format table: one row per (cell, trial, method).
inline void write_simulation_csv(std::ostream& out, const sim::SimulationReport& rep)
{
    out << "setting,cell";
    if (!rep.cells.empty())
        for (const auto& [k, v] : rep.cells[0]) out << ',' << k;
    out << ",trial,method,fdp,power,n_selected,threshold,gamma,non_converged,failed\n";
    for (const auto& r : rep.records) {
        out << rep.setting << ',' << r.cell;
        for (const auto& [k, v] : rep.cells[r.cell]) out << ',' << csv_number(v);
        out << ',' << r.trial << ',' << sim::to_string(r.method) << ',' << csv_number(r.fdp) << ','
            << csv_number(r.power) << ',' << r.n_selected << ',' << csv_number(r.threshold) << ','
            << csv_number(r.gamma) << ',' << r.non_converged << ',' << (r.failed ? 1 : 0) << '\n';
    }
}

inline void write_simulation_csv(const std::string& path, const sim::SimulationReport& rep)
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    write_simulation_csv(out, rep);
    if (!out) throw io_error("failed writing '" + path + "'");
}

inline json to_json(const sim::SimulationReport& rep)
{
    json cells = json::array();
    for (index_t c = 0; c < static_cast<index_t>(rep.cells.size()); ++c) {
        json settings = json::object();
        for (const auto& [k, v] : rep.cells[c]) settings[k] = v;
        json methods = json::object();
        for (auto m : rep.methods) {
            const auto& s = rep.summary(c, m);
            methods[sim::to_string(m)] = json{{"trials", s.trials},
                                              {"failures", s.failures},
                                              {"flagged", s.flagged},
                                              {"mean_fdp", s.mean_fdp},
                                              {"se_fdp", s.se_fdp},
                                              {"mean_power", s.mean_power},
                                              {"se_power", s.se_power},
                                              {"mean_selected", s.mean_selected}};
        }
        cells.push_back({{"cell", c}, {"settings", settings}, {"methods", methods}});
    }
    return json{{"setting", rep.setting}, {"cells", cells}};
}

} // namespace io
} // namespace gknock
