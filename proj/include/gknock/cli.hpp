#pragma once
#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include <gknock/io/csv.hpp>
#include <gknock/io/results.hpp>
#include <gknock/multitask.hpp>
#include <gknock/simulation.hpp>

namespace gknock {
namespace cli {

using io::json;

/// Everything a single invocation needs.
struct RunConfig
{
    std::string command;  // construct | filter | analyze | simulate-group-sparse | simulate-multitask
    std::string design, groups, response;
    std::string output = "-";
    std::string knockoffs_output;
    std::string csv_output;
    std::string config_file;
    std::string header = "auto";
    double q = 0.2;
    bool plus = false;
    bool normalize = true;
    bool log_transform = false;
    bool drop_incomplete = true;
    int min_feature_count = 3;
    std::string group_weights = "none";
    FilterConfig filter;

    sim::GroupSparseSimConfig group_sparse;
    sim::MultitaskSimConfig multitask;
    std::string sweep = "none";
    std::vector<double> sweep_values;
    std::vector<std::string> methods;
    unsigned threads = 0;
    bool paper_scale = false;

    variant_t variant() const { return plus ? variant_t::knockoff_plus : variant_t::knockoff; }

    json to_json() const
    {
        json j{{"command", command},
               {"q", q},
               {"variant", to_string(variant())},
               {"seed", filter.seed},
               {"grid_size", filter.grid_size},
               {"grid_min_ratio", filter.grid_min_ratio},
               {"kkt_tol", filter.path.solver.kkt_tol},
               {"max_iter", filter.path.solver.max_iter},
               {"active_tol", filter.path.active_tol},
               {"group_weights", group_weights},
               {"normalize", normalize},
               {"header", header},
               {"output", output}};
        if (!config_file.empty()) j["config"] = config_file;
        if (command == "construct" || command == "filter" || command == "analyze") {
            j["design"] = design;
        }
        if (command == "construct" || command == "filter") j["groups"] = groups;
        if (command == "filter" || command == "analyze") j["response"] = response;
        if (command == "construct") j["knockoffs_output"] = knockoffs_output;
        if (command == "analyze") {
            j["log_transform"] = log_transform;
            j["drop_incomplete_rows"] = drop_incomplete;
            j["min_feature_count"] = min_feature_count;
        }
        if (command.rfind("simulate", 0) == 0) {
            j["sweep"] = sweep;
            j["sweep_values"] = sweep_values;
            j["methods"] = methods;
            j["paper_scale"] = paper_scale;
            j["csv_output"] = csv_output;
            json s = json::object();
            const auto settings = command == "simulate-group-sparse"
                                      ? sim::settings_of(group_sparse)
                                      : sim::settings_of(multitask);
            for (const auto& [k, v] : settings) s[k] = v;
            j["base_settings"] = s;
            j["trials"] = command == "simulate-group-sparse" ? group_sparse.trials : multitask.trials;
        }
        return j;
    }
};

/// Flat key=value file; '#' starts a comment.
inline std::map<std::string, std::string> read_flat_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw usage_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw usage_error(path + ":" + std::to_string(ln) + ": expected key=value");
        }
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r\"");
            const auto b = s.find_last_not_of(" \t\r\"");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        out[key] = strip(line.substr(eq + 1));
    }
    return out;
}

namespace detail {

inline void add_solver_options(CLI::App& app, RunConfig& c)
{
    app.add_option("--q", c.q, "Target FDR level")->capture_default_str();
    app.add_flag("--plus", c.plus, "Use the knockoff+ threshold");
    app.add_option("--seed", c.filter.seed, "Seed for every random choice")->capture_default_str();
    app.add_option("--grid-size", c.filter.grid_size, "Number of lambda grid points")
        ->capture_default_str();
    app.add_option("--grid-min-ratio", c.filter.grid_min_ratio, "Smallest lambda / lambda_max")
        ->capture_default_str();
    app.add_option("--kkt-tol", c.filter.path.solver.kkt_tol, "Solver KKT tolerance")
        ->capture_default_str();
    app.add_option("--max-iter", c.filter.path.solver.max_iter, "Solver iterations per grid point")
        ->capture_default_str();
    app.add_option("--active-tol", c.filter.path.active_tol, "Group norm that counts as entered")
        ->capture_default_str();
    app.add_option("--group-weights", c.group_weights, "Penalty weights per group")
        ->check(CLI::IsMember({"none", "sqrt"}))
        ->capture_default_str();
    app.add_option("--output,-o", c.output, "Result JSON path ('-' for stdout)")
        ->capture_default_str();
    app.add_option("--config", c.config_file, "Flat key=value file with option defaults");
}

inline void add_input_options(CLI::App& app, RunConfig& c, bool groups, bool response)
{
    app.add_option("--design", c.design, "Design CSV (n rows, p columns)")->required();
    if (groups) app.add_option("--groups", c.groups, "Group id per column, one per line")->required();
    if (response) app.add_option("--response", c.response, "Response CSV")->required();
    app.add_option("--header", c.header, "Header row in CSV inputs")
        ->check(CLI::IsMember({"auto", "yes", "no"}))
        ->capture_default_str();
    app.add_flag("--normalize,!--no-normalize", c.normalize,
                 "Scale design columns to unit norm (default on)");
}

inline void add_sim_common(CLI::App& app, RunConfig& c, int& trials)
{
    add_solver_options(app, c);
    app.add_option("--trials", trials, "Trials per cell")->capture_default_str();
    app.add_option("--sweep", c.sweep, "Parameter to sweep")->capture_default_str();
    app.add_option("--sweep-values", c.sweep_values, "Override the swept values")->delimiter(',');
    app.add_option("--methods", c.methods, "Methods to run")->delimiter(',');
    app.add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
    app.add_option("--csv-output", c.csv_output, "Long-format per-trial CSV");
}

inline bool arg_present(const std::vector<std::string>& args, const std::string& flag)
{
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    if (flag == "--normalize") return arg_present(args, "--no-normalize");
    if (flag == "--drop-incomplete-rows") return arg_present(args, "--no-drop-incomplete-rows");
    return false;
}

} // namespace detail

/**
 * Parse a command line (without the program name). Values from --config fill
 * in options not given on the command line. Throws usage_error on bad input
 * and CLI::Success for --help (caller prints app help).
 */
inline RunConfig parse_config(std::vector<std::string> args, std::string* help = nullptr)
{
    RunConfig c;
    CLI::App app{"Group knockoff filter for FDR-controlled group selection", "gknock"};
    app.require_subcommand(1);

    auto* construct = app.add_subcommand("construct", "Build group knockoffs for a design");
    detail::add_input_options(*construct, c, true, false);
    detail::add_solver_options(*construct, c);
    construct->add_option("--knockoffs-output", c.knockoffs_output, "Knockoff matrix CSV path")
        ->required();

    auto* filter = app.add_subcommand("filter", "Run the group knockoff filter");
    detail::add_input_options(*filter, c, true, true);
    detail::add_solver_options(*filter, c);

    auto* analyze = app.add_subcommand("analyze", "Multitask knockoff analysis of a CSV data set");
    detail::add_input_options(*analyze, c, false, true);
    detail::add_solver_options(*analyze, c);
    analyze->add_flag("--log-transform", c.log_transform, "Natural log of the responses");
    analyze->add_flag("--drop-incomplete-rows,!--no-drop-incomplete-rows", c.drop_incomplete,
                      "Drop rows with missing values (default on)");
    analyze->add_option("--min-feature-count", c.min_feature_count,
                        "Drop features with fewer nonzero entries")
        ->capture_default_str();

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo FDR and power experiments");
    simulate->require_subcommand(1);
    auto* gs = simulate->add_subcommand("group-sparse", "Group-sparse regression setting");
    detail::add_sim_common(*gs, c, c.group_sparse.trials);
    gs->add_option("--n", c.group_sparse.n)->capture_default_str();
    gs->add_option("--p", c.group_sparse.p)->capture_default_str();
    gs->add_option("--group-size", c.group_sparse.group_size)->capture_default_str();
    gs->add_option("--k", c.group_sparse.k, "Number of signal groups")->capture_default_str();
    gs->add_option("--amplitude", c.group_sparse.amplitude)->capture_default_str();
    gs->add_option("--rho", c.group_sparse.rho, "Within-group correlation")->capture_default_str();
    gs->add_option("--gamma-factor", c.group_sparse.gamma_factor,
                   "Between-group correlation as a multiple of rho")
        ->capture_default_str();
    gs->add_flag("--paper-scale", c.paper_scale, "n=3000, p=1000, k=20 unless given");

    auto* mt = simulate->add_subcommand("multitask", "Multitask regression setting");
    detail::add_sim_common(*mt, c, c.multitask.trials);
    mt->add_option("--n", c.multitask.n)->capture_default_str();
    mt->add_option("--p", c.multitask.p)->capture_default_str();
    mt->add_option("--r", c.multitask.r, "Number of responses")->capture_default_str();
    mt->add_option("--k", c.multitask.k, "Number of nonzero rows")->capture_default_str();
    mt->add_option("--signal-scale", c.multitask.signal_scale, "Row norm (default 2 sqrt(r))");
    mt->add_option("--rho-x", c.multitask.rho_x, "Tapered design correlation")->capture_default_str();
    mt->add_option("--rho-y", c.multitask.rho_y, "Noise equicorrelation")->capture_default_str();
    mt->add_flag("--paper-scale", c.paper_scale, "Accepted for symmetry; defaults are already full scale");

    // config file values for options absent from the command line
    for (size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
        if (path.empty()) continue;
        std::vector<std::string> extra;
        for (const auto& [key, value] : read_flat_config(path)) {
            if (key == "config") continue;
            if (!detail::arg_present(args, "--" + key)) extra.push_back("--" + key + "=" + value);
        }
        args.insert(args.end(), extra.begin(), extra.end());
        break;
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        if (help) *help = app.help();
        throw;
    } catch (const CLI::CallForAllHelp&) {
        if (help) *help = app.help("", CLI::AppFormatMode::All);
        throw;
    } catch (const CLI::ParseError& e) {
        throw usage_error(std::string(e.get_name()) + ": " + e.what());
    }

    if (construct->parsed()) c.command = "construct";
    else if (filter->parsed()) c.command = "filter";
    else if (analyze->parsed()) c.command = "analyze";
    else if (gs->parsed()) c.command = "simulate-group-sparse";
    else if (mt->parsed()) c.command = "simulate-multitask";

    c.filter.weights = c.group_weights == "sqrt" ? weight_t::sqrt_size : weight_t::none;
    if (!(c.q > 0 && c.q < 1)) throw usage_error("--q must lie strictly between 0 and 1");
    if (c.filter.grid_size < 2) throw usage_error("--grid-size must be at least 2");
    if (!(c.filter.grid_min_ratio > 0 && c.filter.grid_min_ratio < 1)) {
        throw usage_error("--grid-min-ratio must lie in (0, 1)");
    }
    if (c.filter.path.solver.max_iter < 1) throw usage_error("--max-iter must be positive");
    if (!(c.filter.path.solver.kkt_tol > 0)) throw usage_error("--kkt-tol must be positive");

    if (c.command == "simulate-group-sparse" && c.paper_scale) {
        const auto paper = sim::GroupSparseSimConfig::paper_scale();
        if (gs->get_option("--n")->count() == 0) c.group_sparse.n = paper.n;
        if (gs->get_option("--p")->count() == 0) c.group_sparse.p = paper.p;
        if (gs->get_option("--k")->count() == 0) c.group_sparse.k = paper.k;
    }
    c.group_sparse.q = c.multitask.q = c.q;
    c.group_sparse.seed = c.multitask.seed = c.filter.seed;
    if (c.command.rfind("simulate", 0) == 0) {
        const std::string setting = c.command == "simulate-group-sparse" ? "group-sparse" : "multitask";
        if (c.sweep_values.empty()) {
            c.sweep_values = sim::default_sweep_values(setting, c.sweep, c.paper_scale);
        }
        if (c.methods.empty()) {
            for (auto m : setting == "group-sparse" ? sim::default_group_sparse_methods()
                                                    : sim::default_multitask_methods())
                c.methods.push_back(sim::to_string(m));
        }
        for (const auto& m : c.methods) {
            const auto method = sim::parse_method(m);
            if (sim::is_group_sparse_method(method) != (setting == "group-sparse")) {
                throw usage_error("method " + m + " does not apply to the " + setting + " setting");
            }
        }
    }
    return c;
}

namespace detail {

inline io::header_mode header_of(const RunConfig& c)
{
    if (c.header == "yes") return io::header_mode::present;
    if (c.header == "no") return io::header_mode::absent;
    return io::header_mode::automatic;
}

inline json construct_command(const RunConfig& c)
{
    const auto table = io::read_matrix_csv(c.design, header_of(c));
    GroupedDesign design = new_grouped_design(table.values, io::read_groups(c.groups));
    if (c.normalize) design = normalize_columns(design);
    const auto aug = construct_group_knockoffs(design, c.filter.seed, EquivariantS{c.filter.construction});

    std::vector<std::string> names;
    for (const auto& nm : table.names) names.push_back(nm + "_knockoff");
    io::write_matrix_csv(c.knockoffs_output, aug.X_tilde, names);

    json sizes = json::array();
    for (auto s : design.group_sizes()) sizes.push_back(s);
    return json{{"n", design.n()},
                {"p", design.p()},
                {"m", design.m()},
                {"groups", design.group_ids()},
                {"group_sizes", sizes},
                {"gamma", aug.gamma},
                {"knockoffs_path", c.knockoffs_output},
                {"diagnostics",
                 {{"gram_deviation", aug.gram_deviation},
                  {"cross_deviation", aug.cross_deviation},
                  {"clipped_eigenvalue", aug.clipped_eigenvalue},
                  {"conditions", io::to_json(verify_knockoff_conditions(design, aug, 1e-8))}}}};
}

inline json filter_command(const RunConfig& c)
{
    const auto table = io::read_matrix_csv(c.design, header_of(c));
    GroupedDesign design = new_grouped_design(table.values, io::read_groups(c.groups));
    if (c.normalize) design = normalize_columns(design);
    const auto yt = io::read_matrix_csv(c.response, header_of(c));
    if (yt.cols() != 1) throw validation_error("response CSV must have exactly one column");
    const Response y(yt.values.col(0));

    const auto run = run_group_knockoff_filter(design, y, c.q, c.variant(), c.filter);
    json out = io::to_json(run.result, design.group_ids());
    out["selected_groups"] = out["selected"];
    out["gamma"] = run.knockoffs.gamma;
    out["n"] = design.n();
    out["p"] = design.p();
    out["m"] = design.m();
    out["diagnostics"] = io::path_diagnostics(run.statistics.path, run.statistics.lambda_max);
    out["diagnostics"]["gram_deviation"] = run.knockoffs.gram_deviation;
    out["diagnostics"]["cross_deviation"] = run.knockoffs.cross_deviation;
    return out;
}

inline json analyze_command(const RunConfig& c)
{
    const auto xt = io::read_matrix_csv(c.design, header_of(c), true);
    const auto yt = io::read_matrix_csv(c.response, header_of(c), true);
    if (xt.rows() != yt.rows()) {
        throw validation_error("design has " + std::to_string(xt.rows()) + " rows but response has "
                               + std::to_string(yt.rows()));
    }
    std::vector<index_t> keep_rows;
    for (index_t i = 0; i < xt.rows(); ++i) {
        const bool complete = xt.values.row(i).allFinite() && yt.values.row(i).allFinite();
        if (complete) keep_rows.push_back(i);
        else if (!c.drop_incomplete) {
            throw validation_error("row " + std::to_string(i + 1)
                                   + " has missing values and row dropping is disabled");
        }
    }
    mat_t Y(keep_rows.size(), yt.cols());
    mat_t Xr(keep_rows.size(), xt.cols());
    for (size_t a = 0; a < keep_rows.size(); ++a) {
        Y.row(a) = yt.values.row(keep_rows[a]);
        Xr.row(a) = xt.values.row(keep_rows[a]);
    }
    if (c.log_transform) {
        if ((Y.array() <= 0).any()) {
            throw validation_error("log transform needs strictly positive responses");
        }
        Y = Y.array().log().matrix();
    }
    std::vector<index_t> keep_cols;
    for (index_t j = 0; j < Xr.cols(); ++j) {
        const auto count = (Xr.col(j).array() != 0.0).count();
        if (count >= c.min_feature_count && count > 0) keep_cols.push_back(j);
    }
    if (keep_cols.empty()) throw validation_error("no features left after the count filter");
    mat_t X(Xr.rows(), keep_cols.size());
    std::vector<std::string> labels;
    for (size_t b = 0; b < keep_cols.size(); ++b) {
        X.col(b) = Xr.col(keep_cols[b]);
        labels.push_back(xt.names.empty() ? std::to_string(keep_cols[b] + 1) : xt.names[keep_cols[b]]);
    }
    if (c.normalize) {
        for (index_t j = 0; j < X.cols(); ++j) X.col(j).normalize();
    }
    const auto res = run_multitask_knockoff(X, Y, c.q, c.variant(), c.filter);
    json out = io::to_json(res.inner, labels);
    out["selected_features"] = out["selected"];
    out["gamma"] = res.knockoffs.gamma;
    out["sample_sizes"] = {{"rows_input", xt.rows()},
                           {"rows_used", X.rows()},
                           {"features_input", xt.cols()},
                           {"features_used", X.cols()},
                           {"responses", Y.cols()}};
    json kept = json::array();
    for (auto j : keep_cols) kept.push_back(j + 1);
    out["kept_feature_columns"] = kept;
    out["diagnostics"] = io::path_diagnostics(res.path, res.lambda_max);
    return out;
}

template <class Config>
inline json simulate_command(const RunConfig& c, const Config& base)
{
    const auto sweep = sim::make_sweep(base, c.sweep, c.sweep_values);
    std::vector<sim::Method> methods;
    for (const auto& m : c.methods) methods.push_back(sim::parse_method(m));
    const auto report = sim::run_experiment(sweep, methods, base.trials, c.filter, c.threads);
    if (!c.csv_output.empty()) io::write_simulation_csv(c.csv_output, report);
    json out = io::to_json(report);
    out["csv_output"] = c.csv_output;
    return out;
}

} // namespace detail

/// Execute a parsed configuration and write its envelope.
inline io::ResultEnvelope execute(const RunConfig& c)
{
    const auto start = std::chrono::steady_clock::now();
    io::ResultEnvelope env;
    env.command = c.command;
    env.invocation = c.to_json();
    if (c.command == "construct") env.result = detail::construct_command(c);
    else if (c.command == "filter") env.result = detail::filter_command(c);
    else if (c.command == "analyze") env.result = detail::analyze_command(c);
    else if (c.command == "simulate-group-sparse") env.result = detail::simulate_command(c, c.group_sparse);
    else if (c.command == "simulate-multitask") env.result = detail::simulate_command(c, c.multitask);
    else throw usage_error("no command given");
    env.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_results(env, c.output);
    return env;
}

/// Process entry point; returns the exit code (0 ok, 2 usage, 3 data, 4 numerical).
inline int run(const std::vector<std::string>& args, std::ostream& err = std::cerr)
{
    std::string help;
    try {
        execute(parse_config(args, &help));
        return 0;
    } catch (const CLI::Success&) {
        std::cout << help;
        return 0;
    } catch (const error& e) {
        err << "gknock: " << e.what() << '\n';
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "gknock: " << e.what() << '\n';
        return 4;
    }
}

} // namespace cli
} // namespace gknock
