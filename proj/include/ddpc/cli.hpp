#pragma once

// Command implementations behind the `ddpc` binary: validate (schema +
// derived quantities, no simulation), run (one controller, CSV + metrics),
// and compare (all configured controllers on identical streams, comparison
// table + combined plot data). All file writes are atomic (tmp + rename).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "deepc.hpp"
#include "harness.hpp"
#include "koopman.hpp"
#include "mfapc.hpp"

namespace ddpc {

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_dir;      // overrides config output_dir
    std::optional<std::uint64_t> seed;       // overrides config seed
    bool quiet = false;
};

namespace clidetail {

// Shortest round-trip decimal form; deterministic across runs.
inline std::string csv_num(double v) { return config_json(v).dump(); }

inline std::string table_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw ConfigError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline Trajectory trajectory_tail(Trajectory tr, int count) {
    while (tr.length() > count) tr.pop_front();
    return tr;
}

// Column labels get channel suffixes only for multichannel signals.
inline void push_names(std::vector<std::string>& cols, const std::string& base, int channels) {
    if (channels == 1) {
        cols.push_back(base);
        return;
    }
    for (int i = 0; i < channels; ++i) cols.push_back(base + "_" + std::to_string(i));
}

inline std::string run_csv(const RunResult& res) {
    std::vector<std::string> cols;
    cols.push_back("t");
    push_names(cols, "r", res.r.channels());
    push_names(cols, "u_requested", res.u_requested.channels());
    push_names(cols, "u_applied", res.u_applied.channels());
    push_names(cols, "y", res.y.channels());
    push_names(cols, "e", res.r.channels());
    cols.push_back("solve_time");

    std::ostringstream os;
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (int k = 0; k < res.steps(); ++k) {
        os << csv_num(res.t_axis.sample(k)(0));
        const Eigen::VectorXd r = res.r.sample(k);
        const Eigen::VectorXd y = res.y.sample(k);
        for (const auto& v : {r, res.u_requested.sample(k), res.u_applied.sample(k), y,
                              Eigen::VectorXd(r - y)})
            for (Eigen::Index i = 0; i < v.size(); ++i) os << "," << csv_num(v(i));
        os << "," << csv_num(res.solve_time_s[static_cast<std::size_t>(k)]) << "\n";
    }
    return os.str();
}

inline std::string diag_csv(const RunResult& res) {
    std::ostringstream os;
    os << "t," << res.diag_header << "\n";
    for (int k = 0; k < static_cast<int>(res.diag_rows.size()); ++k)
        os << csv_num(res.t_axis.sample(k)(0)) << "," << res.diag_rows[static_cast<std::size_t>(k)]
           << "\n";
    return os.str();
}

inline config_json metrics_json(const RunResult& res, const std::string& controller) {
    config_json m;
    m["controller"] = controller;
    m["Absolute integral error (deg)"] = res.metrics.abs_integral_error_deg;
    m["Minimum absolute error (deg)"] = res.metrics.min_abs_error_deg;
    m["Maximum absolute input (Nm)"] = res.metrics.max_abs_input;
    m["Optimization time (s)"] = res.metrics.mean_opt_time_s;
    m["Absolute integral error, dt-weighted (deg*s)"] = res.metrics.aie_dt_deg;
    m["min_abs_error_definition"] = "minimum |r - y| over the final 25% of the run";
    m["steps"] = res.steps();
    m["clamped_steps"] = res.clamped_steps.size();
    m["seed"] = res.seed;
    m["completed"] = res.completed;
    if (!res.completed) m["abort_reason"] = res.abort_reason;
    return m;
}

inline std::string display_name(const std::string& key) {
    if (key == "mfapc") return "MFAPC-CFDL";
    if (key == "deepc") return "DeePC";
    return "WKPC";
}

}  // namespace clidetail

// Builds the offline dataset shared by the data-driven controllers and trims
// it to one controller's configured window (most recent samples kept).
inline Excitation cli_excitation(const Config& cfg, const Plant& plant) {
    ExcitationSpec e;
    e.length_s = cfg.excitation.length_s;
    e.dt = cfg.dt;
    e.substeps = cfg.substeps;
    e.amplitude = cfg.excitation.amplitude;
    e.u_min = cfg.u_min;
    e.u_max = cfg.u_max;
    e.seed = cfg.excitation.seed;
    return offline_excitation(plant, e);
}

inline RunResult run_controller(const Config& cfg, const std::string& which) {
    using clidetail::trajectory_tail;
    const auto plant = build_plant(cfg.plant);
    const Reference ref = cfg.reference.build();

    RunSpec spec;
    spec.duration_s = cfg.duration_s;
    spec.dt = cfg.dt;
    spec.substeps = cfg.substeps;
    spec.u_min = cfg.u_min;
    spec.u_max = cfg.u_max;
    spec.scenario = cfg.scenario;
    spec.seed = cfg.seed;
    spec.outputs_are_angles = cfg.plant.kind == PlantSpec::Kind::pendulum;

    if (which == "mfapc") {
        MFAPCController ctrl(*cfg.mfapc);
        return run_closed_loop(plant, ctrl, ref, spec);
    }
    if (which == "deepc") {
        const Excitation data = cli_excitation(cfg, *plant);
        const int t = cfg.deepc->data_samples();
        DeePCController ctrl(*cfg.deepc, trajectory_tail(data.u, t), trajectory_tail(data.y, t));
        return run_closed_loop(plant, ctrl, ref, spec);
    }
    const Excitation data = cli_excitation(cfg, *plant);
    const int t = cfg.wkpc->data_samples();
    WKPCController ctrl(*cfg.wkpc, trajectory_tail(data.u, t), trajectory_tail(data.y, t),
                        trajectory_tail(data.x, t));
    return run_closed_loop(plant, ctrl, ref, spec);
}

namespace clidetail {

inline void write_run_artifacts(const std::filesystem::path& dir, const std::string& which,
                                const RunResult& res) {
    atomic_write_file(dir / (which + "_run.csv"), run_csv(res));
    if (!res.diag_header.empty()) atomic_write_file(dir / (which + "_diag.csv"), diag_csv(res));
    atomic_write_file(dir / (which + "_metrics.json"), metrics_json(res, which).dump(2) + "\n");
}

inline void print_metrics(std::ostream& os, const Metrics& m) {
    os << "Absolute integral error (deg): " << table_num(m.abs_integral_error_deg) << "\n"
       << "Minimum absolute error (deg): " << table_num(m.min_abs_error_deg) << "\n"
       << "Maximum absolute input (Nm): " << table_num(m.max_abs_input) << "\n"
       << "Optimization time (s): " << table_num(m.mean_opt_time_s) << "\n";
}

struct CompareCell {
    bool ok = false;
    std::string reason;  // set when !ok
    Metrics metrics;
};

inline std::string comparison_table(const std::vector<std::string>& names,
                                    const std::vector<CompareCell>& cells) {
    // Rows mirror the benchmark metrics; one column per configured controller.
    const std::vector<std::string> row_names = {
        "Absolute integral error (deg)", "Minimum absolute error (deg)",
        "Maximum absolute input (Nm)", "Optimization time (s)",
        "Absolute integral error, dt-weighted (deg*s)"};
    const auto row_value = [](const Metrics& m, std::size_t row) {
        switch (row) {
            case 0: return m.abs_integral_error_deg;
            case 1: return m.min_abs_error_deg;
            case 2: return m.max_abs_input;
            case 3: return m.mean_opt_time_s;
            default: return m.aie_dt_deg;
        }
    };

    std::size_t label_w = 0;
    for (const auto& r : row_names) label_w = std::max(label_w, r.size());
    std::vector<std::vector<std::string>> body(row_names.size());
    std::vector<std::string> headers;
    std::vector<std::size_t> col_w;
    for (std::size_t c = 0; c < names.size(); ++c) {
        headers.push_back(display_name(names[c]));
        std::size_t w = headers.back().size();
        for (std::size_t r = 0; r < row_names.size(); ++r) {
            body[r].push_back(cells[c].ok ? table_num(row_value(cells[c].metrics, r))
                                          : std::string("failed"));
            w = std::max(w, body[r].back().size());
        }
        col_w.push_back(w);
    }

    std::ostringstream os;
    os << std::string(label_w, ' ');
    for (std::size_t c = 0; c < headers.size(); ++c)
        os << "  " << std::string(col_w[c] - headers[c].size(), ' ') << headers[c];
    os << "\n";
    for (std::size_t r = 0; r < row_names.size(); ++r) {
        os << row_names[r] << std::string(label_w - row_names[r].size(), ' ');
        for (std::size_t c = 0; c < body[r].size(); ++c)
            os << "  " << std::string(col_w[c] - body[r][c].size(), ' ') << body[r][c];
        os << "\n";
    }
    for (std::size_t c = 0; c < names.size(); ++c)
        if (!cells[c].ok) os << headers[c] << " failed: " << cells[c].reason << "\n";
    return os.str();
}

// Combined plot-ready series: tracking, inputs, and input increments for
// every successful run, on the shared time axis.
inline std::string plot_csv(const std::vector<std::string>& names,
                            const std::vector<const RunResult*>& runs) {
    std::vector<std::string> cols = {"t"};
    const RunResult& first = *runs.front();
    push_names(cols, "r", first.r.channels());
    for (std::size_t c = 0; c < names.size(); ++c)
        push_names(cols, "y_" + names[c], runs[c]->y.channels());
    for (std::size_t c = 0; c < names.size(); ++c)
        push_names(cols, "u_" + names[c], runs[c]->u_applied.channels());
    for (std::size_t c = 0; c < names.size(); ++c)
        push_names(cols, "du_" + names[c], runs[c]->u_applied.channels());

    std::ostringstream os;
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (int k = 0; k < first.steps(); ++k) {
        os << csv_num(first.t_axis.sample(k)(0));
        const Eigen::VectorXd r = first.r.sample(k);
        for (Eigen::Index i = 0; i < r.size(); ++i) os << "," << csv_num(r(i));
        for (const RunResult* run : runs) {
            const Eigen::VectorXd y = run->y.sample(k);
            for (Eigen::Index i = 0; i < y.size(); ++i) os << "," << csv_num(y(i));
        }
        for (const RunResult* run : runs) {
            const Eigen::VectorXd u = run->u_applied.sample(k);
            for (Eigen::Index i = 0; i < u.size(); ++i) os << "," << csv_num(u(i));
        }
        for (const RunResult* run : runs) {
            const Eigen::VectorXd u = run->u_applied.sample(k);
            const Eigen::VectorXd prev = k > 0
                                             ? Eigen::VectorXd(run->u_applied.sample(k - 1))
                                             : Eigen::VectorXd(Eigen::VectorXd::Zero(u.size()));
            for (Eigen::Index i = 0; i < u.size(); ++i) os << "," << csv_num(u(i) - prev(i));
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace clidetail

inline int cmd_validate(const CliOptions& opt) {
    try {
        const Config cfg = load_config_file(opt.config_path);
        if (!opt.quiet) {
            std::cout << "config ok: " << opt.config_path << "\n";
            if (cfg.plant.kind == PlantSpec::Kind::pendulum) {
                const auto& p = cfg.plant.pendulum;
                std::cout << "plant: pendulum (mass " << p.mass << " kg, radius " << p.radius
                          << " m, gravity " << p.gravity << ", friction " << p.friction << ")\n";
            } else {
                std::cout << "plant: lti (order " << cfg.plant.lti.A.rows() << ", "
                          << (cfg.plant.lti.discrete ? "discrete" : "continuous") << ")\n";
            }
            std::cout << "loop: " << cfg.duration_s << " s at dt " << cfg.dt << " ("
                      << samples_from_seconds(cfg.duration_s, cfg.dt, "loop.duration_s")
                      << " samples), substeps " << cfg.substeps << "\n";
            std::cout << "excitation: " << cfg.excitation.length_s << " s ("
                      << samples_from_seconds(cfg.excitation.length_s, cfg.dt,
                                              "excitation.length_s")
                      << " samples), amplitude " << cfg.excitation.amplitude << ", seed "
                      << cfg.excitation.seed << "\n";
            for (const auto& d : derived_quantities(cfg))
                std::cout << format_derived(d) << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_run(const CliOptions& opt) {
    using namespace clidetail;
    try {
        Config cfg = load_config_file(opt.config_path);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.out_dir) cfg.output_dir = *opt.out_dir;
        if (cfg.controller_count() != 1) {
            std::string found;
            for (const auto& n : cfg.controller_names()) found += (found.empty() ? "" : ", ") + n;
            throw ConfigError(
                "config: controllers: run expects exactly one controller block, found " +
                std::to_string(cfg.controller_count()) + " (" + found + ")");
        }
        const std::string which = cfg.controller_names().front();
        const RunResult res = run_controller(cfg, which);
        write_run_artifacts(cfg.output_dir, which, res);
        if (!opt.quiet) print_metrics(std::cout, res.metrics);
        if (!res.completed) {
            std::cerr << "error: run aborted after " << res.steps() << " steps: "
                      << res.abort_reason << "\n";
            return 2;
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_compare(const CliOptions& opt) {
    using namespace clidetail;
    try {
        Config cfg = load_config_file(opt.config_path);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.out_dir) cfg.output_dir = *opt.out_dir;

        const std::vector<std::string> names = cfg.controller_names();
        std::vector<CompareCell> cells(names.size());
        std::vector<std::optional<RunResult>> results(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            try {
                RunResult res = run_controller(cfg, names[i]);
                write_run_artifacts(cfg.output_dir, names[i], res);
                cells[i].ok = res.completed;
                cells[i].metrics = res.metrics;
                if (!res.completed)
                    cells[i].reason = "aborted after " + std::to_string(res.steps()) +
                                      " steps: " + res.abort_reason;
                results[i] = std::move(res);
            } catch (const Error& e) {
                cells[i].reason = e.what();
            }
        }

        const std::string table = comparison_table(names, cells);
        atomic_write_file(std::filesystem::path(cfg.output_dir) / "comparison_table.txt", table);

        std::vector<std::string> plot_names;
        std::vector<const RunResult*> plot_runs;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (cells[i].ok) {
                plot_names.push_back(names[i]);
                plot_runs.push_back(&*results[i]);
            }
        if (!plot_runs.empty())
            atomic_write_file(std::filesystem::path(cfg.output_dir) / "plot_data.csv",
                              plot_csv(plot_names, plot_runs));

        if (!opt.quiet) std::cout << table;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (!cells[i].ok)
                std::cerr << "error: " << names[i] << " failed: " << cells[i].reason << "\n";
        const bool all_ok =
            std::all_of(cells.begin(), cells.end(), [](const CompareCell& c) { return c.ok; });
        return all_ok ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace ddpc
