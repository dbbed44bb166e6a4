#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "ddpc/controller.hpp"
#include "ddpc/errors.hpp"
#include "ddpc/plants.hpp"
#include "ddpc/rng.hpp"
#include "ddpc/signals.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

constexpr double kDegPerRad = 180.0 / M_PI;

enum class AngleUnit { radians, degrees };

// Piecewise-constant reference over the whole run (and beyond, so horizon
// lookahead near the end stays defined). Values are stored in radians when
// built with a degree tag.
class Reference {
public:
    static Reference constant(double value, AngleUnit unit = AngleUnit::radians) {
        return Reference({{0.0, convert(value, unit)}});
    }

    static Reference step(double at_s, double before, double after,
                          AngleUnit unit = AngleUnit::radians) {
        return Reference({{-std::numeric_limits<double>::infinity(), convert(before, unit)},
                          {at_s, convert(after, unit)}});
    }

    // Segments (start_time_s, value); each value holds from its start time
    // until the next segment. Times must be strictly increasing.
    static Reference piecewise(std::vector<std::pair<double, double>> segments,
                               AngleUnit unit = AngleUnit::radians) {
        if (segments.empty()) throw ArgumentError("Reference: no segments");
        for (std::size_t i = 1; i < segments.size(); ++i)
            if (!(segments[i].first > segments[i - 1].first))
                throw ArgumentError("Reference: segment times must increase, got " +
                                    format_double(segments[i - 1].first) + " then " +
                                    format_double(segments[i].first));
        for (auto& s : segments) s.second = convert(s.second, unit);
        return Reference(std::move(segments));
    }

    double value(double t) const {
        double v = segments_.front().second;
        for (const auto& s : segments_) {
            if (t >= s.first) v = s.second;
            else break;
        }
        return v;
    }

    // Targets for the n predicted outputs after tick t_index: columns hold
    // r at times (t_index + 1 + j) * dt, broadcast over l channels.
    Eigen::MatrixXd window(int t_index, int n, double dt, int l = 1) const {
        Eigen::MatrixXd w(l, n);
        for (int j = 0; j < n; ++j)
            w.col(j).setConstant(value((t_index + 1 + j) * dt));
        return w;
    }

    const std::vector<std::pair<double, double>>& segments() const { return segments_; }

private:
    explicit Reference(std::vector<std::pair<double, double>> segments)
        : segments_(std::move(segments)) {}

    static double convert(double v, AngleUnit unit) {
        return unit == AngleUnit::degrees ? v / kDegPerRad : v;
    }

    std::vector<std::pair<double, double>> segments_;
};

struct Metrics {
    double abs_integral_error_deg = 0.0;  // fixed-order per-sample sum of |e|
    double aie_dt_deg = 0.0;              // the dt-weighted variant
    double min_abs_error_deg = 0.0;       // over the final quarter of the run
    double max_abs_input = 0.0;
    double mean_opt_time_s = 0.0;
};

// Error metrics are reported in degrees; pass radians = false when the output
// channel is not an angle (values are then taken as already converted).
// Multi-channel errors reduce per sample by the l1 norm, inputs by max-abs.
inline Metrics compute_metrics(const Trajectory& r, const Trajectory& y,
                               const Trajectory& u_applied,
                               const std::vector<double>& solve_time_s,
                               bool radians = true) {
    const int len = r.length();
    if (len < 1) throw DataError("compute_metrics: empty series");
    if (y.length() != len || u_applied.length() != len ||
        static_cast<int>(solve_time_s.size()) != len)
        throw DimensionError("compute_metrics: series lengths differ: r " + std::to_string(len) +
                             ", y " + std::to_string(y.length()) + ", u " +
                             std::to_string(u_applied.length()) + ", timing " +
                             std::to_string(solve_time_s.size()));
    const double scale = radians ? kDegPerRad : 1.0;

    Metrics m;
    // Forward summation, no reordering: exact recomputability matters more
    // than the last bits of accuracy here.
    for (int k = 0; k < len; ++k)
        m.abs_integral_error_deg += (r.sample(k) - y.sample(k)).lpNorm<1>() * scale;
    m.aie_dt_deg = m.abs_integral_error_deg * r.dt();

    const int tail_start = len - std::max(1, len / 4);
    double min_err = std::numeric_limits<double>::infinity();
    for (int k = tail_start; k < len; ++k)
        min_err = std::min(min_err, (r.sample(k) - y.sample(k)).lpNorm<1>() * scale);
    m.min_abs_error_deg = min_err;

    for (int k = 0; k < len; ++k)
        m.max_abs_input = std::max(m.max_abs_input,
                                   u_applied.sample(k).lpNorm<Eigen::Infinity>());

    double t_sum = 0.0;
    for (double t : solve_time_s) t_sum += t;
    m.mean_opt_time_s = t_sum / len;
    return m;
}

struct RunSpec {
    double duration_s = 20.0;
    double dt = 0.1;
    int substeps = 10;
    // Actuator box the harness clamps requested inputs into.
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x0;  // empty: plant default initial state
    Scenario scenario;
    std::uint64_t seed = 0;
    bool outputs_are_angles = true;  // degree conversion in metrics

    int steps() const { return samples_from_seconds(duration_s, dt, "RunSpec: duration"); }
};

struct RunResult {
    Trajectory t_axis{1, 0.1};  // holds k*dt for convenience in CSV emission
    Trajectory r{1, 0.1}, u_requested{1, 0.1}, u_applied{1, 0.1}, y{1, 0.1};
    std::vector<double> solve_time_s;
    std::vector<int> clamped_steps;  // ticks where the request left the box
    std::string diag_header;
    std::vector<std::string> diag_rows;
    Metrics metrics;
    std::uint64_t seed = 0;
    bool completed = false;
    std::string abort_reason;  // set when !completed

    int steps() const { return r.length(); }
};

// One closed-loop experiment. Per tick: read y, ask the controller for an
// input given the upcoming reference window, clamp it to the actuator box
// (logged), advance the plant one period, then hand the controller the
// same-tick (u_applied, y, x) triple. Only the controller call is timed.
inline RunResult run_closed_loop(std::shared_ptr<const Plant> plant, Controller& ctrl,
                                 const Reference& reference, const RunSpec& spec) {
    const int steps = spec.steps();
    const int m = plant->input_dim(), l = plant->output_dim();
    if (ctrl.input_dim() != m || ctrl.output_dim() != l)
        throw DimensionError("run_closed_loop: controller is " +
                             std::to_string(ctrl.input_dim()) + "x" +
                             std::to_string(ctrl.output_dim()) + ", plant is " +
                             std::to_string(m) + "x" + std::to_string(l));

    RunResult res;
    res.seed = spec.seed;
    res.t_axis = Trajectory(1, spec.dt);
    res.r = Trajectory(l, spec.dt);
    res.u_requested = Trajectory(m, spec.dt);
    res.u_applied = Trajectory(m, spec.dt);
    res.y = Trajectory(l, spec.dt);
    res.diag_header = ctrl.diag_header();

    Simulator sim(plant, spec.scenario, spec.seed, spec.dt, spec.substeps);
    Eigen::VectorXd x = spec.x0.size() > 0 ? spec.x0 : plant->default_initial_state();
    if (x.size() != plant->state_dim())
        throw DimensionError("run_closed_loop: initial state has dim " +
                             std::to_string(x.size()) + ", plant expects " +
                             std::to_string(plant->state_dim()));
    Eigen::VectorXd y = sim.measure(x);

    try {
        for (int k = 0; k < steps; ++k) {
            const Eigen::MatrixXd window = reference.window(k, ctrl.horizon(), spec.dt, l);

            const auto begin = std::chrono::steady_clock::now();
            const Eigen::VectorXd u_req = ctrl.step(y, window);
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
            if (u_req.size() != m)
                throw DimensionError("run_closed_loop: controller returned " +
                                     std::to_string(u_req.size()) + " input channels, plant has " +
                                     std::to_string(m));

            const Eigen::VectorXd u_app =
                u_req.cwiseMax(spec.u_min).cwiseMin(spec.u_max);
            if (u_app != u_req) res.clamped_steps.push_back(k);

            res.t_axis.push_back(k * spec.dt);
            res.r.push_back(Eigen::VectorXd::Constant(l, reference.value(k * spec.dt)));
            res.u_requested.push_back(u_req);
            res.u_applied.push_back(u_app);
            res.y.push_back(y);
            res.solve_time_s.push_back(elapsed);
            res.diag_rows.push_back(ctrl.diag_row());

            auto [x_next, y_next] = sim.sample_step(x, u_app);
            ctrl.observe(u_app, y, x);
            x = std::move(x_next);
            y = std::move(y_next);
        }
        res.completed = true;
    } catch (const Error& e) {
        res.completed = false;
        res.abort_reason = e.what();
    }

    if (res.steps() > 0)
        res.metrics = compute_metrics(res.r, res.y, res.u_applied, res.solve_time_s,
                                      spec.outputs_are_angles);
    return res;
}

struct ExcitationSpec {
    double length_s = 20.0;
    double dt = 0.1;
    int substeps = 10;
    double amplitude = 1.0;  // input drawn uniformly from [-amplitude, amplitude]
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    Eigen::VectorXd x0;  // empty: plant default
};

struct Excitation {
    Trajectory u, y, x;
    Eigen::VectorXd x_end;  // state the record stops at (closed loops continue here)
};

// Seeded uniform random excitation held per sample; records the same-tick
// (u_k, y_k, x_k) triples every controller consumes as offline data.
inline Excitation offline_excitation(const Plant& plant, const ExcitationSpec& spec) {
    const int steps = samples_from_seconds(spec.length_s, spec.dt, "ExcitationSpec: length");
    if (spec.amplitude < 0)
        throw ArgumentError("offline_excitation: amplitude must be >= 0, got " +
                            format_double(spec.amplitude));
    if (-spec.amplitude < spec.u_min || spec.amplitude > spec.u_max)
        throw ArgumentError("offline_excitation: amplitude " + format_double(spec.amplitude) +
                            " exceeds the actuator box [" + format_double(spec.u_min) + ", " +
                            format_double(spec.u_max) + "]");
    const int m = plant.input_dim();

    Excitation rec{Trajectory(m, spec.dt), Trajectory(plant.output_dim(), spec.dt),
                   Trajectory(plant.state_dim(), spec.dt), {}};
    Rng rng(spec.seed);
    Eigen::VectorXd x = spec.x0.size() > 0 ? spec.x0 : plant.default_initial_state();
    for (int k = 0; k < steps; ++k) {
        Eigen::VectorXd u(m);
        for (int i = 0; i < m; ++i) u(i) = rng.uniform(-spec.amplitude, spec.amplitude);
        rec.u.push_back(u);
        rec.y.push_back(plant.output(x));
        rec.x.push_back(x);
        x = plant.advance(x, u, spec.dt, spec.substeps);
        if (!x.allFinite())
            throw DivergenceError("offline_excitation: non-finite state at sample " +
                                  std::to_string(k + 1));
    }
    rec.x_end = x;
    return rec;
}

}  // namespace ddpc
