#pragma once

// JSON run configurations: schema parsing with key-path error messages,
// semantic validation, canonical serialization (round-trip stable), and the
// derived-quantity report the CLI prints before running anything.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepc.hpp"
#include "harness.hpp"
#include "koopman.hpp"
#include "mfapc.hpp"
#include "plants.hpp"

namespace ddpc {

using config_json = nlohmann::ordered_json;

namespace cfgdetail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config: " + path + ": " + what);
}

inline const config_json* find(const config_json& j, const char* key) {
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline void check_keys(const config_json& j, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* a) { return it.key() == a; });
        if (!known) fail(path + "." + it.key(), "unknown key");
    }
}

inline double number_at(const config_json& j, const std::string& path, const char* key,
                        std::optional<double> fallback = {}) {
    const config_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "required number missing");
    }
    if (!v->is_number()) fail(path + "." + key, "must be a number");
    return v->get<double>();
}

inline int int_at(const config_json& j, const std::string& path, const char* key,
                  std::optional<int> fallback = {}) {
    const config_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "required integer missing");
    }
    if (!v->is_number_integer()) fail(path + "." + key, "must be an integer");
    return v->get<int>();
}

inline std::uint64_t u64_at(const config_json& j, const std::string& path, const char* key,
                            std::uint64_t fallback) {
    const config_json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned()) fail(path + "." + key, "must be a non-negative integer");
    return v->get<std::uint64_t>();
}

inline bool bool_at(const config_json& j, const std::string& path, const char* key,
                    bool fallback) {
    const config_json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(path + "." + key, "must be a boolean");
    return v->get<bool>();
}

inline std::string string_at(const config_json& j, const std::string& path, const char* key,
                             std::optional<std::string> fallback = {}) {
    const config_json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        fail(path + "." + key, "required string missing");
    }
    if (!v->is_string()) fail(path + "." + key, "must be a string");
    return v->get<std::string>();
}

inline Eigen::MatrixXd matrix_at(const config_json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    if (!v[0].is_array() || v[0].empty()) fail(path, "rows must be non-empty arrays");
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            fail(path, "rows must all have " + std::to_string(cols) + " entries");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto& cell = row[static_cast<std::size_t>(k)];
            if (!cell.is_number()) fail(path, "entries must be numbers");
            m(i, k) = cell.get<double>();
        }
    }
    return m;
}

// Accepts a plain number (length-1) or an array of numbers.
inline Eigen::VectorXd vector_at(const config_json& v, const std::string& path) {
    if (v.is_number()) return Eigen::VectorXd::Constant(1, v.get<double>());
    if (!v.is_array() || v.empty()) fail(path, "must be a number or non-empty array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const auto& cell = v[static_cast<std::size_t>(i)];
        if (!cell.is_number()) fail(path, "entries must be numbers");
        out(i) = cell.get<double>();
    }
    return out;
}

inline config_json matrix_to_json(const Eigen::MatrixXd& m) {
    config_json rows = config_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        config_json row = config_json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline config_json vector_to_json(const Eigen::VectorXd& v) {
    config_json out = config_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

}  // namespace cfgdetail

struct LtiSpec {
    Eigen::MatrixXd A, B, C;
    bool discrete = true;
};

struct PlantSpec {
    enum class Kind { pendulum, lti };
    Kind kind = Kind::pendulum;
    PendulumParams pendulum;
    LtiSpec lti;
};

// Reference trajectory description; build() produces the harness object.
struct ReferenceSpec {
    std::string kind = "step";  // constant | step | piecewise
    std::string unit = "deg";   // deg | rad
    double value = 0.0;         // constant
    double at_s = 0.0;          // step switch time
    double before = 0.0;
    double after = 30.0;                // library default target
    std::vector<double> times, values;  // piecewise

    AngleUnit angle_unit() const {
        return unit == "rad" ? AngleUnit::radians : AngleUnit::degrees;
    }

    Reference build() const {
        if (kind == "constant") return Reference::constant(value, angle_unit());
        if (kind == "step") return Reference::step(at_s, before, after, angle_unit());
        std::vector<std::pair<double, double>> segments;
        for (std::size_t i = 0; i < times.size(); ++i) segments.emplace_back(times[i], values[i]);
        return Reference::piecewise(std::move(segments), angle_unit());
    }
};

struct ExcitationConfig {
    double length_s = 20.0;
    double amplitude = 3.0;
    std::uint64_t seed = 1;
};

// One parsed configuration file. A single schema serves single runs (exactly
// one controller block) and comparisons (any subset of the three).
struct Config {
    std::string name, notes;  // free-form documentation carried through round-trips

    PlantSpec plant;
    ReferenceSpec reference;
    Scenario scenario;
    ExcitationConfig excitation;

    double duration_s = 20.0;
    double dt = 0.1;
    int substeps = 10;
    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();

    std::uint64_t seed = 0;
    std::string output_dir = "out";

    std::optional<DeePCConfig> deepc;
    std::optional<WKPCConfig> wkpc;
    std::optional<MFAPCConfig> mfapc;

    int controller_count() const {
        return int(deepc.has_value()) + int(wkpc.has_value()) + int(mfapc.has_value());
    }

    std::vector<std::string> controller_names() const {
        std::vector<std::string> names;
        if (mfapc) names.push_back("mfapc");
        if (deepc) names.push_back("deepc");
        if (wkpc) names.push_back("wkpc");
        return names;
    }

    void validate() const;
};

namespace cfgdetail {

inline PlantSpec parse_plant(const config_json& j) {
    PlantSpec p;
    const std::string type = string_at(j, "plant", "type", std::string("pendulum"));
    if (type == "pendulum") {
        check_keys(j, "plant", {"type", "mass", "radius", "gravity", "friction"});
        p.kind = PlantSpec::Kind::pendulum;
        PendulumParams d;
        p.pendulum.mass = number_at(j, "plant", "mass", d.mass);
        p.pendulum.radius = number_at(j, "plant", "radius", d.radius);
        p.pendulum.gravity = number_at(j, "plant", "gravity", d.gravity);
        p.pendulum.friction = number_at(j, "plant", "friction", d.friction);
    } else if (type == "lti") {
        check_keys(j, "plant", {"type", "A", "B", "C", "discrete"});
        p.kind = PlantSpec::Kind::lti;
        const config_json* a = find(j, "A");
        const config_json* b = find(j, "B");
        const config_json* c = find(j, "C");
        if (!a || !b || !c) fail("plant", "lti plants require A, B, and C matrices");
        p.lti.A = matrix_at(*a, "plant.A");
        p.lti.B = matrix_at(*b, "plant.B");
        p.lti.C = matrix_at(*c, "plant.C");
        p.lti.discrete = bool_at(j, "plant", "discrete", true);
    } else {
        fail("plant.type", "must be \"pendulum\" or \"lti\", got \"" + type + "\"");
    }
    return p;
}

inline ReferenceSpec parse_reference(const config_json& j) {
    ReferenceSpec r;
    r.kind = string_at(j, "reference", "kind", r.kind);
    r.unit = string_at(j, "reference", "unit", r.unit);
    if (r.unit != "deg" && r.unit != "rad")
        fail("reference.unit", "must be \"deg\" or \"rad\", got \"" + r.unit + "\"");
    if (r.kind == "constant") {
        check_keys(j, "reference", {"kind", "unit", "value"});
        r.value = number_at(j, "reference", "value", 0.0);
    } else if (r.kind == "step") {
        check_keys(j, "reference", {"kind", "unit", "at_s", "before", "after"});
        r.at_s = number_at(j, "reference", "at_s", r.at_s);
        r.before = number_at(j, "reference", "before", r.before);
        r.after = number_at(j, "reference", "after", r.after);
    } else if (r.kind == "piecewise") {
        check_keys(j, "reference", {"kind", "unit", "times", "values"});
        const config_json* t = find(j, "times");
        const config_json* v = find(j, "values");
        if (!t || !v) fail("reference", "piecewise references require times and values arrays");
        const Eigen::VectorXd tv = vector_at(*t, "reference.times");
        const Eigen::VectorXd vv = vector_at(*v, "reference.values");
        r.times.assign(tv.data(), tv.data() + tv.size());
        r.values.assign(vv.data(), vv.data() + vv.size());
        if (r.times.size() != r.values.size())
            fail("reference.values", "must match times in length (" +
                                         std::to_string(r.times.size()) + " times, " +
                                         std::to_string(r.values.size()) + " values)");
    } else {
        fail("reference.kind", "must be \"constant\", \"step\", or \"piecewise\", got \"" +
                                   r.kind + "\"");
    }
    return r;
}

inline Scenario parse_scenario(const config_json& j) {
    Scenario s;
    check_keys(j, "scenario", {"direction_flip_time_s", "gain_drift", "noise_std"});
    if (const config_json* v = find(j, "direction_flip_time_s")) {
        if (!v->is_number()) fail("scenario.direction_flip_time_s", "must be a number");
        s.direction_flip_time_s = v->get<double>();
    }
    if (const config_json* v = find(j, "gain_drift")) {
        check_keys(*v, "scenario.gain_drift", {"start_s", "end_s", "end_gain"});
        Scenario::GainDrift d;
        d.start_s = number_at(*v, "scenario.gain_drift", "start_s");
        d.end_s = number_at(*v, "scenario.gain_drift", "end_s");
        d.end_gain = number_at(*v, "scenario.gain_drift", "end_gain");
        if (d.end_s < d.start_s)
            fail("scenario.gain_drift.end_s", "must be >= start_s");
        s.gain_drift = d;
    }
    s.noise_std = number_at(j, "scenario", "noise_std", 0.0);
    if (s.noise_std < 0) fail("scenario.noise_std", "must be >= 0");
    return s;
}

inline DeePCConfig parse_deepc(const config_json& j, const Config& shared) {
    const std::string p = "controllers.deepc";
    check_keys(j, p,
               {"data_length_s", "init_window_s", "horizon_s", "q", "s", "r", "q_matrix",
                "s_matrix", "r_matrix", "lambda_g", "lambda_sigma", "u_min", "u_max", "y_min",
                "y_max", "rolling", "declared_order", "slack_on_future"});
    DeePCConfig c;
    c.dt = shared.dt;
    c.u_min = shared.u_min;
    c.u_max = shared.u_max;
    c.data_length_s = number_at(j, p, "data_length_s", c.data_length_s);
    c.init_window_s = number_at(j, p, "init_window_s", c.init_window_s);
    c.horizon_s = number_at(j, p, "horizon_s", c.horizon_s);
    c.q = number_at(j, p, "q", c.q);
    c.s = number_at(j, p, "s", c.s);
    c.r = number_at(j, p, "r", c.r);
    if (const config_json* v = find(j, "q_matrix")) c.q_mat = matrix_at(*v, p + ".q_matrix");
    if (const config_json* v = find(j, "s_matrix")) c.s_mat = matrix_at(*v, p + ".s_matrix");
    if (const config_json* v = find(j, "r_matrix")) c.r_mat = matrix_at(*v, p + ".r_matrix");
    c.lambda_g = number_at(j, p, "lambda_g", c.lambda_g);
    c.lambda_sigma = number_at(j, p, "lambda_sigma", c.lambda_sigma);
    if (!(c.lambda_g > 0))
        fail(p + ".lambda_g", "must satisfy lambda_g, lambda_sigma > 0, got " +
                                  format_double(c.lambda_g));
    if (!(c.lambda_sigma > 0))
        fail(p + ".lambda_sigma", "must satisfy lambda_g, lambda_sigma > 0, got " +
                                      format_double(c.lambda_sigma));
    c.u_min = number_at(j, p, "u_min", c.u_min);
    c.u_max = number_at(j, p, "u_max", c.u_max);
    c.y_min = number_at(j, p, "y_min", c.y_min);
    c.y_max = number_at(j, p, "y_max", c.y_max);
    c.rolling = bool_at(j, p, "rolling", c.rolling);
    if (find(j, "declared_order")) c.declared_order = int_at(j, p, "declared_order");
    c.slack_on_future = bool_at(j, p, "slack_on_future", c.slack_on_future);
    return c;
}

inline WKPCConfig parse_wkpc(const config_json& j, const Config& shared) {
    const std::string p = "controllers.wkpc";
    check_keys(j, p,
               {"data_length_s", "init_window_s", "horizon_s", "q", "r", "q_matrix", "r_matrix",
                "lambda_g", "n_p", "u_min", "u_max", "y_min", "y_max", "u_setpoint", "rolling",
                "center_seed", "include_future_lifted", "delay_embedding", "embed_depth",
                "resample_centers_each_step"});
    WKPCConfig c;
    c.dt = shared.dt;
    c.u_min = shared.u_min;
    c.u_max = shared.u_max;
    c.data_length_s = number_at(j, p, "data_length_s", c.data_length_s);
    c.init_window_s = number_at(j, p, "init_window_s", c.init_window_s);
    c.horizon_s = number_at(j, p, "horizon_s", c.horizon_s);
    c.q = number_at(j, p, "q", c.q);
    c.r = number_at(j, p, "r", c.r);
    if (const config_json* v = find(j, "q_matrix")) c.q_mat = matrix_at(*v, p + ".q_matrix");
    if (const config_json* v = find(j, "r_matrix")) c.r_mat = matrix_at(*v, p + ".r_matrix");
    c.lambda_g = number_at(j, p, "lambda_g", c.lambda_g);
    if (!(c.lambda_g > 0))
        fail(p + ".lambda_g", "must satisfy lambda_g > 0, got " + format_double(c.lambda_g));
    c.n_p = int_at(j, p, "n_p", c.n_p);
    c.u_min = number_at(j, p, "u_min", c.u_min);
    c.u_max = number_at(j, p, "u_max", c.u_max);
    c.y_min = number_at(j, p, "y_min", c.y_min);
    c.y_max = number_at(j, p, "y_max", c.y_max);
    if (const config_json* v = find(j, "u_setpoint"))
        c.u_setpoint = vector_at(*v, p + ".u_setpoint");
    c.rolling = bool_at(j, p, "rolling", c.rolling);
    c.center_seed = u64_at(j, p, "center_seed", c.center_seed);
    c.include_future_lifted = bool_at(j, p, "include_future_lifted", c.include_future_lifted);
    c.delay_embedding = bool_at(j, p, "delay_embedding", c.delay_embedding);
    c.embed_depth = int_at(j, p, "embed_depth", c.embed_depth);
    c.resample_centers_each_step =
        bool_at(j, p, "resample_centers_each_step", c.resample_centers_each_step);
    return c;
}

inline MFAPCConfig parse_mfapc(const config_json& j, const Config& shared) {
    const std::string p = "controllers.mfapc";
    check_keys(j, p, {"horizon_s", "lambda", "rho", "mu", "eta", "epsilon", "delta", "phi0",
                      "theta0", "n_m", "theta_reset_m"});
    MFAPCConfig c;
    c.dt = shared.dt;
    c.horizon_s = number_at(j, p, "horizon_s", c.horizon_s);
    c.lambda = number_at(j, p, "lambda", c.lambda);
    c.rho = number_at(j, p, "rho", c.rho);
    c.mu = number_at(j, p, "mu", c.mu);
    c.eta = number_at(j, p, "eta", c.eta);
    c.epsilon = number_at(j, p, "epsilon", c.epsilon);
    c.delta = number_at(j, p, "delta", c.delta);
    c.phi0 = number_at(j, p, "phi0", c.phi0);
    c.n_m = int_at(j, p, "n_m", c.n_m);
    if (const config_json* v = find(j, "theta0")) {
        const Eigen::VectorXd t0 = vector_at(*v, p + ".theta0");
        // A scalar broadcasts across the forecaster taps.
        c.theta0 = t0.size() == 1 && c.n_m > 1 ? Eigen::VectorXd::Constant(c.n_m, t0(0)) : t0;
    } else if (c.n_m != c.theta0.size()) {
        c.theta0 = Eigen::VectorXd::Constant(c.n_m, 0.175);
    }
    c.theta_reset_m = number_at(j, p, "theta_reset_m", c.theta_reset_m);
    return c;
}

}  // namespace cfgdetail

inline Config parse_config(const config_json& j) {
    using namespace cfgdetail;
    check_keys(j, "<root>", {"name", "notes", "plant", "reference", "scenario", "excitation",
                             "loop", "seed", "output_dir", "controllers"});
    Config c;
    c.name = string_at(j, "<root>", "name", std::string());
    c.notes = string_at(j, "<root>", "notes", std::string());
    if (const config_json* v = find(j, "plant")) c.plant = parse_plant(*v);
    if (const config_json* v = find(j, "reference")) c.reference = parse_reference(*v);
    if (const config_json* v = find(j, "scenario")) c.scenario = parse_scenario(*v);
    if (const config_json* v = find(j, "excitation")) {
        check_keys(*v, "excitation", {"length_s", "amplitude", "seed"});
        c.excitation.length_s = number_at(*v, "excitation", "length_s", c.excitation.length_s);
        c.excitation.amplitude =
            number_at(*v, "excitation", "amplitude", c.excitation.amplitude);
        c.excitation.seed = u64_at(*v, "excitation", "seed", c.excitation.seed);
    }
    if (const config_json* v = find(j, "loop")) {
        check_keys(*v, "loop", {"duration_s", "dt", "substeps", "u_min", "u_max"});
        c.duration_s = number_at(*v, "loop", "duration_s", c.duration_s);
        c.dt = number_at(*v, "loop", "dt", c.dt);
        c.substeps = int_at(*v, "loop", "substeps", c.substeps);
        c.u_min = number_at(*v, "loop", "u_min", c.u_min);
        c.u_max = number_at(*v, "loop", "u_max", c.u_max);
    }
    c.seed = u64_at(j, "<root>", "seed", c.seed);
    c.output_dir = string_at(j, "<root>", "output_dir", c.output_dir);
    if (const config_json* v = find(j, "controllers")) {
        check_keys(*v, "controllers", {"deepc", "wkpc", "mfapc"});
        if (const config_json* b = find(*v, "deepc")) c.deepc = parse_deepc(*b, c);
        if (const config_json* b = find(*v, "wkpc")) c.wkpc = parse_wkpc(*b, c);
        if (const config_json* b = find(*v, "mfapc")) c.mfapc = parse_mfapc(*b, c);
    }
    return c;
}

inline void Config::validate() const {
    using cfgdetail::fail;
    if (!(dt > 0)) fail("loop.dt", "must be > 0, got " + format_double(dt));
    if (substeps < 1) fail("loop.substeps", "must be >= 1, got " + std::to_string(substeps));
    const int loop_steps = samples_from_seconds(duration_s, dt, "loop.duration_s");
    if (std::abs(loop_steps * dt - duration_s) > 1e-9 * std::max(1.0, std::abs(duration_s)))
        fail("loop.duration_s", format_double(duration_s) + " is not a whole number of dt = " +
                                    format_double(dt) + " periods");
    if (u_min > u_max)
        fail("loop.u_min", "box is empty: u_min " + format_double(u_min) + " > u_max " +
                               format_double(u_max));
    if (plant.kind == PlantSpec::Kind::pendulum) {
        try {
            plant.pendulum.validate();
        } catch (const Error& e) {
            fail("plant", e.what());
        }
    } else {
        const auto& l = plant.lti;
        if (l.A.rows() != l.A.cols()) fail("plant.A", "must be square");
        if (l.B.rows() != l.A.rows()) fail("plant.B", "row count must match A");
        if (l.C.cols() != l.A.cols()) fail("plant.C", "column count must match A");
    }
    try {
        reference.build();
    } catch (const Error& e) {
        fail("reference", e.what());
    }
    if (!(excitation.length_s > 0)) fail("excitation.length_s", "must be > 0");
    if (excitation.amplitude < 0) fail("excitation.amplitude", "must be >= 0");
    const double box = std::min(u_max, -u_min);
    if (std::isfinite(box) && excitation.amplitude > box)
        fail("excitation.amplitude", format_double(excitation.amplitude) +
                                         " exceeds the actuator box [" + format_double(u_min) +
                                         ", " + format_double(u_max) + "]");
    if (controller_count() == 0)
        fail("controllers", "at least one of mfapc, deepc, wkpc must be present");

    const int exc_samples = samples_from_seconds(excitation.length_s, dt, "excitation.length_s");
    const auto check_block = [&](const char* name, const auto& cfg) {
        const std::string p = std::string("controllers.") + name;
        try {
            cfg.validate();
        } catch (const Error& e) {
            fail(p, e.what());
        }
    };
    if (deepc) {
        check_block("deepc", *deepc);
        if (exc_samples < deepc->data_samples())
            fail("excitation.length_s",
                 "provides " + std::to_string(exc_samples) + " samples but deepc needs " +
                     std::to_string(deepc->data_samples()));
    }
    if (wkpc) {
        check_block("wkpc", *wkpc);
        if (exc_samples < wkpc->data_samples())
            fail("excitation.length_s",
                 "provides " + std::to_string(exc_samples) + " samples but wkpc needs " +
                     std::to_string(wkpc->data_samples()));
    }
    if (mfapc) check_block("mfapc", *mfapc);
}

// ---- canonical serialization ------------------------------------------------

namespace cfgdetail {

inline void put_finite(config_json& j, const char* key, double v) {
    // Infinities mark "unset" boxes and have no JSON literal; omit them.
    if (std::isfinite(v)) j[key] = v;
}

}  // namespace cfgdetail

inline config_json serialize_config(const Config& c) {
    using namespace cfgdetail;
    config_json j;
    if (!c.name.empty()) j["name"] = c.name;
    if (!c.notes.empty()) j["notes"] = c.notes;

    config_json plant;
    if (c.plant.kind == PlantSpec::Kind::pendulum) {
        plant["type"] = "pendulum";
        plant["mass"] = c.plant.pendulum.mass;
        plant["radius"] = c.plant.pendulum.radius;
        plant["gravity"] = c.plant.pendulum.gravity;
        plant["friction"] = c.plant.pendulum.friction;
    } else {
        plant["type"] = "lti";
        plant["A"] = matrix_to_json(c.plant.lti.A);
        plant["B"] = matrix_to_json(c.plant.lti.B);
        plant["C"] = matrix_to_json(c.plant.lti.C);
        plant["discrete"] = c.plant.lti.discrete;
    }
    j["plant"] = std::move(plant);

    config_json ref;
    ref["kind"] = c.reference.kind;
    ref["unit"] = c.reference.unit;
    if (c.reference.kind == "constant") {
        ref["value"] = c.reference.value;
    } else if (c.reference.kind == "step") {
        ref["at_s"] = c.reference.at_s;
        ref["before"] = c.reference.before;
        ref["after"] = c.reference.after;
    } else {
        ref["times"] = c.reference.times;
        ref["values"] = c.reference.values;
    }
    j["reference"] = std::move(ref);

    config_json scen;
    if (c.scenario.direction_flip_time_s)
        scen["direction_flip_time_s"] = *c.scenario.direction_flip_time_s;
    if (c.scenario.gain_drift) {
        config_json d;
        d["start_s"] = c.scenario.gain_drift->start_s;
        d["end_s"] = c.scenario.gain_drift->end_s;
        d["end_gain"] = c.scenario.gain_drift->end_gain;
        scen["gain_drift"] = std::move(d);
    }
    scen["noise_std"] = c.scenario.noise_std;
    j["scenario"] = std::move(scen);

    config_json exc;
    exc["length_s"] = c.excitation.length_s;
    exc["amplitude"] = c.excitation.amplitude;
    exc["seed"] = c.excitation.seed;
    j["excitation"] = std::move(exc);

    config_json loop;
    loop["duration_s"] = c.duration_s;
    loop["dt"] = c.dt;
    loop["substeps"] = c.substeps;
    put_finite(loop, "u_min", c.u_min);
    put_finite(loop, "u_max", c.u_max);
    j["loop"] = std::move(loop);

    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;

    config_json ctrls;
    if (c.mfapc) {
        const auto& m = *c.mfapc;
        config_json b;
        b["horizon_s"] = m.horizon_s;
        b["lambda"] = m.lambda;
        b["rho"] = m.rho;
        b["mu"] = m.mu;
        b["eta"] = m.eta;
        b["epsilon"] = m.epsilon;
        b["delta"] = m.delta;
        b["phi0"] = m.phi0;
        b["theta0"] = vector_to_json(m.theta0);
        b["n_m"] = m.n_m;
        b["theta_reset_m"] = m.theta_reset_m;
        ctrls["mfapc"] = std::move(b);
    }
    if (c.deepc) {
        const auto& d = *c.deepc;
        config_json b;
        b["data_length_s"] = d.data_length_s;
        b["init_window_s"] = d.init_window_s;
        b["horizon_s"] = d.horizon_s;
        b["q"] = d.q;
        b["s"] = d.s;
        b["r"] = d.r;
        if (d.q_mat) b["q_matrix"] = matrix_to_json(*d.q_mat);
        if (d.s_mat) b["s_matrix"] = matrix_to_json(*d.s_mat);
        if (d.r_mat) b["r_matrix"] = matrix_to_json(*d.r_mat);
        b["lambda_g"] = d.lambda_g;
        b["lambda_sigma"] = d.lambda_sigma;
        put_finite(b, "u_min", d.u_min);
        put_finite(b, "u_max", d.u_max);
        put_finite(b, "y_min", d.y_min);
        put_finite(b, "y_max", d.y_max);
        b["rolling"] = d.rolling;
        if (d.declared_order) b["declared_order"] = *d.declared_order;
        b["slack_on_future"] = d.slack_on_future;
        ctrls["deepc"] = std::move(b);
    }
    if (c.wkpc) {
        const auto& w = *c.wkpc;
        config_json b;
        b["data_length_s"] = w.data_length_s;
        b["init_window_s"] = w.init_window_s;
        b["horizon_s"] = w.horizon_s;
        b["q"] = w.q;
        b["r"] = w.r;
        if (w.q_mat) b["q_matrix"] = matrix_to_json(*w.q_mat);
        if (w.r_mat) b["r_matrix"] = matrix_to_json(*w.r_mat);
        b["lambda_g"] = w.lambda_g;
        b["n_p"] = w.n_p;
        put_finite(b, "u_min", w.u_min);
        put_finite(b, "u_max", w.u_max);
        put_finite(b, "y_min", w.y_min);
        put_finite(b, "y_max", w.y_max);
        if (w.u_setpoint.size() > 0) b["u_setpoint"] = vector_to_json(w.u_setpoint);
        b["rolling"] = w.rolling;
        b["center_seed"] = w.center_seed;
        b["include_future_lifted"] = w.include_future_lifted;
        b["delay_embedding"] = w.delay_embedding;
        b["embed_depth"] = w.embed_depth;
        b["resample_centers_each_step"] = w.resample_centers_each_step;
        ctrls["wkpc"] = std::move(b);
    }
    j["controllers"] = std::move(ctrls);
    return j;
}

inline config_json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    try {
        return config_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
}

// Read + parse + validate: the one entry point the CLI uses.
inline Config load_config_file(const std::filesystem::path& path) {
    Config c = parse_config(read_json_file(path));
    c.validate();
    return c;
}

inline std::shared_ptr<const Plant> build_plant(const PlantSpec& spec) {
    if (spec.kind == PlantSpec::Kind::pendulum)
        return std::make_shared<PendulumPlant>(spec.pendulum);
    return std::make_shared<LtiPlant>(spec.lti.A, spec.lti.B, spec.lti.C, spec.lti.discrete);
}

// ---- derived quantities (what `validate` prints) ----------------------------

struct ControllerDerived {
    std::string name;
    int t_samples = 0;   // offline window (deepc/wkpc)
    int tini = 0;
    int horizon = 0;
    int depth = 0;       // Hankel depth L = Tini + N
    int g_dim = 0;       // T - L + 1
    int hankel_rows = 0; // stacked past+future rows per signal channel
    int required_pe = 0; // 0 = no hard gate (deepc without declared_order)
    int n_m = 0;         // mfapc forecaster order
};

inline std::vector<ControllerDerived> derived_quantities(const Config& c) {
    std::vector<ControllerDerived> out;
    if (c.mfapc) {
        ControllerDerived d;
        d.name = "mfapc";
        d.horizon = c.mfapc->horizon_samples();
        d.n_m = c.mfapc->n_m;
        out.push_back(d);
    }
    if (c.deepc) {
        ControllerDerived d;
        d.name = "deepc";
        d.t_samples = c.deepc->data_samples();
        d.tini = c.deepc->init_samples();
        d.horizon = c.deepc->horizon_samples();
        d.depth = d.tini + d.horizon;
        d.g_dim = d.t_samples - d.depth + 1;
        d.hankel_rows = d.depth;
        d.required_pe =
            c.deepc->declared_order ? d.tini + d.horizon + *c.deepc->declared_order : 0;
        out.push_back(d);
    }
    if (c.wkpc) {
        ControllerDerived d;
        d.name = "wkpc";
        d.t_samples = c.wkpc->data_samples();
        d.tini = c.wkpc->init_samples();
        d.horizon = c.wkpc->horizon_samples();
        d.depth = d.tini + d.horizon;
        d.g_dim = d.t_samples - d.depth + 1;
        d.hankel_rows = d.depth;
        d.required_pe = d.tini + d.horizon + c.wkpc->n_p;
        out.push_back(d);
    }
    return out;
}

inline std::string format_derived(const ControllerDerived& d) {
    std::ostringstream os;
    os << "controllers." << d.name << ": ";
    if (d.name == "mfapc") {
        os << "N = " << d.horizon << " samples, forecaster order n_m = " << d.n_m;
        return os.str();
    }
    os << "T = " << d.t_samples << " samples, Tini = " << d.tini << ", N = " << d.horizon
       << ", L = " << d.depth << ", hankel = " << d.hankel_rows << "x" << d.g_dim
       << " per signal, g-dim = " << d.g_dim;
    if (d.required_pe > 0)
        os << ", required PE order = " << d.required_pe;
    else
        os << ", required PE order = unchecked (no declared plant order)";
    return os.str();
}

}  // namespace ddpc
