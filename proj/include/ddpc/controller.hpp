#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "ddpc/errors.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Horizons are configured in seconds; controllers work in samples.
inline int samples_from_seconds(double seconds, double dt, const std::string& what) {
    if (!(dt > 0)) throw ArgumentError(what + ": dt must be > 0, got " + format_double(dt));
    const int n = static_cast<int>(std::lround(seconds / dt));
    if (n < 1)
        throw ArgumentError(what + ": " + format_double(seconds) + " s at dt = " +
                            format_double(dt) + " s is shorter than one sample");
    return n;
}

// Closed-loop protocol, one tick: the harness reads the measurement y_t,
// calls step(y_t, reference) where the reference window holds the next
// horizon() samples (one column each), clamps the returned input to the
// actuator box, advances the plant, and finally reports the tick back via
// observe(u_applied, y_t, x_t). Controllers that adapt on applied inputs
// (post-clamp) get them only through observe.
class Controller {
public:
    virtual ~Controller() = default;
    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual int horizon() const = 0;  // reference lookahead, in samples
    virtual Eigen::VectorXd step(const Eigen::VectorXd& y, const Eigen::MatrixXd& reference) = 0;
    virtual void observe(const Eigen::VectorXd& /*u_applied*/, const Eigen::VectorXd& /*y*/,
                         const Eigen::VectorXd& /*x*/) {}
    // Extra per-step CSV columns (comma-joined, no leading comma); empty = none.
    virtual std::string diag_header() const { return ""; }
    virtual std::string diag_row() const { return ""; }
};

// Applies a fixed input every tick; baseline for harness and timing tests.
class ConstantController final : public Controller {
public:
    explicit ConstantController(Eigen::VectorXd u, int output_dim = 1, int horizon = 1)
        : u_(std::move(u)), output_dim_(output_dim), horizon_(horizon) {
        if (u_.size() < 1) throw DimensionError("ConstantController: empty input vector");
        if (horizon_ < 1)
            throw ArgumentError("ConstantController: horizon must be >= 1, got " +
                                std::to_string(horizon_));
    }
    int input_dim() const override { return static_cast<int>(u_.size()); }
    int output_dim() const override { return output_dim_; }
    int horizon() const override { return horizon_; }
    Eigen::VectorXd step(const Eigen::VectorXd&, const Eigen::MatrixXd&) override { return u_; }

private:
    Eigen::VectorXd u_;
    int output_dim_;
    int horizon_;
};

}  // namespace ddpc
