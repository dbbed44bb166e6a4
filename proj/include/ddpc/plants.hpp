#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "ddpc/errors.hpp"
#include "ddpc/rng.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Point mass m on a rigid rod of length r, torque-actuated at the pivot,
// with viscous friction k at the joint. State x = (angle, angular velocity),
// angle measured from the stable (hanging) equilibrium.
struct PendulumParams {
    double mass = 1.0;     // kg
    double radius = 0.2;   // m
    double gravity = 9.81; // m/s^2
    double friction = 0.1; // N*m*s/rad; damping torque -k * velocity

    void validate() const {
        if (!(mass > 0)) throw ArgumentError("PendulumParams: mass must be > 0, got " + format_double(mass));
        if (!(radius > 0)) throw ArgumentError("PendulumParams: radius must be > 0, got " + format_double(radius));
        if (!(gravity > 0)) throw ArgumentError("PendulumParams: gravity must be > 0, got " + format_double(gravity));
        if (friction < 0) throw ArgumentError("PendulumParams: friction must be >= 0, got " + format_double(friction));
    }
};

inline Eigen::Vector2d pendulum_deriv(const PendulumParams& p, const Eigen::Vector2d& x,
                                      double torque) {
    Eigen::Vector2d dx;
    dx(0) = x(1);
    dx(1) = -(p.gravity / p.radius) * std::sin(x(0)) -
            (p.friction / (p.mass * p.radius)) * x(1) +
            torque / (p.mass * p.radius);
    return dx;
}

// Classic fourth-order Runge-Kutta step for dx/dt = f(x) with the input held
// constant over the step (bind it into f). Throws if the state leaves the
// finite range.
template <typename F>
Eigen::VectorXd rk4_step(F&& f, const Eigen::VectorXd& x, double h) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        std::string s = "[";
        for (Eigen::Index i = 0; i < next.size(); ++i)
            s += (i ? ", " : "") + format_double(next(i));
        throw DivergenceError("rk4_step: non-finite state " + s + "]");
    }
    return next;
}

// Minimal simulated-plant interface: advance one controller period (dt) from
// state x under a zero-order-hold input, and read the output.
class Plant {
public:
    virtual ~Plant() = default;
    virtual int state_dim() const = 0;
    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual Eigen::VectorXd output(const Eigen::VectorXd& x) const = 0;
    virtual Eigen::VectorXd advance(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    double dt, int substeps) const = 0;
    virtual Eigen::VectorXd default_initial_state() const {
        return Eigen::VectorXd::Zero(state_dim());
    }
};

class PendulumPlant final : public Plant {
public:
    explicit PendulumPlant(PendulumParams params = {}) : params_(params) { params_.validate(); }

    const PendulumParams& params() const { return params_; }
    int state_dim() const override { return 2; }
    int input_dim() const override { return 1; }
    int output_dim() const override { return 1; }

    Eigen::VectorXd output(const Eigen::VectorXd& x) const override {
        return x.head(1);  // measured angle
    }

    Eigen::VectorXd advance(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
                            int substeps) const override {
        if (substeps < 1)
            throw ArgumentError("PendulumPlant: substeps must be >= 1, got " +
                                std::to_string(substeps));
        const double tau = u(0);
        const double h = dt / substeps;
        auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd {
            return pendulum_deriv(params_, s.head<2>(), tau);
        };
        Eigen::VectorXd cur = x;
        for (int i = 0; i < substeps; ++i) cur = rk4_step(f, cur, h);
        return cur;
    }

private:
    PendulumParams params_;
};

// x+ = Ax + Bu (discrete) or dx/dt = Ax + Bu integrated by RK4 (continuous);
// y = Cx either way. Discrete plants take exactly one transition per dt and
// ignore substeps.
class LtiPlant final : public Plant {
public:
    LtiPlant(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C, bool discrete)
        : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), discrete_(discrete) {
        if (A_.rows() != A_.cols())
            throw DimensionError("LtiPlant: A is " + std::to_string(A_.rows()) + "x" +
                                 std::to_string(A_.cols()) + ", must be square");
        if (B_.rows() != A_.rows())
            throw DimensionError("LtiPlant: B has " + std::to_string(B_.rows()) +
                                 " rows, expected " + std::to_string(A_.rows()));
        if (C_.cols() != A_.rows())
            throw DimensionError("LtiPlant: C has " + std::to_string(C_.cols()) +
                                 " columns, expected " + std::to_string(A_.rows()));
    }

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::MatrixXd& C() const { return C_; }
    bool discrete() const { return discrete_; }

    int state_dim() const override { return static_cast<int>(A_.rows()); }
    int input_dim() const override { return static_cast<int>(B_.cols()); }
    int output_dim() const override { return static_cast<int>(C_.rows()); }

    Eigen::VectorXd output(const Eigen::VectorXd& x) const override { return C_ * x; }

    Eigen::VectorXd advance(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
                            int substeps) const override {
        if (discrete_) {
            Eigen::VectorXd next = A_ * x + B_ * u;
            if (!next.allFinite()) throw DivergenceError("LtiPlant: non-finite state");
            return next;
        }
        if (substeps < 1)
            throw ArgumentError("LtiPlant: substeps must be >= 1, got " +
                                std::to_string(substeps));
        const double h = dt / substeps;
        auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd { return A_ * s + B_ * u; };
        Eigen::VectorXd cur = x;
        for (int i = 0; i < substeps; ++i) cur = rk4_step(f, cur, h);
        return cur;
    }

private:
    Eigen::MatrixXd A_, B_, C_;
    bool discrete_;
};

inline double spectral_radius(const Eigen::MatrixXd& A) {
    return Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd ctrb(n, n * B.cols());
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * B.cols(), B.cols()) = Ak * B;
        Ak = A * Ak;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ctrb);
    return cod.rank() == n;
}

// Random single-input single-output stable controllable system of the given
// order; deterministic in the seed. Discrete systems are scaled to spectral
// radius < 1, continuous ones shifted to have eigenvalues in the left half
// plane.
inline LtiPlant make_random_stable_lti(int order, std::uint64_t seed, bool discrete = true) {
    if (order < 1)
        throw ArgumentError("make_random_stable_lti: order must be >= 1, got " +
                            std::to_string(order));
    Rng rng(seed);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::MatrixXd A(order, order), B(order, 1), C(1, order);
        for (int i = 0; i < order; ++i) {
            B(i, 0) = rng.uniform(-1, 1);
            C(0, i) = rng.uniform(-1, 1);
            for (int j = 0; j < order; ++j) A(i, j) = rng.uniform(-1, 1);
        }
        const double target = rng.uniform(0.4, 0.9);
        const double sr = spectral_radius(A);
        if (sr > 0) A *= target / sr;
        if (!discrete) {
            // Shift so the real parts sit strictly left of the axis.
            A -= (target + 0.1) * Eigen::MatrixXd::Identity(order, order);
        }
        if (is_controllable(A, B)) return LtiPlant(A, B, C, discrete);
    }
    throw DataError("make_random_stable_lti: no controllable draw after 64 attempts, seed " +
                    std::to_string(seed));
}

// Environment changes applied around the plant: an input direction flip at a
// fixed time, a slow linear input-gain ramp, and additive Gaussian
// measurement noise.
struct Scenario {
    std::optional<double> direction_flip_time_s;
    struct GainDrift {
        double start_s = 0, end_s = 0, end_gain = 1.0;
    };
    std::optional<GainDrift> gain_drift;
    double noise_std = 0.0;

    double input_gain(double t) const {
        double g = 1.0;
        if (gain_drift) {
            const auto& d = *gain_drift;
            if (t >= d.end_s)
                g = d.end_gain;
            else if (t > d.start_s && d.end_s > d.start_s)
                g = 1.0 + (d.end_gain - 1.0) * (t - d.start_s) / (d.end_s - d.start_s);
        }
        if (direction_flip_time_s && t >= *direction_flip_time_s) g = -g;
        return g;
    }
};

// Owns the scenario clock and the measurement-noise stream. Advancing applies
// the input gain in effect at the start of the interval, integrates one
// controller period, and returns the new state plus its (noisy) measurement.
class Simulator {
public:
    Simulator(std::shared_ptr<const Plant> plant, Scenario scenario, std::uint64_t noise_seed,
              double dt, int substeps = 10)
        : plant_(std::move(plant)), scenario_(scenario), rng_(noise_seed), dt_(dt),
          substeps_(substeps) {
        if (!(dt > 0)) throw ArgumentError("Simulator: dt must be > 0, got " + format_double(dt));
    }

    const Plant& plant() const { return *plant_; }
    double dt() const { return dt_; }
    double time() const { return t_; }

    Eigen::VectorXd measure(const Eigen::VectorXd& x) {
        Eigen::VectorXd y = plant_->output(x);
        if (scenario_.noise_std > 0)
            for (Eigen::Index i = 0; i < y.size(); ++i)
                y(i) += scenario_.noise_std * rng_.gaussian();
        return y;
    }

    std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_step(const Eigen::VectorXd& x,
                                                            const Eigen::VectorXd& u) {
        const Eigen::VectorXd u_eff = scenario_.input_gain(t_) * u;
        Eigen::VectorXd next;
        try {
            next = plant_->advance(x, u_eff, dt_, substeps_);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " at t = " + format_double(t_) + " s");
        }
        if (!next.allFinite()) {
            std::string s = "[";
            for (Eigen::Index i = 0; i < next.size(); ++i)
                s += (i ? ", " : "") + format_double(next(i));
            throw DivergenceError("Simulator: non-finite state " + s + "] at t = " +
                                  format_double(t_) + " s");
        }
        t_ += dt_;
        return {next, measure(next)};
    }

private:
    std::shared_ptr<const Plant> plant_;
    Scenario scenario_;
    Rng rng_;
    double dt_;
    int substeps_;
    double t_ = 0.0;
};

}  // namespace ddpc
