#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ddpc/controller.hpp"
#include "ddpc/errors.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Model-free adaptive predictive control (compact-form dynamic linearization):
// a scalar gain estimate phi_hat relates output increments to input increments,
// a small linear forecaster extrapolates that gain over the horizon, and the
// control increment solves a ridge-regularized least-squares problem in closed
// form. No model, no QP; per-step cost is one tiny dense solve.

struct MFAPCConfig {
    double horizon_s = 0.5;
    double dt = 0.1;
    double lambda = 0.37;   // weight on control increments
    double rho = 1.0;       // gain on the applied first increment
    double mu = 1.0;        // gain-estimator denominator weight
    double eta = 1.0;       // gain-estimator step factor, must lie in (0, 2]
    double epsilon = 1e-5;  // reset threshold for the gain estimate
    double delta = 0.5;     // forecaster denominator weight
    double phi0 = 0.1;      // initial gain estimate; also the reset value
    Eigen::VectorXd theta0 = Eigen::VectorXd::Constant(4, 0.175);
    int n_m = 4;                // forecaster order
    double theta_reset_m = 0.0;  // forecaster reset bound M; 0 = auto

    int horizon_samples() const { return samples_from_seconds(horizon_s, dt, "MFAPCConfig: horizon"); }
    double theta_bound() const { return theta_reset_m > 0 ? theta_reset_m : 10.0 * theta0.norm() + 1.0; }

    void validate() const {
        if (!(lambda > 0))
            throw ConfigError("MFAPCConfig: lambda must be > 0, got " + format_double(lambda));
        if (!(rho > 0))
            throw ConfigError("MFAPCConfig: rho must be > 0, got " + format_double(rho));
        if (!(mu > 0)) throw ConfigError("MFAPCConfig: mu must be > 0, got " + format_double(mu));
        if (!(eta > 0 && eta <= 2))
            throw ConfigError("MFAPCConfig: eta must lie in (0, 2], got " + format_double(eta));
        if (!(epsilon > 0))
            throw ConfigError("MFAPCConfig: epsilon must be > 0, got " + format_double(epsilon));
        if (!(delta > 0))
            throw ConfigError("MFAPCConfig: delta must be > 0, got " + format_double(delta));
        if (n_m < 2 || n_m > 7)
            throw ConfigError("MFAPCConfig: n_m must lie in [2, 7], got " + std::to_string(n_m));
        if (theta0.size() != n_m)
            throw ConfigError("MFAPCConfig: theta0 has " + std::to_string(theta0.size()) +
                              " entries, n_m = " + std::to_string(n_m));
        if (theta_reset_m < 0)
            throw ConfigError("MFAPCConfig: theta reset bound must be > 0 (or 0 for auto), got " +
                              format_double(theta_reset_m));
        if (!(std::abs(phi0) >= epsilon))
            throw ConfigError("MFAPCConfig: |phi0| must be >= epsilon (" + format_double(epsilon) +
                              ") so resets restore a valid estimate, got " + format_double(phi0));
        horizon_samples();  // throws on bad dt / too-short horizon
    }
};

inline int sign_of(double v) { return (v > 0) - (v < 0); }

// Recursive estimate of the increment gain phi = dy/du, projected back to the
// assumed sign and minimum magnitude whenever the raw update leaves them.
class PPDEstimator {
public:
    PPDEstimator(double phi1, int n_m)
        : phi1_(phi1), phi_hat_(phi1), history_(Eigen::VectorXd::Constant(n_m, phi1)) {
        if (n_m < 1) throw ArgumentError("PPDEstimator: history length must be >= 1");
    }

    double phi_hat() const { return phi_hat_; }
    double phi1() const { return phi1_; }
    // Most recent first: [phi_k, phi_{k-1}, ...].
    const Eigen::VectorXd& history() const { return history_; }
    // True when the raw estimate broke the sign/magnitude assumption this step.
    bool guard_fired() const { return last_guard_; }
    // True when any reset clause fired, including a dead input increment.
    bool reset_fired() const { return last_reset_; }
    double prev_u() const { return prev_u_; }
    double prev_y() const { return prev_y_; }
    double prev_du() const { return prev_du_; }

    // Inject known previous-step data (tests, priming).
    void seed_previous(double u, double y, double du) {
        prev_u_ = u;
        prev_y_ = y;
        prev_du_ = du;
    }

    // Record the input actually applied this tick; the increment it implies
    // feeds the next update.
    void record_input(double u_applied) {
        prev_du_ = u_applied - prev_u_;
        prev_u_ = u_applied;
    }

    void update(double y_k, const MFAPCConfig& cfg) {
        const double du = prev_du_;
        const double dy = y_k - prev_y_;
        const double raw =
            phi_hat_ + cfg.eta * du / (cfg.mu + du * du) * (dy - phi_hat_ * du);
        last_guard_ = std::abs(raw) < cfg.epsilon || sign_of(raw) != sign_of(phi1_);
        last_reset_ = last_guard_ || std::abs(du) <= cfg.epsilon;
        phi_hat_ = last_reset_ ? phi1_ : raw;
        for (Eigen::Index i = history_.size() - 1; i > 0; --i) history_(i) = history_(i - 1);
        history_(0) = phi_hat_;
        prev_y_ = y_k;
    }

private:
    double phi1_;
    double phi_hat_;
    Eigen::VectorXd history_;
    double prev_u_ = 0.0;
    double prev_y_ = 0.0;
    double prev_du_ = 0.0;
    bool last_guard_ = false;
    bool last_reset_ = false;
};

// Linear autoregressive model of the gain sequence, fit recursively; resets to
// its initial coefficients if the norm runs away.
class PPDForecaster {
public:
    PPDForecaster(Eigen::VectorXd theta0, double bound)
        : theta_(theta0), theta1_(std::move(theta0)), bound_(bound) {
        if (theta_.size() < 1) throw DimensionError("PPDForecaster: empty coefficient vector");
        if (!(bound_ > 0)) throw ArgumentError("PPDForecaster: reset bound must be > 0");
    }

    const Eigen::VectorXd& theta() const { return theta_; }
    bool reset_fired() const { return last_reset_; }

    // h holds the regressor [phi_{k-1}, ..., phi_{k-n_m}]; phi_now is the
    // freshly estimated phi_k the model should have predicted.
    void update(const Eigen::VectorXd& h, double phi_now, double delta) {
        if (h.size() != theta_.size())
            throw DimensionError("PPDForecaster: regressor has " + std::to_string(h.size()) +
                                 " entries, expected " + std::to_string(theta_.size()));
        theta_ += h / (delta + h.squaredNorm()) * (phi_now - h.dot(theta_));
        last_reset_ = theta_.norm() >= bound_;
        if (last_reset_) theta_ = theta1_;
    }

    // Roll the model `count` steps past the window [phi_k, phi_{k-1}, ...];
    // each forecast joins the window for the next and is projected back to the
    // assumed sign/magnitude like the estimate itself.
    std::vector<double> forecast(Eigen::VectorXd window, int count, double phi1,
                                 double epsilon) const {
        if (window.size() != theta_.size())
            throw DimensionError("PPDForecaster: window has " + std::to_string(window.size()) +
                                 " entries, expected " + std::to_string(theta_.size()));
        std::vector<double> out;
        out.reserve(static_cast<size_t>(count > 0 ? count : 0));
        for (int j = 0; j < count; ++j) {
            double f = theta_.dot(window);
            if (std::abs(f) < epsilon || sign_of(f) != sign_of(phi1)) f = phi1;
            for (Eigen::Index i = window.size() - 1; i > 0; --i) window(i) = window(i - 1);
            window(0) = f;
            out.push_back(f);
        }
        return out;
    }

private:
    Eigen::VectorXd theta_;
    Eigen::VectorXd theta1_;
    double bound_;
    bool last_reset_ = false;
};

// N x N lower-triangular prediction matrix: column j carries the j-step-ahead
// gain, so row i predicts y_{k+i+1} = y_k + sum_{j<=i} A(i,j) du_{k+j}.
inline Eigen::MatrixXd prediction_matrix(double phi_now, const std::vector<double>& forecasts,
                                         int horizon) {
    if (horizon < 1) throw ArgumentError("prediction_matrix: horizon must be >= 1");
    if (static_cast<int>(forecasts.size()) != horizon - 1)
        throw DimensionError("prediction_matrix: got " + std::to_string(forecasts.size()) +
                             " forecasts, horizon " + std::to_string(horizon) + " needs " +
                             std::to_string(horizon - 1));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(horizon, horizon);
    for (int j = 0; j < horizon; ++j) {
        const double phi = j == 0 ? phi_now : forecasts[static_cast<size_t>(j - 1)];
        for (int i = j; i < horizon; ++i) a(i, j) = phi;
    }
    return a;
}

struct ControlIncrements {
    Eigen::VectorXd delta_u;
    double solve_residual = 0.0;  // infinity norm of the normal-equation residual
};

// delta_u = (A'A + lambda I)^-1 A' (y_star - y_k * ones). Strictly positive
// lambda makes the system positive definite, so LLT cannot fail here.
inline ControlIncrements control_increments(const Eigen::MatrixXd& a,
                                            const Eigen::VectorXd& y_star, double y_k,
                                            double lambda) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n) throw DimensionError("control_increments: prediction matrix must be square");
    if (y_star.size() != n)
        throw DimensionError("control_increments: reference has " + std::to_string(y_star.size()) +
                             " entries, horizon is " + std::to_string(n));
    if (!(lambda > 0)) throw ArgumentError("control_increments: lambda must be > 0");
    const Eigen::MatrixXd gram =
        a.transpose() * a + lambda * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd rhs = a.transpose() * (y_star - Eigen::VectorXd::Constant(n, y_k));
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw Error("control_increments: regularized normal equations lost positive definiteness");
    ControlIncrements out;
    out.delta_u = llt.solve(rhs);
    out.solve_residual = (gram * out.delta_u - rhs).lpNorm<Eigen::Infinity>();
    return out;
}

class MFAPCController final : public Controller {
public:
    explicit MFAPCController(MFAPCConfig cfg)
        : cfg_(validated(std::move(cfg))),
          horizon_(cfg_.horizon_samples()),
          estimator_(cfg_.phi0, cfg_.n_m),
          forecaster_(cfg_.theta0, cfg_.theta_bound()) {}

    int input_dim() const override { return 1; }
    int output_dim() const override { return 1; }
    int horizon() const override { return horizon_; }

    const MFAPCConfig& config() const { return cfg_; }
    const PPDEstimator& estimator() const { return estimator_; }
    const PPDForecaster& forecaster() const { return forecaster_; }
    double last_delta_u() const { return last_delta_u_; }
    double last_solve_residual() const { return last_solve_residual_; }

    Eigen::VectorXd step(const Eigen::VectorXd& y, const Eigen::MatrixXd& reference) override {
        const auto started = std::chrono::steady_clock::now();
        if (y.size() != 1)
            throw DimensionError("MFAPCController: measurement has " + std::to_string(y.size()) +
                                 " channels, expected 1");
        if (reference.rows() != 1 || reference.cols() != horizon_)
            throw DimensionError("MFAPCController: reference window is " +
                                 std::to_string(reference.rows()) + "x" +
                                 std::to_string(reference.cols()) + ", expected 1x" +
                                 std::to_string(horizon_));
        if (!primed_) {  // no increments exist yet; make the first update a clean no-op
            estimator_.seed_previous(0.0, y(0), 0.0);
            primed_ = true;
        }
        const Eigen::VectorXd regressor = estimator_.history();
        estimator_.update(y(0), cfg_);
        forecaster_.update(regressor, estimator_.phi_hat(), cfg_.delta);
        const std::vector<double> ahead =
            forecaster_.forecast(estimator_.history(), horizon_ - 1, cfg_.phi0, cfg_.epsilon);
        const Eigen::MatrixXd a = prediction_matrix(estimator_.phi_hat(), ahead, horizon_);
        const ControlIncrements inc =
            control_increments(a, reference.row(0).transpose(), y(0), cfg_.lambda);
        last_delta_u_ = inc.delta_u(0);
        last_solve_residual_ = inc.solve_residual;
        const double u = prev_u_ + cfg_.rho * last_delta_u_;
        ++step_count_;
        last_compute_s_ =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return Eigen::VectorXd::Constant(1, u);
    }

    void observe(const Eigen::VectorXd& u_applied, const Eigen::VectorXd&,
                 const Eigen::VectorXd&) override {
        if (u_applied.size() != 1)
            throw DimensionError("MFAPCController: applied input has " +
                                 std::to_string(u_applied.size()) + " channels, expected 1");
        estimator_.record_input(u_applied(0));
        prev_u_ = u_applied(0);
    }

    std::string diag_header() const override {
        return "phi_hat,guard_fired,norm_theta,delta_u,compute_time_s";
    }
    std::string diag_row() const override {
        return format_double(estimator_.phi_hat()) + "," +
               (estimator_.guard_fired() ? "1" : "0") + "," +
               format_double(forecaster_.theta().norm()) + "," + format_double(last_delta_u_) +
               "," + format_double(last_compute_s_);
    }

private:
    static MFAPCConfig validated(MFAPCConfig cfg) {
        cfg.validate();
        return cfg;
    }

    MFAPCConfig cfg_;
    int horizon_;
    PPDEstimator estimator_;
    PPDForecaster forecaster_;
    double prev_u_ = 0.0;
    bool primed_ = false;
    int step_count_ = 0;
    double last_delta_u_ = 0.0;
    double last_solve_residual_ = 0.0;
    double last_compute_s_ = 0.0;
};

}  // namespace ddpc
