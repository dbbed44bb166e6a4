#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddpc/controller.hpp"
#include "ddpc/errors.hpp"
#include "ddpc/qpsolve.hpp"
#include "ddpc/signals.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Data-enabled predictive control. A depth-(Tini+N) Hankel of offline
// input/output data parameterizes all length-(Tini+N) trajectories of the
// plant via a combination vector g; each tick a QP anchors the past Tini
// samples to the measured window (with a slack on the output side), tracks an
// artificial setpoint pair (u_s, y_s) over the horizon, pins the trajectory
// tail to that pair, and applies the first predicted input.

struct DeePCConfig {
    double data_length_s = 20.0;  // offline window T
    double init_window_s = 0.3;   // anchoring window Tini
    double horizon_s = 0.5;       // prediction horizon N
    double dt = 0.1;

    // Scalar weights broadcast to identity-scaled matrices; full-matrix
    // overrides must be symmetric with matching dimensions.
    double q = 100.0;  // predicted output vs artificial setpoint
    double s = 300.0;  // artificial setpoint vs reference
    double r = 10.0;   // predicted input vs artificial input
    std::optional<Eigen::MatrixXd> q_mat, s_mat, r_mat;

    double lambda_g = 50.0;
    double lambda_sigma = 1e7;

    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    double y_min = -std::numeric_limits<double>::infinity();
    double y_max = std::numeric_limits<double>::infinity();

    bool rolling = false;           // keep assimilating closed-loop data
    std::optional<int> declared_order;  // plant order bound for the excitation gate
    bool slack_on_future = false;   // extend the output slack to the predicted window

    int data_samples() const { return samples_from_seconds(data_length_s, dt, "DeePCConfig: T"); }
    int init_samples() const { return samples_from_seconds(init_window_s, dt, "DeePCConfig: Tini"); }
    int horizon_samples() const { return samples_from_seconds(horizon_s, dt, "DeePCConfig: N"); }

    void validate() const {
        const int t = data_samples(), tini = init_samples(), n = horizon_samples();
        if (!(lambda_g > 0))
            throw ConfigError("DeePCConfig: lambda_g must be > 0, got " + format_double(lambda_g));
        if (!(lambda_sigma > 0))
            throw ConfigError("DeePCConfig: lambda_sigma must be > 0, got " +
                              format_double(lambda_sigma));
        if (q < 0 || s < 0 || r < 0)
            throw ConfigError("DeePCConfig: weights must be >= 0, got Q = " + format_double(q) +
                              ", S = " + format_double(s) + ", R = " + format_double(r));
        if (t < tini + n)
            throw ConfigError("DeePCConfig: T = " + std::to_string(t) + " samples < Tini + N = " +
                              std::to_string(tini + n));
        if (tini > n)
            throw ConfigError("DeePCConfig: Tini = " + std::to_string(tini) + " samples > N = " +
                              std::to_string(n) +
                              "; the trajectory tail pinned to the setpoint cannot exceed the "
                              "horizon");
        if (u_min > u_max || y_min > y_max)
            throw ConfigError("DeePCConfig: empty box, [" + format_double(u_min) + ", " +
                              format_double(u_max) + "] x [" + format_double(y_min) + ", " +
                              format_double(y_max) + "]");
        if (declared_order && *declared_order < 0)
            throw ConfigError("DeePCConfig: declared order must be >= 0, got " +
                              std::to_string(*declared_order));
    }
};

// Scalar weight broadcast / matrix override resolution shared with WKPC.
inline Eigen::MatrixXd resolve_weight(double scalar, const std::optional<Eigen::MatrixXd>& full,
                                      int dim, const std::string& name) {
    if (!full) return scalar * Eigen::MatrixXd::Identity(dim, dim);
    if (full->rows() != dim || full->cols() != dim)
        throw DimensionError(name + " weight matrix is " + std::to_string(full->rows()) + "x" +
                             std::to_string(full->cols()) + ", expected " + std::to_string(dim) +
                             "x" + std::to_string(dim));
    if (!full->isApprox(full->transpose(), 1e-12))
        throw ArgumentError(name + " weight matrix must be symmetric");
    return *full;
}

class DeePCController final : public Controller {
public:
    DeePCController(DeePCConfig cfg, const Trajectory& offline_u, const Trajectory& offline_y)
        : cfg_(validated(std::move(cfg))),
          m_(offline_u.channels()),
          l_(offline_y.channels()),
          tini_(cfg_.init_samples()),
          n_(cfg_.horizon_samples()),
          t_(cfg_.data_samples()),
          buffer_(DataBuffer::from_pair(offline_u, offline_y, t_,
                                        cfg_.rolling ? DataBuffer::Mode::rolling
                                                     : DataBuffer::Mode::frozen)),
          recent_u_(m_, cfg_.dt),
          recent_y_(l_, cfg_.dt) {
        if (offline_u.length() != t_)
            throw DataError("DeePCController: offline data has " +
                            std::to_string(offline_u.length()) + " samples, config T = " +
                            std::to_string(t_));
        check_excitation(offline_u);
        // Prime the anchoring windows from the tail of the offline record.
        for (int k = t_ - tini_; k < t_; ++k) {
            recent_u_.push_back(offline_u.sample(k));
            recent_y_.push_back(offline_y.sample(k));
        }
        q_w_ = resolve_weight(cfg_.q, cfg_.q_mat, l_, "DeePCConfig: Q");
        s_w_ = resolve_weight(cfg_.s, cfg_.s_mat, l_, "DeePCConfig: S");
        r_w_ = resolve_weight(cfg_.r, cfg_.r_mat, m_, "DeePCConfig: R");
    }

    int input_dim() const override { return m_; }
    int output_dim() const override { return l_; }
    int horizon() const override { return n_; }

    const DeePCConfig& config() const { return cfg_; }
    const DataBuffer& buffer() const { return buffer_; }
    int g_dim() const { return buffer_.length() - (tini_ + n_) + 1; }
    int pe_achieved() const { return pe_achieved_; }
    // Non-empty when the excitation gate could only be checked partially.
    const std::string& warning() const { return warning_; }

    double last_objective() const { return last_objective_; }
    double last_norm_g() const { return last_norm_g_; }
    double last_norm_sigma() const { return last_norm_sigma_; }
    double last_solve_time_s() const { return last_solve_time_; }
    QPStatus last_status() const { return last_status_; }
    int last_iterations() const { return last_iterations_; }
    // The assembled problem and solution of the most recent step (oracle hooks).
    const QPProblem& last_problem() const { return last_problem_; }
    const Eigen::VectorXd& last_solution() const { return last_x_; }

    Eigen::VectorXd step(const Eigen::VectorXd& y, const Eigen::MatrixXd& reference) override {
        const auto started = std::chrono::steady_clock::now();
        (void)y;  // feedback enters through the observe()-shifted windows
        if (reference.rows() != l_ || reference.cols() != n_)
            throw DimensionError("DeePCController: reference window is " +
                                 std::to_string(reference.rows()) + "x" +
                                 std::to_string(reference.cols()) + ", expected " +
                                 std::to_string(l_) + "x" + std::to_string(n_));
        assemble(reference);
        SolveOptions opt;
        if (last_x_.size() == last_problem_.q.size()) opt.warm_start = shifted_warm_start();
        const QPSolution sol = solver_.solve(last_problem_, opt);
        if (sol.status == QPStatus::infeasible)
            throw InfeasibleError("DeePCController: step QP infeasible",
                                  to_debug_string(last_problem_));
        last_x_ = sol.x;
        last_objective_ = sol.objective;
        last_norm_g_ = sol.x.head(ng_).norm();
        last_norm_sigma_ = sol.x.segment(off_s_, ns_).norm();
        last_status_ = sol.status;
        last_iterations_ = sol.iterations;
        last_solve_time_ =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return sol.x.segment(off_u_, m_);
    }

    void observe(const Eigen::VectorXd& u_applied, const Eigen::VectorXd& y,
                 const Eigen::VectorXd&) override {
        if (u_applied.size() != m_ || y.size() != l_)
            throw DimensionError("DeePCController: observe got dims (" +
                                 std::to_string(u_applied.size()) + ", " +
                                 std::to_string(y.size()) + "), expected (" + std::to_string(m_) +
                                 ", " + std::to_string(l_) + ")");
        recent_u_.pop_front();
        recent_u_.push_back(u_applied);
        recent_y_.pop_front();
        recent_y_.push_back(y);
        if (cfg_.rolling) buffer_.append(u_applied, y);
    }

    std::string diag_header() const override {
        return "objective,norm_g,norm_sigma,solve_time_s,status";
    }
    std::string diag_row() const override {
        return format_double(last_objective_) + "," + format_double(last_norm_g_) + "," +
               format_double(last_norm_sigma_) + "," + format_double(last_solve_time_) + "," +
               to_string(last_status_);
    }

private:
    static DeePCConfig validated(DeePCConfig cfg) {
        cfg.validate();
        return cfg;
    }

    void check_excitation(const Trajectory& offline_u) {
        pe_achieved_ = persistent_excitation_order(offline_u);
        const int base = tini_ + n_;
        if (cfg_.declared_order) {
            const int required = base + *cfg_.declared_order;
            if (pe_achieved_ < required)
                throw DataError("DeePCController: offline input excitation order " +
                                std::to_string(pe_achieved_) + " < required " +
                                std::to_string(required) + " (Tini + N + declared order)");
        } else if (pe_achieved_ < base) {
            warning_ = "offline input excitation order " + std::to_string(pe_achieved_) +
                       " is below Tini + N = " + std::to_string(base) +
                       " and no plant order bound was declared";
        } else {
            warning_ = "plant order bound not declared; verified excitation order " +
                       std::to_string(pe_achieved_) + " >= Tini + N = " + std::to_string(base) +
                       " only";
        }
    }

    // Variable layout: [g | u (N*m) | y (N*l) | sigma | u_s (m) | y_s (l)].
    void assemble(const Eigen::MatrixXd& reference) {
        const int depth = tini_ + n_;
        ng_ = g_dim();
        ns_ = (cfg_.slack_on_future ? tini_ + n_ : tini_) * l_;
        off_u_ = ng_;
        off_y_ = off_u_ + n_ * m_;
        off_s_ = off_y_ + n_ * l_;
        off_us_ = off_s_ + ns_;
        off_ys_ = off_us_ + m_;
        const int nvar = off_ys_ + l_;

        const HankelView hu = build_hankel(buffer_.stream(0), depth, tini_, n_);
        const HankelView hy = build_hankel(buffer_.stream(1), depth, tini_, n_);

        QPProblem p;
        p.P = Eigen::MatrixXd::Zero(nvar, nvar);
        p.q = Eigen::VectorXd::Zero(nvar);
        p.offset = 0.0;

        p.P.topLeftCorner(ng_, ng_) = 2.0 * cfg_.lambda_g * Eigen::MatrixXd::Identity(ng_, ng_);
        p.P.block(off_s_, off_s_, ns_, ns_) =
            2.0 * cfg_.lambda_sigma * Eigen::MatrixXd::Identity(ns_, ns_);
        for (int k = 0; k < n_; ++k) {
            const int yk = off_y_ + k * l_;
            p.P.block(yk, yk, l_, l_) += 2.0 * q_w_;
            p.P.block(yk, off_ys_, l_, l_) -= 2.0 * q_w_;
            p.P.block(off_ys_, yk, l_, l_) -= 2.0 * q_w_;
            const int uk = off_u_ + k * m_;
            p.P.block(uk, uk, m_, m_) += 2.0 * r_w_;
            p.P.block(uk, off_us_, m_, m_) -= 2.0 * r_w_;
            p.P.block(off_us_, uk, m_, m_) -= 2.0 * r_w_;
            const Eigen::VectorXd rk = reference.col(k);
            p.q.segment(off_ys_, l_) -= 2.0 * s_w_ * rk;
            p.offset += rk.dot(s_w_ * rk);
        }
        p.P.block(off_ys_, off_ys_, l_, l_) += 2.0 * n_ * (q_w_ + s_w_);
        p.P.block(off_us_, off_us_, m_, m_) += 2.0 * n_ * r_w_;

        const int meq = tini_ * (m_ + l_) + n_ * (m_ + l_) + tini_ * (m_ + l_);
        p.Aeq = Eigen::MatrixXd::Zero(meq, nvar);
        p.beq = Eigen::VectorXd::Zero(meq);
        int row = 0;
        // Past input window: U_p g = u_ini.
        p.Aeq.block(row, 0, tini_ * m_, ng_) = hu.past();
        p.beq.segment(row, tini_ * m_) = recent_u_.stacked(0, tini_);
        row += tini_ * m_;
        // Past output window with slack: Y_p g - sigma_p = y_ini.
        p.Aeq.block(row, 0, tini_ * l_, ng_) = hy.past();
        p.Aeq.block(row, off_s_, tini_ * l_, tini_ * l_) =
            -Eigen::MatrixXd::Identity(tini_ * l_, tini_ * l_);
        p.beq.segment(row, tini_ * l_) = recent_y_.stacked(0, tini_);
        row += tini_ * l_;
        // Predicted windows: U_f g = u, Y_f g = y (the latter optionally slacked).
        p.Aeq.block(row, 0, n_ * m_, ng_) = hu.future();
        p.Aeq.block(row, off_u_, n_ * m_, n_ * m_) =
            -Eigen::MatrixXd::Identity(n_ * m_, n_ * m_);
        row += n_ * m_;
        p.Aeq.block(row, 0, n_ * l_, ng_) = hy.future();
        p.Aeq.block(row, off_y_, n_ * l_, n_ * l_) =
            -Eigen::MatrixXd::Identity(n_ * l_, n_ * l_);
        if (cfg_.slack_on_future)
            p.Aeq.block(row, off_s_ + tini_ * l_, n_ * l_, n_ * l_) =
                -Eigen::MatrixXd::Identity(n_ * l_, n_ * l_);
        row += n_ * l_;
        // Trajectory tail pinned to the artificial setpoint pair.
        for (int k = n_ - tini_; k < n_; ++k) {
            p.Aeq.block(row, off_u_ + k * m_, m_, m_) = Eigen::MatrixXd::Identity(m_, m_);
            p.Aeq.block(row, off_us_, m_, m_) = -Eigen::MatrixXd::Identity(m_, m_);
            row += m_;
        }
        for (int k = n_ - tini_; k < n_; ++k) {
            p.Aeq.block(row, off_y_ + k * l_, l_, l_) = Eigen::MatrixXd::Identity(l_, l_);
            p.Aeq.block(row, off_ys_, l_, l_) = -Eigen::MatrixXd::Identity(l_, l_);
            row += l_;
        }

        p.lower = Eigen::VectorXd::Constant(nvar, -std::numeric_limits<double>::infinity());
        p.upper = Eigen::VectorXd::Constant(nvar, std::numeric_limits<double>::infinity());
        p.lower.segment(off_u_, n_ * m_).setConstant(cfg_.u_min);
        p.upper.segment(off_u_, n_ * m_).setConstant(cfg_.u_max);
        p.lower.segment(off_y_, n_ * l_).setConstant(cfg_.y_min);
        p.upper.segment(off_y_, n_ * l_).setConstant(cfg_.y_max);
        last_problem_ = std::move(p);
    }

    // Receding-horizon warm start: predicted windows slide one sample.
    Eigen::VectorXd shifted_warm_start() const {
        Eigen::VectorXd w = last_x_;
        auto shift = [&](int off, int chans, int count) {
            for (int k = 0; k + 1 < count; ++k)
                w.segment(off + k * chans, chans) = last_x_.segment(off + (k + 1) * chans, chans);
            w.segment(off + (count - 1) * chans, chans).setZero();
        };
        shift(off_u_, m_, n_);
        shift(off_y_, l_, n_);
        return w;
    }

    DeePCConfig cfg_;
    int m_, l_, tini_, n_, t_;
    DataBuffer buffer_;
    Trajectory recent_u_, recent_y_;
    Eigen::MatrixXd q_w_, s_w_, r_w_;
    QPSolver solver_;
    QPProblem last_problem_;
    Eigen::VectorXd last_x_;
    int pe_achieved_ = 0;
    std::string warning_;
    int last_iterations_ = 0;
    int ng_ = 0, ns_ = 0, off_u_ = 0, off_y_ = 0, off_s_ = 0, off_us_ = 0, off_ys_ = 0;
    double last_objective_ = 0.0, last_norm_g_ = 0.0, last_norm_sigma_ = 0.0,
           last_solve_time_ = 0.0;
    QPStatus last_status_ = QPStatus::optimal;
};

}  // namespace ddpc
