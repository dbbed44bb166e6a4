#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ddpc/controller.hpp"
#include "ddpc/deepc.hpp"  // resolve_weight
#include "ddpc/errors.hpp"
#include "ddpc/qpsolve.hpp"
#include "ddpc/rng.hpp"
#include "ddpc/signals.hpp"
#include "ddpc/trajectory.hpp"

namespace ddpc {

// Willems-Koopman predictive control: measured states pass through a bank of
// radial basis functions, the lifted stream joins the input/output streams in
// one stacked Hankel, and each tick a QP anchors the past window in lifted
// coordinates and tracks the reference directly (no artificial setpoints, no
// slack).

// z_i(x) = r * log10(r) with r = |x - c_i|; continuous through r = 0.
class Lifter {
public:
    explicit Lifter(Eigen::MatrixXd centers) : centers_(std::move(centers)) {
        if (centers_.cols() < 1) throw ArgumentError("Lifter: need at least one center");
        for (Eigen::Index i = 0; i < centers_.cols(); ++i)
            for (Eigen::Index j = i + 1; j < centers_.cols(); ++j)
                if (centers_.col(i) == centers_.col(j))
                    throw DegeneracyError("Lifter: centers " + std::to_string(i) + " and " +
                                          std::to_string(j) + " coincide");
    }

    // Centers sampled uniformly from the bounding box of the observed points,
    // deterministically from the seed. A degenerate box (single point, or any
    // flat coordinate) is widened by 1e-6 so sampling cannot collapse.
    static Lifter from_data(const Trajectory& points, int n_p, std::uint64_t seed) {
        if (points.length() < 1) throw DataError("Lifter: no points to sample centers from");
        if (n_p < 1) throw ArgumentError("Lifter: n_p must be >= 1, got " + std::to_string(n_p));
        const int dim = points.channels();
        Eigen::VectorXd lo = points.sample(0), hi = points.sample(0);
        for (int k = 1; k < points.length(); ++k) {
            lo = lo.cwiseMin(points.sample(k));
            hi = hi.cwiseMax(points.sample(k));
        }
        for (int d = 0; d < dim; ++d) {
            if (hi(d) - lo(d) < 1e-12) {
                lo(d) -= 1e-6;
                hi(d) += 1e-6;
            }
        }
        Rng rng(seed);
        Eigen::MatrixXd centers(dim, n_p);
        for (int i = 0; i < n_p; ++i) {
            for (int attempt = 0;; ++attempt) {
                Eigen::VectorXd c(dim);
                for (int d = 0; d < dim; ++d) c(d) = rng.uniform(lo(d), hi(d));
                bool duplicate = false;
                for (int j = 0; j < i && !duplicate; ++j) duplicate = centers.col(j) == c;
                if (!duplicate) {
                    centers.col(i) = c;
                    break;
                }
                if (attempt >= 1000)
                    throw DegeneracyError("Lifter: could not sample distinct centers");
            }
        }
        return Lifter(std::move(centers));
    }

    int n_p() const { return static_cast<int>(centers_.cols()); }
    int state_dim() const { return static_cast<int>(centers_.rows()); }
    const Eigen::MatrixXd& centers() const { return centers_; }

    Eigen::VectorXd lift(const Eigen::VectorXd& x) const {
        if (x.size() != centers_.rows())
            throw DimensionError("Lifter: point has dim " + std::to_string(x.size()) +
                                 ", centers have dim " + std::to_string(centers_.rows()));
        Eigen::VectorXd z(centers_.cols());
        for (Eigen::Index i = 0; i < centers_.cols(); ++i) {
            const double r = (x - centers_.col(i)).norm();
            z(i) = r == 0.0 ? 0.0 : r * std::log10(r);
        }
        return z;
    }

private:
    Eigen::MatrixXd centers_;
};

struct WKPCConfig {
    double data_length_s = 20.0;  // offline window T
    double init_window_s = 0.2;   // anchoring window Tini
    double horizon_s = 0.5;       // prediction horizon N
    double dt = 0.1;

    double q = 1.0;  // tracking weight
    double r = 0.1;  // input-deviation weight
    std::optional<Eigen::MatrixXd> q_mat, r_mat;
    double lambda_g = 0.1;
    int n_p = 10;

    double u_min = -std::numeric_limits<double>::infinity();
    double u_max = std::numeric_limits<double>::infinity();
    double y_min = -std::numeric_limits<double>::infinity();
    double y_max = std::numeric_limits<double>::infinity();

    // Input-deviation target; empty broadcasts zeros.
    Eigen::VectorXd u_setpoint;

    bool rolling = false;
    std::uint64_t center_seed = 0;
    // Carry the predicted lifted window as free variables tied to the Hankel.
    bool include_future_lifted = false;
    // Lift a window of recent outputs instead of the measured state.
    bool delay_embedding = false;
    int embed_depth = 2;
    // Study flag: draw fresh centers (and re-lift everything) every step.
    bool resample_centers_each_step = false;

    int data_samples() const { return samples_from_seconds(data_length_s, dt, "WKPCConfig: T"); }
    int init_samples() const { return samples_from_seconds(init_window_s, dt, "WKPCConfig: Tini"); }
    int horizon_samples() const { return samples_from_seconds(horizon_s, dt, "WKPCConfig: N"); }

    void validate() const {
        const int t = data_samples(), tini = init_samples(), n = horizon_samples();
        if (!(lambda_g > 0))
            throw ConfigError("WKPCConfig: lambda_g must be > 0, got " + format_double(lambda_g));
        if (q < 0 || r < 0)
            throw ConfigError("WKPCConfig: weights must be >= 0, got Q = " + format_double(q) +
                              ", R = " + format_double(r));
        if (n_p < 1)
            throw ConfigError("WKPCConfig: n_p must be >= 1, got " + std::to_string(n_p));
        if (t < tini + n)
            throw ConfigError("WKPCConfig: T = " + std::to_string(t) + " samples < Tini + N = " +
                              std::to_string(tini + n));
        if (u_min > u_max || y_min > y_max)
            throw ConfigError("WKPCConfig: empty box, [" + format_double(u_min) + ", " +
                              format_double(u_max) + "] x [" + format_double(y_min) + ", " +
                              format_double(y_max) + "]");
        if (delay_embedding && embed_depth < 1)
            throw ConfigError("WKPCConfig: embed_depth must be >= 1, got " +
                              std::to_string(embed_depth));
        if (delay_embedding && t - (embed_depth - 1) < tini + n)
            throw ConfigError("WKPCConfig: T = " + std::to_string(t) + " samples leave " +
                              std::to_string(t - (embed_depth - 1)) +
                              " after embedding, need Tini + N = " + std::to_string(tini + n));
    }
};

class WKPCController final : public Controller {
public:
    // offline_x carries the lifting inputs (measured states). With delay
    // embedding it is ignored and the lifting inputs are built from windows of
    // offline_y instead, which costs the first embed_depth-1 samples.
    WKPCController(WKPCConfig cfg, const Trajectory& offline_u, const Trajectory& offline_y,
                   const Trajectory& offline_x, std::optional<Lifter> lifter = std::nullopt)
        : cfg_(validated(std::move(cfg))),
          m_(offline_u.channels()),
          l_(offline_y.channels()),
          tini_(cfg_.init_samples()),
          n_(cfg_.horizon_samples()),
          buffer_(make_buffer(cfg_, offline_u, offline_y, offline_x)),
          recent_u_(m_, cfg_.dt),
          recent_y_(l_, cfg_.dt),
          recent_s_(cfg_.delay_embedding ? cfg_.embed_depth * offline_y.channels()
                                         : offline_x.channels(),
                    cfg_.dt),
          embed_tail_(l_, cfg_.dt) {
        const int t = cfg_.data_samples();
        if (cfg_.u_setpoint.size() == 0) cfg_.u_setpoint = Eigen::VectorXd::Zero(m_);
        if (cfg_.u_setpoint.size() != m_)
            throw DimensionError("WKPCController: u_setpoint has " +
                                 std::to_string(cfg_.u_setpoint.size()) + " channels, inputs have " +
                                 std::to_string(m_));
        check_excitation(offline_u);
        if (buffer_.length() < tini_ + n_)
            throw DataError("WKPCController: " + std::to_string(buffer_.length()) +
                            " usable samples after embedding, need Tini + N = " +
                            std::to_string(tini_ + n_));

        lifter_ = lifter ? std::move(*lifter)
                         : Lifter::from_data(buffer_.stream(2), cfg_.n_p, cfg_.center_seed);
        if (lifter_->state_dim() != buffer_.stream(2).channels())
            throw DimensionError("WKPCController: lifter expects dim " +
                                 std::to_string(lifter_->state_dim()) + ", lifting inputs have " +
                                 std::to_string(buffer_.stream(2).channels()));

        for (int k = buffer_.length() - tini_; k < buffer_.length(); ++k) {
            recent_u_.push_back(buffer_.stream(0).sample(k));
            recent_y_.push_back(buffer_.stream(1).sample(k));
            recent_s_.push_back(buffer_.stream(2).sample(k));
        }
        if (cfg_.delay_embedding)
            for (int k = t - cfg_.embed_depth + 1; k < t; ++k)
                embed_tail_.push_back(offline_y.sample(k));
        q_w_ = resolve_weight(cfg_.q, cfg_.q_mat, l_, "WKPCConfig: Q");
        r_w_ = resolve_weight(cfg_.r, cfg_.r_mat, m_, "WKPCConfig: R");
    }

    int input_dim() const override { return m_; }
    int output_dim() const override { return l_; }
    int horizon() const override { return n_; }

    const WKPCConfig& config() const { return cfg_; }
    const Lifter& lifter() const { return *lifter_; }
    const DataBuffer& buffer() const { return buffer_; }
    int g_dim() const { return buffer_.length() - (tini_ + n_) + 1; }
    int pe_achieved() const { return pe_achieved_; }
    const std::string& warning() const { return warning_; }

    double last_objective() const { return last_objective_; }
    double last_norm_g() const { return last_norm_g_; }
    double last_solve_time_s() const { return last_solve_time_; }
    QPStatus last_status() const { return last_status_; }
    int last_iterations() const { return last_iterations_; }
    const QPProblem& last_problem() const { return last_problem_; }
    const Eigen::VectorXd& last_solution() const { return last_x_; }

    Eigen::VectorXd step(const Eigen::VectorXd& y, const Eigen::MatrixXd& reference) override {
        const auto started = std::chrono::steady_clock::now();
        (void)y;  // feedback enters through the observe()-shifted windows
        if (reference.rows() != l_ || reference.cols() != n_)
            throw DimensionError("WKPCController: reference window is " +
                                 std::to_string(reference.rows()) + "x" +
                                 std::to_string(reference.cols()) + ", expected " +
                                 std::to_string(l_) + "x" + std::to_string(n_));
        if (cfg_.resample_centers_each_step)
            lifter_ = Lifter::from_data(buffer_.stream(2), cfg_.n_p,
                                        cfg_.center_seed + 1 + static_cast<std::uint64_t>(steps_));
        assemble(reference);
        SolveOptions opt;
        if (last_x_.size() == last_problem_.q.size()) opt.warm_start = shifted_warm_start();
        const QPSolution sol = solver_.solve(last_problem_, opt);
        if (sol.status == QPStatus::infeasible)
            throw InfeasibleError("WKPCController: step QP infeasible",
                                  to_debug_string(last_problem_));
        last_x_ = sol.x;
        last_objective_ = sol.objective;
        last_norm_g_ = sol.x.head(ng_).norm();
        last_status_ = sol.status;
        last_iterations_ = sol.iterations;
        ++steps_;
        last_solve_time_ =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return sol.x.segment(off_u_, m_);
    }

    void observe(const Eigen::VectorXd& u_applied, const Eigen::VectorXd& y,
                 const Eigen::VectorXd& x) override {
        if (u_applied.size() != m_ || y.size() != l_)
            throw DimensionError("WKPCController: observe got dims (" +
                                 std::to_string(u_applied.size()) + ", " + std::to_string(y.size()) +
                                 "), expected (" + std::to_string(m_) + ", " + std::to_string(l_) +
                                 ")");
        Eigen::VectorXd s;
        if (cfg_.delay_embedding) {
            embed_tail_.push_back(y);
            while (embed_tail_.length() > cfg_.embed_depth) embed_tail_.pop_front();
            s.resize(cfg_.embed_depth * l_);
            for (int d = 0; d < cfg_.embed_depth; ++d)
                s.segment(d * l_, l_) = embed_tail_.sample(embed_tail_.length() - 1 - d);
        } else {
            if (x.size() != lifter_->state_dim())
                throw DimensionError("WKPCController: observed state has dim " +
                                     std::to_string(x.size()) + ", lifter expects " +
                                     std::to_string(lifter_->state_dim()));
            s = x;
        }
        recent_u_.pop_front();
        recent_u_.push_back(u_applied);
        recent_y_.pop_front();
        recent_y_.push_back(y);
        recent_s_.pop_front();
        recent_s_.push_back(s);
        if (cfg_.rolling) buffer_.append({u_applied, y, s});
    }

    std::string diag_header() const override {
        return "objective,norm_g,norm_sigma,solve_time_s,status";
    }
    std::string diag_row() const override {
        return format_double(last_objective_) + "," + format_double(last_norm_g_) + ",0," +
               format_double(last_solve_time_) + "," + to_string(last_status_);
    }

private:
    static WKPCConfig validated(WKPCConfig cfg) {
        cfg.validate();
        return cfg;
    }

    // Aligns the input, output, and lifting-input streams; delay embedding
    // costs the first embed_depth - 1 samples of warm-up.
    static DataBuffer make_buffer(const WKPCConfig& cfg, const Trajectory& offline_u,
                                  const Trajectory& offline_y, const Trajectory& offline_x) {
        const int t = cfg.data_samples();
        const int l = offline_y.channels();
        if (offline_u.length() != t || offline_y.length() != t)
            throw DataError("WKPCController: offline data has " +
                            std::to_string(offline_u.length()) + "/" +
                            std::to_string(offline_y.length()) + " samples, config T = " +
                            std::to_string(t));
        if (!cfg.delay_embedding && offline_x.length() != t)
            throw DataError("WKPCController: offline states have " +
                            std::to_string(offline_x.length()) + " samples, config T = " +
                            std::to_string(t));
        const int skip = cfg.delay_embedding ? cfg.embed_depth - 1 : 0;
        Trajectory u(offline_u.channels(), cfg.dt), y(l, cfg.dt),
            s(cfg.delay_embedding ? cfg.embed_depth * l : offline_x.channels(), cfg.dt);
        for (int k = skip; k < t; ++k) {
            u.push_back(offline_u.sample(k));
            y.push_back(offline_y.sample(k));
            if (cfg.delay_embedding) {
                Eigen::VectorXd e(cfg.embed_depth * l);
                for (int d = 0; d < cfg.embed_depth; ++d)
                    e.segment(d * l, l) = offline_y.sample(k - d);
                s.push_back(e);
            } else {
                s.push_back(offline_x.sample(k));
            }
        }
        return DataBuffer::from_streams({u, y, s}, t - skip,
                                        cfg.rolling ? DataBuffer::Mode::rolling
                                                    : DataBuffer::Mode::frozen);
    }

    void check_excitation(const Trajectory& offline_u) {
        pe_achieved_ = persistent_excitation_order(offline_u);
        const int required = tini_ + n_ + cfg_.n_p;
        if (pe_achieved_ < required)
            throw DataError("WKPCController: offline input excitation order " +
                            std::to_string(pe_achieved_) + " < required " +
                            std::to_string(required) + " (Tini + N + n_p)");
        if (pe_achieved_ == required)
            warning_ = "offline input excitation order " + std::to_string(pe_achieved_) +
                       " meets Tini + N + n_p = " + std::to_string(required) +
                       " with no margin";
    }

    Trajectory lift_stream(const Trajectory& src) const {
        Trajectory z(lifter_->n_p(), src.dt());
        for (int k = 0; k < src.length(); ++k) z.push_back(lifter_->lift(src.sample(k)));
        return z;
    }

    // Variable layout: [g | u (N*m) | y (N*l) | optional z_future (N*n_p)].
    void assemble(const Eigen::MatrixXd& reference) {
        const int depth = tini_ + n_;
        const int np = lifter_->n_p();
        ng_ = g_dim();
        off_u_ = ng_;
        off_y_ = off_u_ + n_ * m_;
        const int off_zf = off_y_ + n_ * l_;
        const int nzf = cfg_.include_future_lifted ? n_ * np : 0;
        const int nvar = off_zf + nzf;

        const Trajectory z_data = lift_stream(buffer_.stream(2));
        const HankelView hz = build_hankel(z_data, depth, tini_, n_);
        const HankelView hu = build_hankel(buffer_.stream(0), depth, tini_, n_);
        const HankelView hy = build_hankel(buffer_.stream(1), depth, tini_, n_);

        QPProblem p;
        p.P = Eigen::MatrixXd::Zero(nvar, nvar);
        p.q = Eigen::VectorXd::Zero(nvar);
        p.offset = 0.0;
        p.P.topLeftCorner(ng_, ng_) = 2.0 * cfg_.lambda_g * Eigen::MatrixXd::Identity(ng_, ng_);
        for (int k = 0; k < n_; ++k) {
            const int yk = off_y_ + k * l_;
            const int uk = off_u_ + k * m_;
            p.P.block(yk, yk, l_, l_) += 2.0 * q_w_;
            p.P.block(uk, uk, m_, m_) += 2.0 * r_w_;
            const Eigen::VectorXd rk = reference.col(k);
            p.q.segment(yk, l_) -= 2.0 * q_w_ * rk;
            p.offset += rk.dot(q_w_ * rk);
            p.q.segment(uk, m_) -= 2.0 * r_w_ * cfg_.u_setpoint;
            p.offset += cfg_.u_setpoint.dot(r_w_ * cfg_.u_setpoint);
        }

        const int meq = tini_ * (np + m_ + l_) + n_ * (m_ + l_) + nzf;
        p.Aeq = Eigen::MatrixXd::Zero(meq, nvar);
        p.beq = Eigen::VectorXd::Zero(meq);
        int row = 0;
        // Past windows anchored in lifted, input, and output coordinates.
        p.Aeq.block(row, 0, tini_ * np, ng_) = hz.past();
        Trajectory recent_z = lift_stream(recent_s_);
        p.beq.segment(row, tini_ * np) = recent_z.stacked(0, tini_);
        row += tini_ * np;
        p.Aeq.block(row, 0, tini_ * m_, ng_) = hu.past();
        p.beq.segment(row, tini_ * m_) = recent_u_.stacked(0, tini_);
        row += tini_ * m_;
        p.Aeq.block(row, 0, tini_ * l_, ng_) = hy.past();
        p.beq.segment(row, tini_ * l_) = recent_y_.stacked(0, tini_);
        row += tini_ * l_;
        // Predicted windows tied to the same combination vector.
        p.Aeq.block(row, 0, n_ * m_, ng_) = hu.future();
        p.Aeq.block(row, off_u_, n_ * m_, n_ * m_) =
            -Eigen::MatrixXd::Identity(n_ * m_, n_ * m_);
        row += n_ * m_;
        p.Aeq.block(row, 0, n_ * l_, ng_) = hy.future();
        p.Aeq.block(row, off_y_, n_ * l_, n_ * l_) =
            -Eigen::MatrixXd::Identity(n_ * l_, n_ * l_);
        row += n_ * l_;
        if (cfg_.include_future_lifted) {
            p.Aeq.block(row, 0, n_ * np, ng_) = hz.future();
            p.Aeq.block(row, off_zf, n_ * np, n_ * np) =
                -Eigen::MatrixXd::Identity(n_ * np, n_ * np);
            row += n_ * np;
        }

        p.lower = Eigen::VectorXd::Constant(nvar, -std::numeric_limits<double>::infinity());
        p.upper = Eigen::VectorXd::Constant(nvar, std::numeric_limits<double>::infinity());
        p.lower.segment(off_u_, n_ * m_).setConstant(cfg_.u_min);
        p.upper.segment(off_u_, n_ * m_).setConstant(cfg_.u_max);
        p.lower.segment(off_y_, n_ * l_).setConstant(cfg_.y_min);
        p.upper.segment(off_y_, n_ * l_).setConstant(cfg_.y_max);
        last_problem_ = std::move(p);
    }

    Eigen::VectorXd shifted_warm_start() const {
        Eigen::VectorXd w = last_x_;
        auto shift = [&](int off, int chans, int count) {
            for (int k = 0; k + 1 < count; ++k)
                w.segment(off + k * chans, chans) = last_x_.segment(off + (k + 1) * chans, chans);
            w.segment(off + (count - 1) * chans, chans).setZero();
        };
        shift(off_u_, m_, n_);
        shift(off_y_, l_, n_);
        if (cfg_.include_future_lifted) shift(off_y_ + n_ * l_, lifter_->n_p(), n_);
        return w;
    }

    WKPCConfig cfg_;
    int m_, l_, tini_, n_;
    DataBuffer buffer_;
    Trajectory recent_u_, recent_y_, recent_s_;
    Trajectory embed_tail_;
    std::optional<Lifter> lifter_;
    Eigen::MatrixXd q_w_, r_w_;
    QPSolver solver_;
    QPProblem last_problem_;
    Eigen::VectorXd last_x_;
    int pe_achieved_ = 0;
    std::string warning_;
    int last_iterations_ = 0;
    int steps_ = 0;
    int ng_ = 0, off_u_ = 0, off_y_ = 0;
    double last_objective_ = 0.0, last_norm_g_ = 0.0, last_solve_time_ = 0.0;
    QPStatus last_status_ = QPStatus::optimal;
};

}  // namespace ddpc
