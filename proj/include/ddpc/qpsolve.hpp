#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddpc/errors.hpp"
#include "ddpc/trajectory.hpp"  // format_double

namespace ddpc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex QP with equality constraints and box bounds:
//   minimize 0.5 x'Px + q'x + offset   s.t.  Aeq x = beq,  lower <= x <= upper
// P must be symmetric PSD and strictly convex on the nullspace of Aeq.
struct QPProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd Aeq;   // may have zero rows
    Eigen::VectorXd beq;
    Eigen::VectorXd lower; // empty = all -inf
    Eigen::VectorXd upper; // empty = all +inf
    double offset = 0.0;   // constant term, reported in the objective

    Eigen::Index n() const { return P.rows(); }
    Eigen::Index meq() const { return Aeq.rows(); }

    double objective(const Eigen::VectorXd& x) const {
        return 0.5 * x.dot(P * x) + q.dot(x) + offset;
    }

    void validate() const {
        if (P.rows() != P.cols())
            throw DimensionError("QPProblem: P is " + std::to_string(P.rows()) + "x" +
                                 std::to_string(P.cols()) + ", must be square");
        if (q.size() != n())
            throw DimensionError("QPProblem: q has size " + std::to_string(q.size()) +
                                 ", expected " + std::to_string(n()));
        if (meq() > 0 && Aeq.cols() != n())
            throw DimensionError("QPProblem: Aeq has " + std::to_string(Aeq.cols()) +
                                 " columns, expected " + std::to_string(n()));
        if (beq.size() != meq())
            throw DimensionError("QPProblem: beq has size " + std::to_string(beq.size()) +
                                 ", expected " + std::to_string(meq()));
        if (lower.size() != 0 && lower.size() != n())
            throw DimensionError("QPProblem: lower has size " + std::to_string(lower.size()) +
                                 ", expected " + std::to_string(n()));
        if (upper.size() != 0 && upper.size() != n())
            throw DimensionError("QPProblem: upper has size " + std::to_string(upper.size()) +
                                 ", expected " + std::to_string(n()));
        const double asym = (P - P.transpose()).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
        if (asym > 1e-10 * scale)
            throw ArgumentError("QPProblem: P is not symmetric (max asymmetry " +
                                format_double(asym) + ")");
    }

    Eigen::VectorXd lower_or_inf() const {
        return lower.size() == n() ? lower : Eigen::VectorXd::Constant(n(), -kInf);
    }
    Eigen::VectorXd upper_or_inf() const {
        return upper.size() == n() ? upper : Eigen::VectorXd::Constant(n(), kInf);
    }
    bool has_finite_bounds() const {
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (std::isfinite(lower(i))) return true;
        for (Eigen::Index i = 0; i < upper.size(); ++i)
            if (std::isfinite(upper(i))) return true;
        return false;
    }
};

enum class QPStatus { optimal, max_iter, infeasible };

inline const char* to_string(QPStatus s) {
    switch (s) {
        case QPStatus::optimal: return "optimal";
        case QPStatus::max_iter: return "max_iter";
        case QPStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

struct QPSolution {
    Eigen::VectorXd x;
    Eigen::VectorXd eq_multipliers;
    double objective = 0.0;
    int iterations = 0;
    // Scaled residuals: constraint violation and stationarity, each divided
    // by the magnitude of the terms entering them. status == optimal implies
    // both are below the configured tolerance.
    double primal_residual = kInf;
    double dual_residual = kInf;
    QPStatus status = QPStatus::max_iter;
};

struct SolveOptions {
    double tol = 1e-8;
    int max_iter = 20000;
    Eigen::VectorXd warm_start;   // empty = cold start
    bool check_convexity = false; // eigenvalue test on the constraint nullspace
};

// --- plain-text debug format ------------------------------------------------

inline std::string to_debug_string(const QPProblem& p) {
    std::ostringstream os;
    auto row = [&os](const Eigen::VectorXd& v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) os << ' ';
            double x = v(i);
            if (x == kInf)
                os << "inf";
            else if (x == -kInf)
                os << "-inf";
            else
                os << format_double(x);
        }
        os << '\n';
    };
    os << "ddpc-qp 1\n";
    os << "n " << p.n() << " meq " << p.meq() << '\n';
    os << "offset " << format_double(p.offset) << '\n';
    os << "P\n";
    for (Eigen::Index i = 0; i < p.n(); ++i) row(p.P.row(i));
    os << "q\n";
    row(p.q);
    os << "Aeq\n";
    for (Eigen::Index i = 0; i < p.meq(); ++i) row(p.Aeq.row(i));
    os << "beq\n";
    row(p.beq);
    os << "lower\n";
    row(p.lower_or_inf());
    os << "upper\n";
    row(p.upper_or_inf());
    return os.str();
}

inline QPProblem from_debug_string(const std::string& text) {
    std::istringstream is(text);
    std::string tag;
    int version = 0;
    is >> tag >> version;
    if (tag != "ddpc-qp" || version != 1)
        throw DataError("from_debug_string: bad header '" + tag + "'");
    Eigen::Index n = 0, meq = 0;
    std::string key;
    is >> key >> n >> key >> meq;
    QPProblem p;
    auto expect = [&is](const char* want) {
        std::string got;
        is >> got;
        if (got != want)
            throw DataError(std::string("from_debug_string: expected section '") + want +
                            "', got '" + got + "'");
    };
    auto value = [&is]() {
        std::string cell;
        if (!(is >> cell)) throw DataError("from_debug_string: truncated matrix data");
        if (cell == "inf") return kInf;
        if (cell == "-inf") return -kInf;
        return std::stod(cell);
    };
    expect("offset");
    p.offset = value();
    expect("P");
    p.P.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) p.P(i, j) = value();
    expect("q");
    p.q.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.q(i) = value();
    expect("Aeq");
    p.Aeq.resize(meq, n);
    for (Eigen::Index i = 0; i < meq; ++i)
        for (Eigen::Index j = 0; j < n; ++j) p.Aeq(i, j) = value();
    expect("beq");
    p.beq.resize(meq);
    for (Eigen::Index i = 0; i < meq; ++i) p.beq(i) = value();
    expect("lower");
    p.lower.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.lower(i) = value();
    expect("upper");
    p.upper.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) p.upper(i) = value();
    return p;
}

// --- direct KKT oracle --------------------------------------------------------

// Symmetric diagonal equilibration scale for a KKT-style matrix: weights with
// very different magnitudes (e.g. a 1e7 slack penalty next to unit costs)
// otherwise masquerade as rank deficiency under pivot-based tests.
inline Eigen::VectorXd equilibration_scale(const Eigen::MatrixXd& K) {
    Eigen::VectorXd d(K.rows());
    for (Eigen::Index i = 0; i < K.rows(); ++i) {
        const double rn = K.row(i).lpNorm<Eigen::Infinity>();
        d(i) = rn > 0 ? 1.0 / std::sqrt(rn) : 1.0;
    }
    return d;
}

// Independent reference path: equality-constrained QPs solved in one shot via
//   [P  Aeq'; Aeq  0] [x; nu] = [-q; beq]
// Rejects problems with finite bounds; throws on a singular KKT matrix.
inline QPSolution kkt_solve(const QPProblem& p) {
    p.validate();
    if (p.has_finite_bounds())
        throw ArgumentError("kkt_solve: problem has finite bounds; only equality-constrained "
                            "problems are supported");
    const Eigen::Index n = p.n(), m = p.meq();
    Eigen::MatrixXd K(n + m, n + m);
    K.setZero();
    K.topLeftCorner(n, n) = p.P;
    if (m > 0) {
        K.topRightCorner(n, m) = p.Aeq.transpose();
        K.bottomLeftCorner(m, n) = p.Aeq;
    }
    const Eigen::VectorXd d = equilibration_scale(K);
    const Eigen::MatrixXd Ks = d.asDiagonal() * K * d.asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Ks);
    if (!lu.isInvertible())
        throw DegeneracyError("kkt_solve: singular KKT matrix (rank " +
                              std::to_string(lu.rank()) + " of " + std::to_string(n + m) + ")");
    Eigen::VectorXd rhs(n + m);
    rhs.head(n) = -p.q;
    rhs.tail(m) = p.beq;
    Eigen::VectorXd sol = d.cwiseProduct(lu.solve(d.cwiseProduct(rhs)));
    // One step of iterative refinement in the original scale.
    sol += d.cwiseProduct(lu.solve(d.cwiseProduct(rhs - K * sol)));

    QPSolution out;
    out.x = sol.head(n);
    out.eq_multipliers = sol.tail(m);
    out.objective = p.objective(out.x);
    out.iterations = 1;
    const Eigen::VectorXd stat = p.P * out.x + p.q + p.Aeq.transpose() * out.eq_multipliers;
    const double dscale = std::max({1.0, (p.P * out.x).lpNorm<Eigen::Infinity>(),
                                    p.q.lpNorm<Eigen::Infinity>()});
    out.dual_residual = stat.lpNorm<Eigen::Infinity>() / dscale;
    if (m > 0) {
        const double pscale = std::max({1.0, p.beq.lpNorm<Eigen::Infinity>(),
                                        (p.Aeq * out.x).lpNorm<Eigen::Infinity>()});
        out.primal_residual = (p.Aeq * out.x - p.beq).lpNorm<Eigen::Infinity>() / pscale;
    } else {
        out.primal_residual = 0.0;
    }
    out.status = QPStatus::optimal;
    return out;
}

// --- operator-splitting solver ------------------------------------------------

// Alternates between an equality-constrained quadratic step (cached KKT
// factorization) and projection onto the box, with over-relaxation. The
// factorization is reused across solves as long as P, Aeq and the derived
// penalty weights are unchanged, which makes receding-horizon resolves cheap.
class QPSolver {
public:
    QPSolution solve(const QPProblem& p, const SolveOptions& opt = {}) {
        p.validate();
        const Eigen::Index n = p.n();
        const Eigen::VectorXd lo = p.lower_or_inf();
        const Eigen::VectorXd hi = p.upper_or_inf();

        // Empty box: trivially infeasible.
        for (Eigen::Index i = 0; i < n; ++i)
            if (lo(i) > hi(i)) {
                QPSolution out;
                out.x = Eigen::VectorXd::Zero(n);
                out.status = QPStatus::infeasible;
                return out;
            }

        if (!cache_ || !cache_matches(p)) build_cache(p, opt.check_convexity);
        else if (opt.check_convexity && !cache_->convexity_checked) {
            verify_convexity(p);
            cache_->convexity_checked = true;
        }
        Cache& c = *cache_;

        // Inconsistent equalities: the reduced rows are independent, so the
        // dropped rows must be implied; check them against a particular
        // solution of the kept system.
        if (!c.dropped_rows.empty()) {
            const Eigen::VectorXd b_red = select(p.beq, c.kept_rows);
            const Eigen::VectorXd x_p =
                c.A_red.transpose() * c.aat_llt.solve(b_red);  // min-norm solution
            for (Eigen::Index r : c.dropped_rows) {
                const double lhs = p.Aeq.row(r).dot(x_p);
                const double scale = std::max({1.0, std::abs(p.beq(r)), std::abs(lhs)});
                if (std::abs(lhs - p.beq(r)) > 1e-8 * scale) {
                    QPSolution out;
                    out.x = Eigen::VectorXd::Zero(n);
                    out.status = QPStatus::infeasible;
                    return out;
                }
            }
        }

        const Eigen::Index m = c.m_red;
        const Eigen::VectorXd b_red = select(p.beq, c.kept_rows);

        auto clamp = [&](const Eigen::VectorXd& v) {
            return v.cwiseMax(lo).cwiseMin(hi).eval();
        };

        Eigen::VectorXd z = opt.warm_start.size() == n ? clamp(opt.warm_start)
                                                       : clamp(Eigen::VectorXd::Zero(n));
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd xt = z;
        Eigen::VectorXd nu = Eigen::VectorXd::Zero(m);

        constexpr double alpha = 1.6;  // over-relaxation
        QPSolution out;
        out.status = QPStatus::max_iter;

        Eigen::VectorXd rhs(n + m), y_chk, nu_chk;
        int it = 0;
        for (it = 1; it <= opt.max_iter; ++it) {
            rhs.head(n) = -p.q + c.rho.cwiseProduct(z - w);
            rhs.tail(m) = b_red;
            const Eigen::VectorXd sol =
                c.kkt_scale.cwiseProduct(c.lu.solve(c.kkt_scale.cwiseProduct(rhs)));
            xt = sol.head(n);
            nu = sol.tail(m);

            const Eigen::VectorXd x_relax = alpha * xt + (1.0 - alpha) * z;
            z = clamp(x_relax + w);
            w += x_relax - z;

            // Scaled termination test.
            const Eigen::VectorXd y = c.rho.cwiseProduct(w);
            const double r_cons = (xt - z).lpNorm<Eigen::Infinity>();
            const double r_eq =
                m > 0 ? (c.A_red * xt - b_red).lpNorm<Eigen::Infinity>() : 0.0;
            const double p_scale =
                std::max({1.0, xt.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(),
                          b_red.size() > 0 ? b_red.lpNorm<Eigen::Infinity>() : 0.0});
            const Eigen::VectorXd Px = c.Pmat * xt;
            const Eigen::VectorXd Atnu = m > 0 ? (c.A_red.transpose() * nu).eval()
                                               : Eigen::VectorXd::Zero(n).eval();
            const Eigen::VectorXd stat = Px + p.q + Atnu + y;
            const double d_scale =
                std::max({1.0, Px.lpNorm<Eigen::Infinity>(), p.q.lpNorm<Eigen::Infinity>(),
                          Atnu.lpNorm<Eigen::Infinity>(), y.lpNorm<Eigen::Infinity>()});
            out.primal_residual = std::max(r_cons, r_eq) / p_scale;
            out.dual_residual = stat.lpNorm<Eigen::Infinity>() / d_scale;
            if (out.primal_residual <= opt.tol && out.dual_residual <= opt.tol) {
                out.status = QPStatus::optimal;
                break;
            }

            // Infeasibility certificate: a direction of dual growth that the
            // box supports at negative value proves the constraint sets are
            // disjoint (equalities reachable only outside the box).
            if (it % 50 == 0) {
                if (y_chk.size() == n) {
                    const Eigen::VectorXd dy = y - y_chk;
                    const Eigen::VectorXd dnu = nu - nu_chk;
                    const double dy_norm = dy.lpNorm<Eigen::Infinity>();
                    const double dnu_norm = m > 0 ? dnu.lpNorm<Eigen::Infinity>() : 0.0;
                    const double dir_scale = std::max(dy_norm, dnu_norm);
                    if (dir_scale > 1e-12) {
                        const Eigen::VectorXd dir_res =
                            (m > 0 ? (c.A_red.transpose() * dnu).eval()
                                   : Eigen::VectorXd::Zero(n).eval()) +
                            dy;
                        double support = m > 0 ? b_red.dot(dnu) : 0.0;
                        bool unbounded_dir = false;
                        for (Eigen::Index i = 0; i < n; ++i) {
                            if (dy(i) > 0) {
                                if (!std::isfinite(hi(i))) { unbounded_dir = true; break; }
                                support += hi(i) * dy(i);
                            } else if (dy(i) < 0) {
                                if (!std::isfinite(lo(i))) { unbounded_dir = true; break; }
                                support += lo(i) * dy(i);
                            }
                        }
                        if (!unbounded_dir &&
                            dir_res.lpNorm<Eigen::Infinity>() <= 1e-6 * dir_scale &&
                            support < -1e-6 * dir_scale) {
                            out.x = clamp(xt);
                            out.eq_multipliers = nu;
                            out.iterations = it;
                            out.status = QPStatus::infeasible;
                            return out;
                        }
                    }
                }
                y_chk = y;
                nu_chk = nu;
            }
        }

        out.x = clamp(xt);  // bounds hold exactly; equalities to tolerance
        out.eq_multipliers = nu;
        out.iterations = std::min(it, opt.max_iter);
        out.objective = p.objective(out.x);
        return out;
    }

private:
    struct Cache {
        Eigen::MatrixXd Pmat, Amat;  // fingerprint of the factorized problem
        Eigen::VectorXd rho;
        std::vector<Eigen::Index> kept_rows, dropped_rows;
        Eigen::MatrixXd A_red;
        Eigen::LLT<Eigen::MatrixXd> aat_llt;  // of A_red A_red' (consistency checks)
        Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of the equilibrated KKT matrix
        Eigen::VectorXd kkt_scale;
        Eigen::Index m_red = 0;
        bool convexity_checked = false;
    };

    static Eigen::VectorXd select(const Eigen::VectorXd& v,
                                  const std::vector<Eigen::Index>& idx) {
        Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
        return out;
    }

    bool cache_matches(const QPProblem& p) const {
        return cache_ && cache_->Pmat.rows() == p.P.rows() && cache_->Pmat == p.P &&
               cache_->Amat.rows() == p.Aeq.rows() && cache_->Amat.cols() == p.Aeq.cols() &&
               cache_->Amat == p.Aeq;
    }

    void verify_convexity(const QPProblem& p) const {
        const Cache& c = *cache_;
        Eigen::MatrixXd Z;
        if (c.m_red == 0) {
            Z = Eigen::MatrixXd::Identity(p.n(), p.n());
        } else {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(c.A_red);
            Z = lu.kernel();
            if (Z.cols() == 0) return;  // fully pinned: trivially strictly convex
        }
        const Eigen::MatrixXd Pz = Z.transpose() * p.P * Z;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Pz + Pz.transpose()));
        const double min_eig = es.eigenvalues().minCoeff();
        const double max_eig = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        if (min_eig <= 1e-12 * max_eig)
            throw DegeneracyError(
                "QPSolver: problem is not strictly convex on the equality nullspace "
                "(min eigenvalue " + format_double(min_eig) + ")");
    }

    void build_cache(const QPProblem& p, bool check_convexity) {
        Cache c;
        c.Pmat = 0.5 * (p.P + p.P.transpose());
        c.Amat = p.Aeq;
        const Eigen::Index n = p.n();

        // Penalty weights follow the curvature of P coordinate-wise, clamped
        // around the mean scale so wildly mixed weights still converge.
        const double frob = c.Pmat.norm();
        const double mean_scale = std::max(1e-8, frob / static_cast<double>(n));
        c.rho.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
            c.rho(i) = std::clamp(c.Pmat(i, i), 1e-3 * mean_scale, 1e3 * mean_scale);

        // Keep an independent subset of equality rows (rank-revealing QR of
        // Aeq'); dependent rows are checked for consistency at solve time.
        if (p.meq() > 0) {
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(p.Aeq.transpose());
            const Eigen::Index rank = qr.rank();
            const auto& perm = qr.colsPermutation().indices();
            std::vector<char> kept(static_cast<std::size_t>(p.meq()), 0);
            for (Eigen::Index i = 0; i < rank; ++i) kept[static_cast<std::size_t>(perm(i))] = 1;
            for (Eigen::Index r = 0; r < p.meq(); ++r)
                (kept[static_cast<std::size_t>(r)] ? c.kept_rows : c.dropped_rows).push_back(r);
            c.A_red.resize(rank, n);
            for (std::size_t i = 0; i < c.kept_rows.size(); ++i)
                c.A_red.row(static_cast<Eigen::Index>(i)) = p.Aeq.row(c.kept_rows[i]);
            c.m_red = rank;
            if (!c.dropped_rows.empty())
                c.aat_llt.compute(c.A_red * c.A_red.transpose());
        } else {
            c.m_red = 0;
            c.A_red.resize(0, n);
        }

        Eigen::MatrixXd K(n + c.m_red, n + c.m_red);
        K.setZero();
        K.topLeftCorner(n, n) = c.Pmat;
        K.topLeftCorner(n, n).diagonal() += c.rho;
        if (c.m_red > 0) {
            K.topRightCorner(n, c.m_red) = c.A_red.transpose();
            K.bottomLeftCorner(c.m_red, n) = c.A_red;
        }
        c.kkt_scale = equilibration_scale(K);
        c.lu.compute(c.kkt_scale.asDiagonal() * K * c.kkt_scale.asDiagonal());
        const Eigen::VectorXd udiag = c.lu.matrixLU().diagonal().cwiseAbs();
        if (udiag.minCoeff() < 1e-12 * std::max(1.0, udiag.maxCoeff()))
            throw DegeneracyError("QPSolver: near-singular KKT system (pivot ratio " +
                                  format_double(udiag.minCoeff() /
                                                std::max(1.0, udiag.maxCoeff())) + ")");
        cache_ = std::move(c);
        if (check_convexity) {
            verify_convexity(p);
            cache_->convexity_checked = true;
        }
    }

    std::optional<Cache> cache_;
};

// One-shot convenience wrapper (no factorization reuse across calls).
inline QPSolution solve(const QPProblem& p, const SolveOptions& opt = {}) {
    QPSolver solver;
    return solver.solve(p, opt);
}

}  // namespace ddpc
