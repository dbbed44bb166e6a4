#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include "ddpc/qpsolve.hpp"
#include "ddpc/rng.hpp"
#include "oracles.hpp"

using ddpc::kInf;
using ddpc::QPProblem;
using ddpc::QPSolution;
using ddpc::QPSolver;
using ddpc::QPStatus;
using ddpc::SolveOptions;

namespace {

// Strictly convex random QP: P = MM' + aI, optional equality rows and a few
// finite bounds. Constructed feasible by anchoring beq to an in-box point.
QPProblem random_qp(ddpc::Rng& rng, int n, int meq, int bounded, double curvature = 0.3) {
    QPProblem p;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = rng.uniform(-1, 1);
    p.P = M * M.transpose() + curvature * Eigen::MatrixXd::Identity(n, n);
    p.q.resize(n);
    for (int i = 0; i < n; ++i) p.q(i) = rng.uniform(-2, 2);
    p.lower = Eigen::VectorXd::Constant(n, -kInf);
    p.upper = Eigen::VectorXd::Constant(n, kInf);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = rng.uniform(-0.5, 0.5);
    for (int b = 0; b < bounded; ++b) {
        const int i = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(n));
        const double w = rng.uniform(0.05, 1.0);
        p.lower(i) = x0(i) - w;
        p.upper(i) = x0(i) + rng.uniform(0.05, 1.0);
    }
    if (meq > 0) {
        p.Aeq.resize(meq, n);
        for (int i = 0; i < meq; ++i)
            for (int j = 0; j < n; ++j) p.Aeq(i, j) = rng.uniform(-1, 1);
        p.beq = p.Aeq * x0;
    } else {
        p.Aeq.resize(0, n);
        p.beq.resize(0);
    }
    return p;
}

}  // namespace

TEST_CASE("unconstrained scalar minimum") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
    p.q = Eigen::VectorXd::Constant(1, -4.0);
    p.Aeq.resize(0, 1);
    p.beq.resize(0);
    const auto sol = ddpc::solve(p);
    REQUIRE(sol.status == QPStatus::optimal);
    REQUIRE_THAT(sol.x(0), Catch::Matchers::WithinAbs(2.0, 1e-7));
    REQUIRE_THAT(sol.objective, Catch::Matchers::WithinAbs(-4.0, 1e-7));
}

TEST_CASE("equality constraint splits the minimum symmetrically") {
    QPProblem p;
    p.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    p.q = Eigen::VectorXd::Zero(2);
    p.Aeq = Eigen::MatrixXd::Constant(1, 2, 1.0);
    p.beq = Eigen::VectorXd::Constant(1, 2.0);
    const auto sol = ddpc::solve(p);
    REQUIRE(sol.status == QPStatus::optimal);
    REQUIRE_THAT(sol.x(0), Catch::Matchers::WithinAbs(1.0, 1e-7));
    REQUIRE_THAT(sol.x(1), Catch::Matchers::WithinAbs(1.0, 1e-7));
}

TEST_CASE("active upper bound clips the unconstrained minimum") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Constant(1, 1, 2.0);
    p.q = Eigen::VectorXd::Constant(1, -4.0);
    p.Aeq.resize(0, 1);
    p.beq.resize(0);
    p.lower = Eigen::VectorXd::Constant(1, 0.0);
    p.upper = Eigen::VectorXd::Constant(1, 1.0);
    const auto sol = ddpc::solve(p);
    REQUIRE(sol.status == QPStatus::optimal);
    REQUIRE(sol.x(0) <= 1.0);  // bound holds exactly
    REQUIRE_THAT(sol.x(0), Catch::Matchers::WithinAbs(1.0, 1e-7));
}

TEST_CASE("kkt_solve pins equality-constrained problems in one shot") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Identity(3, 3);
    p.q = Eigen::VectorXd::Zero(3);
    p.Aeq.resize(1, 3);
    p.Aeq << 1, 1, 1;
    p.beq = Eigen::VectorXd::Constant(1, 3.0);
    const auto sol = ddpc::kkt_solve(p);
    REQUIRE(sol.status == QPStatus::optimal);
    for (int i = 0; i < 3; ++i) REQUIRE_THAT(sol.x(i), Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE(sol.iterations == 1);
}

TEST_CASE("kkt_solve rejects boxed problems and singular KKT matrices") {
    QPProblem boxed;
    boxed.P = Eigen::MatrixXd::Identity(2, 2);
    boxed.q = Eigen::VectorXd::Zero(2);
    boxed.Aeq.resize(0, 2);
    boxed.beq.resize(0);
    boxed.lower = Eigen::VectorXd::Constant(2, 0.0);
    boxed.upper = Eigen::VectorXd::Constant(2, 1.0);
    REQUIRE_THROWS_AS(ddpc::kkt_solve(boxed), ddpc::ArgumentError);

    QPProblem singular;
    singular.P = Eigen::MatrixXd::Zero(2, 2);  // flat objective, no constraints
    singular.q = Eigen::VectorXd::Zero(2);
    singular.Aeq.resize(0, 2);
    singular.beq.resize(0);
    REQUIRE_THROWS_AS(ddpc::kkt_solve(singular), ddpc::DegeneracyError);
}

TEST_CASE("splitting solver and KKT oracle agree on equality-only problems") {
    ddpc::Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + static_cast<int>(rng.raw() % 30);
        const int meq = static_cast<int>(rng.raw() % static_cast<std::uint64_t>(n));
        const QPProblem p = random_qp(rng, n, meq, 0);
        const auto admm = ddpc::solve(p, {.tol = 1e-10, .max_iter = 50000});
        const auto direct = ddpc::kkt_solve(p);
        REQUIRE(admm.status == QPStatus::optimal);
        REQUIRE((admm.x - direct.x).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("splitting solver matches exhaustive active-set enumeration on boxed problems") {
    ddpc::Rng rng(211);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 2 + static_cast<int>(rng.raw() % 8);
        const int meq = static_cast<int>(rng.raw() % 3) % n;
        const int bounded = 1 + static_cast<int>(rng.raw() % 5);
        const QPProblem p = random_qp(rng, n, meq, bounded);
        const auto admm = ddpc::solve(p, {.tol = 1e-10, .max_iter = 50000});
        REQUIRE(admm.status == QPStatus::optimal);
        Eigen::VectorXd ref;
        REQUIRE(oracle::active_set_qp(p.P, p.q, p.Aeq, p.beq, p.lower, p.upper, ref));
        REQUIRE((admm.x - ref).lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("perturbing the solution never improves the objective") {
    ddpc::Rng rng(307);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 3 + static_cast<int>(rng.raw() % 10);
        const int meq = static_cast<int>(rng.raw() % 3);
        const QPProblem p = random_qp(rng, n, meq, 2);
        const auto sol = ddpc::solve(p, {.tol = 1e-10, .max_iter = 50000});
        REQUIRE(sol.status == QPStatus::optimal);
        const double f0 = p.objective(sol.x);
        // The correction back onto the equalities must stay inside the box,
        // so it only redistributes over coordinates away from their bounds.
        std::vector<int> free_idx;
        for (int i = 0; i < n; ++i)
            if (sol.x(i) > p.lower(i) + 1e-7 && sol.x(i) < p.upper(i) - 1e-7)
                free_idx.push_back(i);
        Eigen::MatrixXd Af(p.meq(), free_idx.size());
        for (std::size_t c = 0; c < free_idx.size(); ++c)
            Af.col(static_cast<Eigen::Index>(c)) = p.Aeq.col(free_idx[c]);
        Eigen::MatrixXd pinv;
        if (p.meq() > 0)
            pinv = Af.transpose() *
                   (Af * Af.transpose()).ldlt().solve(
                       Eigen::MatrixXd::Identity(p.meq(), p.meq()));
        for (int i : free_idx) {
            for (const double d : {1e-4, -1e-4}) {
                Eigen::VectorXd xp = sol.x;
                xp(i) += d;
                if (p.meq() > 0) {
                    const Eigen::VectorXd corr = pinv * (p.Aeq * xp - p.beq);
                    for (std::size_t c = 0; c < free_idx.size(); ++c)
                        xp(free_idx[c]) -= corr(static_cast<Eigen::Index>(c));
                }
                const bool in_box = (xp.array() >= p.lower.array() - 1e-12).all() &&
                                    (xp.array() <= p.upper.array() + 1e-12).all();
                if (!in_box) continue;  // poke left the feasible region
                REQUIRE(p.objective(xp) >= f0 - 1e-8);
            }
        }
    }
}

TEST_CASE("halving the tolerance never worsens the final residuals") {
    ddpc::Rng rng(401);
    for (int rep = 0; rep < 5; ++rep) {
        const QPProblem p = random_qp(rng, 8, 2, 3);
        for (double tol : {1e-4, 1e-6, 1e-8}) {
            const auto loose = ddpc::solve(p, {.tol = tol});
            const auto tight = ddpc::solve(p, {.tol = tol / 2});
            REQUIRE(tight.primal_residual <= loose.primal_residual);
            REQUIRE(tight.dual_residual <= loose.dual_residual);
        }
    }
}

TEST_CASE("identical inputs give bit-identical solutions") {
    ddpc::Rng rng(503);
    const QPProblem p = random_qp(rng, 12, 3, 4);
    const auto a = ddpc::solve(p);
    const auto b = ddpc::solve(p);
    REQUIRE(a.x == b.x);
    REQUIRE(a.iterations == b.iterations);
}

TEST_CASE("warm starting from the solution converges at least as fast") {
    ddpc::Rng rng(601);
    const QPProblem p = random_qp(rng, 15, 4, 4);
    QPSolver solver;
    const auto cold = solver.solve(p);
    REQUIRE(cold.status == QPStatus::optimal);
    SolveOptions warm;
    warm.warm_start = cold.x;
    const auto hot = solver.solve(p, warm);
    REQUIRE(hot.status == QPStatus::optimal);
    REQUIRE(hot.iterations <= cold.iterations);
    REQUIRE((hot.x - cold.x).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("the factorization cache survives RHS-only changes") {
    ddpc::Rng rng(701);
    QPProblem p = random_qp(rng, 20, 5, 3);
    QPSolver solver;
    const auto first = solver.solve(p);
    REQUIRE(first.status == QPStatus::optimal);
    p.q *= 1.7;  // new linear term, same P/Aeq: cache must still be valid
    p.beq *= 0.5;
    const auto second = solver.solve(p);
    REQUIRE(second.status == QPStatus::optimal);
    const auto fresh = ddpc::kkt_solve([&] {
        QPProblem eq = p;
        eq.lower.resize(0);
        eq.upper.resize(0);
        return eq;
    }());
    // No bound is active in this instance, so the equality-only oracle applies.
    const bool inside = (second.x.array() > p.lower.array() + 1e-7).all() &&
                        (second.x.array() < p.upper.array() - 1e-7).all();
    if (inside) REQUIRE((second.x - fresh.x).lpNorm<Eigen::Infinity>() < 1e-5);
}

TEST_CASE("an empty box is reported infeasible") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Identity(2, 2);
    p.q = Eigen::VectorXd::Zero(2);
    p.Aeq.resize(0, 2);
    p.beq.resize(0);
    p.lower = Eigen::VectorXd::Constant(2, 1.0);
    p.upper = Eigen::VectorXd::Constant(2, -1.0);
    REQUIRE(ddpc::solve(p).status == QPStatus::infeasible);
}

TEST_CASE("inconsistent equalities are reported infeasible") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Identity(2, 2);
    p.q = Eigen::VectorXd::Zero(2);
    p.Aeq.resize(2, 2);
    p.Aeq << 1, 1, 2, 2;  // parallel rows
    p.beq.resize(2);
    p.beq << 1, 3;        // incompatible right-hand sides
    REQUIRE(ddpc::solve(p).status == QPStatus::infeasible);
}

TEST_CASE("equalities unreachable inside the box are reported infeasible") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Identity(1, 1);
    p.q = Eigen::VectorXd::Zero(1);
    p.Aeq = Eigen::MatrixXd::Identity(1, 1);
    p.beq = Eigen::VectorXd::Constant(1, 5.0);  // x = 5
    p.lower = Eigen::VectorXd::Constant(1, 0.0);
    p.upper = Eigen::VectorXd::Constant(1, 1.0);  // but x in [0, 1]
    const auto sol = ddpc::solve(p);
    REQUIRE(sol.status == QPStatus::infeasible);
}

TEST_CASE("consistent duplicate equality rows are tolerated") {
    QPProblem p;
    p.P = 2.0 * Eigen::MatrixXd::Identity(2, 2);
    p.q = Eigen::VectorXd::Zero(2);
    p.Aeq.resize(2, 2);
    p.Aeq << 1, 1, 2, 2;  // dependent but consistent
    p.beq.resize(2);
    p.beq << 2, 4;
    const auto sol = ddpc::solve(p);
    REQUIRE(sol.status == QPStatus::optimal);
    REQUIRE_THAT(sol.x(0) + sol.x(1), Catch::Matchers::WithinAbs(2.0, 1e-7));
}

TEST_CASE("convexity check flags flat directions on the nullspace") {
    QPProblem p;
    p.P = Eigen::MatrixXd::Zero(2, 2);
    p.P(0, 0) = 2.0;  // flat along x2
    p.q = Eigen::VectorXd::Zero(2);
    p.Aeq.resize(0, 2);
    p.beq.resize(0);
    SolveOptions opt;
    opt.check_convexity = true;
    QPSolver solver;
    REQUIRE_THROWS_AS(solver.solve(p, opt), ddpc::DegeneracyError);

    // The same flat direction pinned by an equality passes.
    p.Aeq = Eigen::MatrixXd::Zero(1, 2);
    p.Aeq(0, 1) = 1.0;
    p.beq = Eigen::VectorXd::Constant(1, 0.5);
    QPSolver solver2;
    const auto sol = solver2.solve(p, opt);
    REQUIRE(sol.status == QPStatus::optimal);
    REQUIRE_THAT(sol.x(1), Catch::Matchers::WithinAbs(0.5, 1e-8));
}

TEST_CASE("debug dump round-trips exactly, infinities included") {
    ddpc::Rng rng(811);
    QPProblem p = random_qp(rng, 5, 2, 2);
    p.offset = 1.0 / 3.0;
    const std::string dump = ddpc::to_debug_string(p);
    const QPProblem back = ddpc::from_debug_string(dump);
    REQUIRE(back.P == p.P);
    REQUIRE(back.q == p.q);
    REQUIRE(back.Aeq == p.Aeq);
    REQUIRE(back.beq == p.beq);
    REQUIRE(back.lower == p.lower_or_inf());
    REQUIRE(back.upper == p.upper_or_inf());
    REQUIRE(back.offset == p.offset);
    // Second round trip is byte-stable.
    REQUIRE(ddpc::to_debug_string(back) == dump);
}

TEST_CASE("solver reports scaled residuals below tolerance at optimal status") {
    ddpc::Rng rng(907);
    for (int rep = 0; rep < 5; ++rep) {
        const QPProblem p = random_qp(rng, 10, 3, 3);
        const double tol = 1e-8;
        const auto sol = ddpc::solve(p, {.tol = tol});
        REQUIRE(sol.status == QPStatus::optimal);
        REQUIRE(sol.primal_residual <= tol);
        REQUIRE(sol.dual_residual <= tol);
    }
}
