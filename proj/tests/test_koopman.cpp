#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ddpc/koopman.hpp"
#include "ddpc/plants.hpp"
#include "ddpc/rng.hpp"

using Catch::Matchers::ContainsSubstring;
using ddpc::Lifter;
using ddpc::LtiPlant;
using ddpc::Trajectory;
using ddpc::WKPCConfig;
using ddpc::WKPCController;

namespace {

struct Record {
    Trajectory u, y, x;
    Eigen::VectorXd x_end;
};

// Excites a discrete SISO plant; sample k pairs (u_k, y_k, x_k) with y_k and
// x_k taken before u_k acts, matching the controller's observe convention.
Record excite(const LtiPlant& plant, int t, double dt, std::uint64_t seed) {
    ddpc::Rng rng(seed);
    Record r{Trajectory(1, dt), Trajectory(1, dt), Trajectory(plant.state_dim(), dt), {}};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(plant.state_dim());
    for (int k = 0; k < t; ++k) {
        const Eigen::VectorXd uk = Eigen::VectorXd::Constant(1, rng.uniform(-1.0, 1.0));
        r.y.push_back(plant.output(x));
        r.x.push_back(x);
        r.u.push_back(uk);
        x = plant.advance(x, uk, dt, 1);
    }
    r.x_end = x;
    return r;
}

Eigen::MatrixXd const_reference(double value, int l, int n) {
    return Eigen::MatrixXd::Constant(l, n, value);
}

WKPCConfig lti_config() {
    WKPCConfig cfg;  // Q = 1, R = 0.1, lambda_g = 0.1, n_p = 10 defaults
    return cfg;
}

}  // namespace

TEST_CASE("lifter center sampling is deterministic and contained in the data box") {
    Trajectory pts(2, 0.1);
    ddpc::Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd p(2);
        p << rng.uniform(-2.0, 1.0), rng.uniform(0.5, 4.0);
        pts.push_back(p);
    }
    const Lifter a = Lifter::from_data(pts, 10, 99);
    const Lifter b = Lifter::from_data(pts, 10, 99);
    REQUIRE(a.centers() == b.centers());
    REQUIRE(a.n_p() == 10);

    Eigen::VectorXd lo = pts.sample(0), hi = pts.sample(0);
    for (int k = 1; k < pts.length(); ++k) {
        lo = lo.cwiseMin(pts.sample(k));
        hi = hi.cwiseMax(pts.sample(k));
    }
    for (int i = 0; i < a.n_p(); ++i) {
        REQUIRE((a.centers().col(i).array() >= lo.array()).all());
        REQUIRE((a.centers().col(i).array() <= hi.array()).all());
    }

    const Lifter c = Lifter::from_data(pts, 10, 100);
    REQUIRE(a.centers() != c.centers());
}

TEST_CASE("degenerate point cloud falls back to a jittered sampling box") {
    Trajectory pts(2, 0.1);
    Eigen::VectorXd p(2);
    p << 0.7, -1.2;
    for (int k = 0; k < 5; ++k) pts.push_back(p);

    const Lifter lf = Lifter::from_data(pts, 8, 1);
    for (int i = 0; i < 8; ++i) {
        REQUIRE(((lf.centers().col(i) - p).cwiseAbs().array() <= 1e-6).all());
        for (int j = i + 1; j < 8; ++j) REQUIRE(lf.centers().col(i) != lf.centers().col(j));
    }
}

TEST_CASE("lift evaluates r log10 r with the continuity limit at zero") {
    Eigen::MatrixXd centers(2, 2);
    centers.col(0) << 0.0, 0.0;
    centers.col(1) << 5.0, 0.0;
    const Lifter lf(centers);

    Eigen::VectorXd x(2);
    x << 0.0, 0.0;  // at center 0, distance 5 from center 1
    Eigen::VectorXd z = lf.lift(x);
    REQUIRE(z(0) == 0.0);
    REQUIRE_THAT(z(1), Catch::Matchers::WithinRel(5.0 * std::log10(5.0), 1e-15));

    x << 1.0, 0.0;  // unit distance: log10(1) = 0
    REQUIRE(lf.lift(x)(0) == 0.0);

    x << 10.0, 0.0;  // r = 10 from center 0
    REQUIRE_THAT(lf.lift(x)(0), Catch::Matchers::WithinRel(10.0, 1e-15));

    // Continuity approaching a center: |z| = r |log10 r| -> 0.
    x << 1e-6, 0.0;
    REQUIRE(std::abs(lf.lift(x)(0)) <= 1e-6 * 6.0 + 1e-18);
    x << 1e-12, 0.0;
    REQUIRE(std::abs(lf.lift(x)(0)) <= 1e-12 * 12.0 + 1e-18);
}

TEST_CASE("lifter rejects malformed construction") {
    REQUIRE_THROWS_AS(Lifter(Eigen::MatrixXd(2, 0)), ddpc::ArgumentError);
    Eigen::MatrixXd dup(2, 2);
    dup.col(0) << 1.0, 2.0;
    dup.col(1) << 1.0, 2.0;
    REQUIRE_THROWS_AS(Lifter(dup), ddpc::DegeneracyError);

    Trajectory pts(2, 0.1);
    Eigen::VectorXd p(2);
    p << 0.0, 0.0;
    pts.push_back(p);
    REQUIRE_THROWS_AS(Lifter::from_data(pts, 0, 1), ddpc::ArgumentError);
    REQUIRE_THROWS_AS(Lifter::from_data(Trajectory(2, 0.1), 3, 1), ddpc::DataError);

    Eigen::MatrixXd centers = Eigen::MatrixXd::Identity(2, 2);
    const Lifter lf(centers);
    REQUIRE_THROWS_AS(lf.lift(Eigen::VectorXd::Zero(3)), ddpc::DimensionError);
}

TEST_CASE("wkpc config validation") {
    WKPCConfig ok = lti_config();
    REQUIRE_NOTHROW(ok.validate());

    WKPCConfig c = ok;
    c.lambda_g = 0.0;
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
    c = ok;
    c.q = -1.0;
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
    c = ok;
    c.n_p = 0;
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
    c = ok;
    c.data_length_s = 0.5;  // 5 samples < Tini + N = 7
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
    c = ok;
    c.u_min = 2.0;
    c.u_max = 1.0;
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
    c = ok;
    c.delay_embedding = true;
    c.embed_depth = 0;
    REQUIRE_THROWS_AS(c.validate(), ddpc::ConfigError);
}

TEST_CASE("benchmark-scale configuration produces the expected lifted problem dimensions") {
    // 20 s at dt = 0.1 with windows 0.2 s / 0.5 s: depth 7, 194 columns.
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 12);
    const Record rec = excite(plant, 200, 0.1, 5);
    WKPCController ctrl(lti_config(), rec.u, rec.y, rec.x);

    REQUIRE(ctrl.g_dim() == 194);
    REQUIRE(ctrl.pe_achieved() >= 2 + 5 + 10);
    REQUIRE(ctrl.warning().empty());

    ctrl.step(Eigen::VectorXd::Zero(1), const_reference(0.0, 1, 5));
    const ddpc::QPProblem& p = ctrl.last_problem();
    // Layout [g | u (5) | y (5)]; rows: lifted past 2*10, u/y past 2+2,
    // u/y future 5+5.
    REQUIRE(p.q.size() == 194 + 5 + 5);
    REQUIRE(p.Aeq.rows() == 34);
    REQUIRE(ctrl.last_status() == ddpc::QPStatus::optimal);
}

TEST_CASE("excitation gate always enforces the lifted order requirement") {
    const double dt = 0.1;

    SECTION("constant input is order one") {
        Trajectory u(1, dt), y(1, dt), x(2, dt);
        for (int k = 0; k < 200; ++k) {
            u.push_back(0.3);
            y.push_back(0.0);
            x.push_back(Eigen::VectorXd::Zero(2));
        }
        try {
            WKPCController ctrl(lti_config(), u, y, x);
            FAIL("expected DataError");
        } catch (const ddpc::DataError& e) {
            REQUIRE_THAT(e.what(), ContainsSubstring("excitation order 1"));
            REQUIRE_THAT(e.what(), ContainsSubstring("required 17"));
            REQUIRE_THAT(e.what(), ContainsSubstring("Tini + N + n_p"));
        }
    }

    SECTION("data of exactly the Hankel depth cannot satisfy the gate") {
        // T = L = 7 would leave a single combination column, but the
        // achievable excitation order (T + 1) / 2 = 4 can never reach
        // Tini + N + n_p, so init refuses the record outright.
        const LtiPlant plant = ddpc::make_random_stable_lti(2, 9);
        const Record rec = excite(plant, 7, dt, 7);
        WKPCConfig cfg = lti_config();
        cfg.data_length_s = 0.7;
        REQUIRE_THROWS_AS(WKPCController(cfg, rec.u, rec.y, rec.x), ddpc::DataError);
        // The single-column arithmetic itself holds at the Hankel level.
        REQUIRE(ddpc::build_hankel(rec.u, 7).block_cols == 1);
    }

    SECTION("meeting the requirement with no margin is a warning") {
        // 33 samples cap the verifiable order at exactly (33 + 1) / 2 = 17.
        const LtiPlant plant = ddpc::make_random_stable_lti(2, 9);
        const Record rec = excite(plant, 33, dt, 7);
        WKPCConfig cfg = lti_config();
        cfg.data_length_s = 3.3;
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        REQUIRE(ctrl.pe_achieved() == 17);
        REQUIRE_THAT(ctrl.warning(), ContainsSubstring("no margin"));
    }
}

TEST_CASE("resting equilibrium with matching reference returns the equilibrium input") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 25);
    const Record rec = excite(plant, 200, 0.1, 31);

    SECTION("origin with default input target") {
        WKPCConfig cfg = lti_config();
        // The combination penalty cannot vanish here (the lifted window of the
        // origin is nonzero), so it must be small for exactness.
        cfg.lambda_g = 1e-8;
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
        const Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
        for (int k = 0; k < 2; ++k) ctrl.observe(zero1, zero1, zero2);
        const Eigen::VectorXd u0 = ctrl.step(zero1, const_reference(0.0, 1, 5));
        REQUIRE(std::abs(u0(0)) < 1e-6);
    }

    SECTION("shifted equilibrium with matching input target") {
        const double u_star = 0.6;
        const Eigen::VectorXd x_star =
            (Eigen::MatrixXd::Identity(2, 2) - plant.A())
                .fullPivLu()
                .solve(plant.B() * Eigen::VectorXd::Constant(1, u_star));
        const double y_star = plant.output(x_star)(0);

        WKPCConfig cfg = lti_config();
        cfg.lambda_g = 1e-8;
        cfg.u_setpoint = Eigen::VectorXd::Constant(1, u_star);
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        const Eigen::VectorXd us = Eigen::VectorXd::Constant(1, u_star);
        const Eigen::VectorXd ys = Eigen::VectorXd::Constant(1, y_star);
        for (int k = 0; k < 2; ++k) ctrl.observe(us, ys, x_star);
        const Eigen::VectorXd u0 = ctrl.step(ys, const_reference(y_star, 1, 5));
        REQUIRE(std::abs(u0(0) - u_star) < 1e-6);
    }
}

TEST_CASE("with zero input weight the input target cannot matter") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 33);
    const Record rec = excite(plant, 200, 0.1, 37);
    WKPCConfig cfg = lti_config();
    cfg.r = 0.0;

    WKPCConfig cfg_b = cfg;
    cfg_b.u_setpoint = Eigen::VectorXd::Constant(1, 5.0);
    WKPCController a(cfg, rec.u, rec.y, rec.x), b(cfg_b, rec.u, rec.y, rec.x);

    const Eigen::MatrixXd ref = const_reference(0.2, 1, 5);
    Eigen::VectorXd x = rec.x_end;
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd yk = plant.output(x);
        const Eigen::VectorXd ua = a.step(yk, ref);
        const Eigen::VectorXd ub = b.step(yk, ref);
        REQUIRE(ua == ub);  // identical problems, bit-identical solves
        a.observe(ua, yk, x);
        b.observe(ua, yk, x);
        x = plant.advance(x, ua, cfg.dt, 1);
    }
}

TEST_CASE("per-step lifted solutions match the direct equality solver with inactive boxes") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 41);
    const Record rec = excite(plant, 200, 0.1, 43);
    WKPCController ctrl(lti_config(), rec.u, rec.y, rec.x);
    const Eigen::MatrixXd ref = const_reference(0.15, 1, 5);

    Eigen::VectorXd x = rec.x_end;
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd yk = plant.output(x);
        const Eigen::VectorXd uk = ctrl.step(yk, ref);
        const ddpc::QPSolution kkt = ddpc::kkt_solve(ctrl.last_problem());
        const double scale = std::max(1.0, kkt.x.lpNorm<Eigen::Infinity>());
        REQUIRE((ctrl.last_solution() - kkt.x).lpNorm<Eigen::Infinity>() < 1e-6 * scale);
        ctrl.observe(uk, yk, x);
        x = plant.advance(x, uk, 0.1, 1);
    }
}

TEST_CASE("applied inputs respect the box exactly under an aggressive reference") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 52);
    const Record rec = excite(plant, 200, 0.1, 47);
    WKPCConfig cfg = lti_config();
    cfg.u_min = -0.4;
    cfg.u_max = 0.4;
    WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
    const Eigen::MatrixXd ref = const_reference(4.0, 1, 5);

    Eigen::VectorXd x = rec.x_end;
    bool saturated = false;
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd yk = plant.output(x);
        const Eigen::VectorXd uk = ctrl.step(yk, ref);
        REQUIRE(uk(0) >= -0.4);
        REQUIRE(uk(0) <= 0.4);
        if (std::abs(uk(0)) == 0.4) saturated = true;
        ctrl.observe(uk, yk, x);
        x = plant.advance(x, uk, cfg.dt, 1);
    }
    REQUIRE(saturated);
}

TEST_CASE("noiseless regulation settles below one part in a thousand") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 61);
    const Record rec = excite(plant, 200, 0.1, 53);
    WKPCConfig cfg = lti_config();
    WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
    const Eigen::MatrixXd ref = const_reference(0.0, 1, 5);

    Eigen::VectorXd x = rec.x_end;
    double worst_tail = 0.0;
    for (int k = 0; k < 120; ++k) {
        const Eigen::VectorXd yk = plant.output(x);
        if (k >= 100) worst_tail = std::max(worst_tail, std::abs(yk(0)));
        const Eigen::VectorXd uk = ctrl.step(yk, ref);
        ctrl.observe(uk, yk, x);
        x = plant.advance(x, uk, cfg.dt, 1);
    }
    REQUIRE(worst_tail < 1e-3);
}

TEST_CASE("closed loop is bit-reproducible given the seed") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 71);
    const Record rec = excite(plant, 200, 0.1, 59);
    WKPCConfig cfg = lti_config();
    cfg.center_seed = 7;

    auto run = [&]() {
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        const Eigen::MatrixXd ref = const_reference(0.1, 1, 5);
        Eigen::VectorXd x = rec.x_end;
        std::vector<double> inputs;
        for (int k = 0; k < 8; ++k) {
            const Eigen::VectorXd yk = plant.output(x);
            const Eigen::VectorXd uk = ctrl.step(yk, ref);
            inputs.push_back(uk(0));
            ctrl.observe(uk, yk, x);
            x = plant.advance(x, uk, cfg.dt, 1);
        }
        return inputs;
    };
    REQUIRE(run() == run());
}

TEST_CASE("frozen lifted buffer ignores observations while rolling assimilates FIFO") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 81);
    const Record rec = excite(plant, 200, 0.1, 61);

    WKPCController frozen(lti_config(), rec.u, rec.y, rec.x);
    const Eigen::MatrixXd before = frozen.buffer().stream(2).matrix();
    const Eigen::VectorXd mark1 = Eigen::VectorXd::Constant(1, 9.0);
    const Eigen::VectorXd mark2 = Eigen::VectorXd::Constant(2, 9.0);
    frozen.observe(mark1, mark1, mark2);
    REQUIRE(frozen.buffer().stream(2).matrix() == before);

    WKPCConfig cfg = lti_config();
    cfg.rolling = true;
    WKPCController rolling(cfg, rec.u, rec.y, rec.x);
    const Eigen::VectorXd second = rolling.buffer().stream(0).sample(1);
    rolling.observe(mark1, mark1, mark2);
    REQUIRE(rolling.buffer().length() == 200);
    REQUIRE(rolling.buffer().stream(0).sample(199) == mark1);
    REQUIRE(rolling.buffer().stream(2).sample(199) == mark2);
    REQUIRE(rolling.buffer().stream(0).sample(0) == second);
}

TEST_CASE("delay embedding lifts windows of recent outputs instead of states") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 91);
    const Record rec = excite(plant, 200, 0.1, 67);
    WKPCConfig cfg = lti_config();
    cfg.delay_embedding = true;
    cfg.embed_depth = 2;
    // offline states are ignored in this mode
    WKPCController ctrl(cfg, rec.u, rec.y, rec.x);

    REQUIRE(ctrl.buffer().length() == 199);  // one warm-up sample consumed
    REQUIRE(ctrl.buffer().stream(2).channels() == 2);
    REQUIRE(ctrl.lifter().state_dim() == 2);
    // Embedded coordinate k holds [y_k; y_{k-1}].
    Eigen::VectorXd e(2);
    e << rec.y.sample(10)(0), rec.y.sample(9)(0);
    REQUIRE(ctrl.buffer().stream(2).sample(9) == e);

    const Eigen::MatrixXd ref = const_reference(0.1, 1, 5);
    Eigen::VectorXd x = rec.x_end;
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd yk = plant.output(x);
        const Eigen::VectorXd uk = ctrl.step(yk, ref);
        REQUIRE(ctrl.last_status() == ddpc::QPStatus::optimal);
        ctrl.observe(uk, yk, Eigen::VectorXd());  // state unavailable by design
        x = plant.advance(x, uk, cfg.dt, 1);
    }
}

TEST_CASE("study flags: per-step center resampling and carried lifted futures") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 95);
    const Record rec = excite(plant, 200, 0.1, 71);

    SECTION("per-step resampling draws fresh centers each step") {
        WKPCConfig cfg = lti_config();
        cfg.resample_centers_each_step = true;
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        const Eigen::MatrixXd ref = const_reference(0.0, 1, 5);
        ctrl.step(Eigen::VectorXd::Zero(1), ref);
        const Eigen::MatrixXd c1 = ctrl.lifter().centers();
        ctrl.step(Eigen::VectorXd::Zero(1), ref);
        const Eigen::MatrixXd c2 = ctrl.lifter().centers();
        REQUIRE(c1 != c2);
        REQUIRE(ctrl.last_status() == ddpc::QPStatus::optimal);
    }

    SECTION("carrying the predicted lifted window adds tied variables") {
        WKPCConfig cfg = lti_config();
        cfg.include_future_lifted = true;
        WKPCController ctrl(cfg, rec.u, rec.y, rec.x);
        ctrl.step(Eigen::VectorXd::Zero(1), const_reference(0.0, 1, 5));
        REQUIRE(ctrl.last_problem().q.size() == 194 + 5 + 5 + 5 * 10);
        REQUIRE(ctrl.last_problem().Aeq.rows() == 34 + 50);
        REQUIRE(ctrl.last_status() == ddpc::QPStatus::optimal);
    }
}

TEST_CASE("rolling assimilation shrinks the behavioral residual after a direction flip") {
    // The plant's input direction flips; with a rolling buffer the record
    // gradually turns over, and windows of flipped-plant behavior become
    // explainable again.
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 97);
    const LtiPlant flipped(plant.A(), -plant.B(), plant.C(), true);
    const Record rec = excite(plant, 200, 0.1, 73);

    WKPCConfig cfg = lti_config();
    cfg.rolling = true;
    WKPCController ctrl(cfg, rec.u, rec.y, rec.x);

    // A probe window of flipped dynamics, length Tini + N = 7.
    const Record probe = excite(flipped, 7, 0.1, 79);
    const auto residual = [&]() {
        return ddpc::behavioral_residual(ctrl.buffer().stream(0), ctrl.buffer().stream(1),
                                         probe.u, probe.y, 7);
    };
    const double before = residual();

    // Feed two hundred flipped-plant observations (open loop, no control).
    ddpc::Rng rng(83);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    for (int k = 0; k < 200; ++k) {
        const Eigen::VectorXd uk = Eigen::VectorXd::Constant(1, rng.uniform(-1.0, 1.0));
        ctrl.observe(uk, flipped.output(x), x);
        x = flipped.advance(x, uk, 0.1, 1);
    }
    const double after = residual();
    REQUIRE(before > 1e-3);   // flipped behavior genuinely foreign at first
    REQUIRE(after < 1e-8);    // fully assimilated record explains it exactly
}

TEST_CASE("wkpc diagnostics share the deepc schema") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 99);
    const Record rec = excite(plant, 200, 0.1, 89);
    WKPCController ctrl(lti_config(), rec.u, rec.y, rec.x);
    REQUIRE(ctrl.diag_header() == "objective,norm_g,norm_sigma,solve_time_s,status");

    ctrl.step(Eigen::VectorXd::Zero(1), const_reference(0.1, 1, 5));
    const std::string row = ctrl.diag_row();
    REQUIRE(std::count(row.begin(), row.end(), ',') == 4);
    REQUIRE_THAT(row, ContainsSubstring("optimal"));
}

TEST_CASE("wkpc dimension and data errors") {
    const LtiPlant plant = ddpc::make_random_stable_lti(2, 96);
    const Record rec = excite(plant, 200, 0.1, 91);
    WKPCController ctrl(lti_config(), rec.u, rec.y, rec.x);

    REQUIRE_THROWS_AS(ctrl.step(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 3)),
                      ddpc::DimensionError);
    REQUIRE_THROWS_AS(
        ctrl.observe(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(3)),
        ddpc::DimensionError);
    REQUIRE_THROWS_AS(WKPCController(lti_config(), Trajectory(1, 0.1), Trajectory(1, 0.1),
                                     Trajectory(2, 0.1)),
                      ddpc::DataError);

    WKPCConfig bad = lti_config();
    bad.u_setpoint = Eigen::VectorXd::Zero(2);
    REQUIRE_THROWS_AS(WKPCController(bad, rec.u, rec.y, rec.x), ddpc::DimensionError);
}
