#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>

#include <json.hpp>

#include "varpath/dynamics.hpp"

using namespace varpath;
using nlohmann::json;

namespace {

GeometrySpec from_text(const std::string& text) { return load_geometry(json::parse(text)); }

const char* kWeyl = R"json({
    "dim": 2, "coords": ["x0", "x1"],
    "metric": {"0,0": "1", "1,1": "1"},
    "nonmetricity": {"weyl": "2*x0"},
    "base_point": [0.0, 0.0]
})json";

const char* kCurved = R"json({
    "dim": 2, "coords": ["x0", "x1"],
    "metric": {"0,0": "1", "1,1": "1"},
    "nonmetricity": {"0,1,1": "(-2*x0)/(1 + x0^2)", "1,0,1": "(x0^3)/(1 + x0^2)"},
    "base_point": [0.0, 0.0]
})json";

const char* kSphere = R"json({
    "dim": 2, "coords": ["x0", "x1"],
    "metric": {"0,0": "1", "1,1": "sin(x0)^2"},
    "base_point": [1.5707963267948966, 0.0]
})json";

const char* kLorentz = R"json({
    "dim": 2, "coords": ["t", "x"],
    "metric": {"0,0": "1", "1,1": "-1"},
    "base_point": [0.0, 0.0]
})json";

constexpr double kPi = 3.14159265358979323846;

// weyl autoparallel from the origin with v0 = (1, 0): x0(l) = -ln(1 - l)
double weyl_x0(double l) { return -std::log(1.0 - l); }

}  // namespace

TEST_CASE("weyl autoparallel matches the closed form") {
    GeometrySpec spec = from_text(kWeyl);
    StepControl ctl;
    ctl.steps = 256;
    Trajectory t = integrate_curve(spec, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, ctl);
    REQUIRE(t.samples() == 257);
    double err = 0.0;
    for (size_t i = 0; i < t.samples(); ++i) {
        err = std::max(err, std::abs(t.xs[i][0] - weyl_x0(t.lambdas[i])));
        err = std::max(err, std::abs(t.vs[i][0] - 1.0 / (1.0 - t.lambdas[i])));
        err = std::max(err, std::abs(t.xs[i][1]));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("rk4 curve integration converges at fourth order") {
    GeometrySpec spec = from_text(kWeyl);
    double prev = 0.0;
    for (int steps : {32, 64, 128, 256}) {
        StepControl ctl;
        ctl.steps = steps;
        Trajectory t = integrate_curve(spec, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, ctl);
        double e = std::abs(t.xs.back()[0] - weyl_x0(0.5));
        if (prev > 0.0) {
            double order = std::log2(prev / e);
            CHECK(order > 3.5);
            CHECK(order < 4.5);
        }
        prev = e;
    }
}

TEST_CASE("adaptive integration matches the closed form and reports stats") {
    GeometrySpec spec = from_text(kWeyl);
    StepControl ctl;
    ctl.method = "rkf45";
    ctl.rel_tol = 1e-9;
    Trajectory t = integrate_curve(spec, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, ctl);
    CHECK(t.method == "rkf45");
    CHECK(t.steps_accepted > 5);
    CHECK(t.max_scaled_error > 0.0);
    double err = 0.0;
    for (size_t i = 0; i < t.samples(); ++i)
        err = std::max(err, std::abs(t.xs[i][0] - weyl_x0(t.lambdas[i])));
    CHECK(err < 1e-8);
    // adaptive grids are not uniform, so stencil-based ops refuse them
    CHECK_THROWS_WITH(el_residual(spec, t), Catch::Matchers::ContainsSubstring("uniform"));
}

TEST_CASE("default step count follows the span") {
    GeometrySpec spec = from_text(kWeyl);
    Trajectory t = integrate_curve(spec, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5);
    CHECK(t.samples() == 129);  // ceil(256 * 0.5) + 1
}

TEST_CASE("sphere equator is a geodesic and Q = 0 makes kinds identical") {
    GeometrySpec spec = from_text(kSphere);
    StepControl geo;
    geo.kind = CurveKind::Geodesic;
    geo.steps = 200;
    Trajectory t = integrate_curve(spec, Vec{kPi / 2, 0}, Vec{0, 1}, 0.0, 2.0, geo);
    for (size_t i = 0; i < t.samples(); ++i) {
        CHECK(std::abs(t.xs[i][0] - kPi / 2) < 1e-12);
        CHECK(std::abs(t.xs[i][1] - t.lambdas[i]) < 1e-12);
    }
    StepControl aut;
    aut.kind = CurveKind::Autoparallel;
    aut.steps = 200;
    Trajectory t2 = integrate_curve(spec, Vec{kPi / 2, 0}, Vec{0, 1}, 0.0, 2.0, aut);
    for (size_t i = 0; i < t.samples(); ++i)
        for (int a = 0; a < 2; ++a) {
            CHECK(t.xs[i][a] == t2.xs[i][a]);
            CHECK(t.vs[i][a] == t2.vs[i][a]);
        }
}

TEST_CASE("lagrangian flags null data") {
    Mat H(2);
    H(0, 0) = 1.0;
    H(1, 1) = -1.0;
    Lagrangian l = lagrangian_at(H, Vec{1.0, 1.0});
    CHECK(l.null);
    CHECK(l.value == 0.0);
    Lagrangian ok = lagrangian_at(H, Vec{2.0, 1.0});
    CHECK_FALSE(ok.null);
    CHECK(ok.value == Catch::Approx(std::sqrt(3.0)));
}

TEST_CASE("euler-lagrange residuals vanish on autoparallels") {
    GeometrySpec weyl = from_text(kWeyl);
    StepControl ctl;
    ctl.steps = 256;
    Trajectory tw = integrate_curve(weyl, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, ctl);
    ELReport rw = el_residual(weyl, tw);
    CHECK(rw.el_residual_max < 1e-6);
    CHECK(rw.affine_defect < 1e-8);
    CHECK(norm_drift(weyl, tw) < 1e-8);

    // curved effective metric, both coordinates active
    GeometrySpec curved = from_text(kCurved);
    StepControl c2;
    c2.steps = 512;
    Trajectory tc = integrate_curve(curved, Vec{0, 0}, Vec{0.6, 0.8}, 0.0, 1.0, c2);
    CHECK(std::abs(tc.xs.back()[0] - 0.653587) < 1e-4);  // genuinely curved path
    ELReport rc = el_residual(curved, tc);
    CHECK(rc.el_residual_max < 1e-6);
    CHECK(rc.affine_defect < 1e-8);
    CHECK(norm_drift(curved, tc) < 1e-8);
}

TEST_CASE("perturbing an autoparallel produces a large residual") {
    GeometrySpec curved = from_text(kCurved);
    StepControl ctl;
    ctl.steps = 512;
    Trajectory t = integrate_curve(curved, Vec{0, 0}, Vec{0.6, 0.8}, 0.0, 1.0, ctl);
    for (size_t i = 0; i < t.samples(); ++i) {
        double l = t.lambdas[i];
        t.xs[i][1] += 0.01 * std::sin(kPi * l);
        t.vs[i][1] += 0.01 * kPi * std::cos(kPi * l);
    }
    ELReport r = el_residual(curved, t);
    CHECK(r.el_residual_max > 1e-3);
}

TEST_CASE("action is reparametrization invariant") {
    GeometrySpec weyl = from_text(kWeyl);
    StepControl a;
    a.steps = 400;
    Trajectory t1 = integrate_curve(weyl, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, a);
    Trajectory t2 = integrate_curve(weyl, Vec{0, 0}, Vec{0.5, 0}, 0.0, 1.0, a);
    double s1 = action_value(weyl, t1);
    double s2 = action_value(weyl, t2);
    CHECK(s1 == Catch::Approx(0.5).margin(1e-8));
    CHECK(s2 == Catch::Approx(s1).margin(1e-8));

    // nonlinear reparametrization lambda = (sigma + sigma^2) / 4, built from
    // the closed form so the samples are exact
    const int m = 400;
    Trajectory t3;
    t3.method = "closed-form";
    for (int i = 0; i <= m; ++i) {
        double sg = static_cast<double>(i) / m;
        double l = 0.25 * (sg + sg * sg);
        double dl = 0.25 * (1.0 + 2.0 * sg);
        t3.lambdas.push_back(sg);
        t3.xs.push_back(Vec{weyl_x0(l), 0.0});
        t3.vs.push_back(Vec{dl / (1.0 - l), 0.0});
    }
    CHECK(action_value(weyl, t3) == Catch::Approx(0.5).margin(1e-8));
}

TEST_CASE("generalized proper time matches the action only for weyl Q") {
    GeometrySpec weyl = from_text(kWeyl);
    StepControl ctl;
    ctl.steps = 2000;
    Trajectory tw = integrate_curve(weyl, Vec{0, 0}, Vec{1, 0}, 0.0, 0.5, ctl);
    double act = action_value(weyl, tw);
    double gpt = generalized_proper_time(weyl, tw);
    CHECK(act == Catch::Approx(0.5).margin(1e-9));
    CHECK(std::abs(gpt - act) < 1e-7);

    GeometrySpec curved = from_text(kCurved);
    StepControl c2;
    c2.steps = 600;
    Trajectory tc = integrate_curve(curved, Vec{0, 0}, Vec{0.6, 0.8}, 0.0, 1.5, c2);
    double act_c = action_value(curved, tc);
    double gpt_c = generalized_proper_time(curved, tc);
    CHECK(std::abs(gpt_c - act_c) > 1e-3);
}

TEST_CASE("action operations reject null data") {
    GeometrySpec lorentz = from_text(kLorentz);
    StepControl ctl;
    ctl.steps = 32;
    Trajectory t = integrate_curve(lorentz, Vec{0, 0}, Vec{1, 1}, 0.0, 1.0, ctl);
    CHECK_THROWS_WITH(action_value(lorentz, t), Catch::Matchers::ContainsSubstring("null"));
    CHECK_THROWS_WITH(el_residual(lorentz, t), Catch::Matchers::ContainsSubstring("null"));
    CHECK_THROWS_WITH(generalized_proper_time(lorentz, t),
                      Catch::Matchers::ContainsSubstring("null"));
}

TEST_CASE("integration stops when the metric degenerates") {
    GeometrySpec sphere = from_text(kSphere);
    StepControl ctl;
    ctl.steps = 200;
    // heading straight for the pole at x0 = 0
    CHECK_THROWS_AS(integrate_curve(sphere, Vec{0.2, 0.0}, Vec{-1.0, 0.0}, 0.0, 0.5, ctl),
                    GeometryError);
}

TEST_CASE("bad inputs are rejected") {
    GeometrySpec weyl = from_text(kWeyl);
    StepControl ctl;
    ctl.method = "euler";
    CHECK_THROWS_WITH(integrate_curve(weyl, Vec{0, 0}, Vec{1, 0}, 0.0, 1.0, ctl),
                      Catch::Matchers::ContainsSubstring("euler"));
    CHECK_THROWS_AS(integrate_curve(weyl, Vec{0.0}, Vec{1, 0}, 0.0, 1.0), NumericsError);
}
