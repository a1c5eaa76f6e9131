#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "omw/dynamics.hpp"
#include "omw/io.hpp"
#include "omw/schedule.hpp"

using namespace omw;

namespace {

CouplingSchedule sample_crab()
{
    CrabParams c;
    c.m = 2;
    c.amplitudes.resize(2, 2);
    c.amplitudes << 1.0, -2.0, 0.5, 3.0;
    c.r.resize(2);
    c.r << 0.25, 0.75;
    c.g0_fixed = 1.5;
    c.seed = 42;
    return CouplingSchedule::crab(10.0, c);
}

CouplingSchedule sample_piecewise()
{
    Segment a;
    a.duration = 4.0;
    a.g = Eigen::Vector3d(1.0, 2.0, 0.0);
    a.profile.kind = Profile::Kind::sine_bump;
    a.profile.active_fraction = 0.9;
    Segment b;
    b.duration = 6.0;
    b.g = Eigen::Vector3d(1.0, 0.0, 1.0);
    b.profile.kind = Profile::Kind::harmonic;
    b.profile.a = Eigen::Vector2d(0.3, -0.7);
    b.profile.r = Eigen::Vector2d(0.1, 0.2);
    return CouplingSchedule::piecewise({a, b});
}

std::filesystem::path temp_dir()
{
    const auto dir = std::filesystem::temp_directory_path() / "omw_test_schedule";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("CRAB samples follow the harmonic ansatz")
{
    const CouplingSchedule s = sample_crab();
    const double t = 3.7, T = 10.0;
    const auto g = s.sample(t);
    auto term = [&](int k, double r) { return std::sin(2.0 * std::numbers::pi * k * (1.0 + r) * t / T); };
    CHECK(g(0) == 1.5);
    CHECK(g(1) == doctest::Approx((1.0 * term(1, 0.25) + 0.5 * term(2, 0.75)) / 2.0));
    CHECK(g(2) == doctest::Approx((-2.0 * term(1, 0.25) + 3.0 * term(2, 0.75)) / 2.0));
    // Microwave couplings vanish at t = 0.
    CHECK(s.sample(0.0).tail(2).isZero());
}

TEST_CASE("sampling outside the window throws")
{
    const CouplingSchedule s = sample_crab();
    CHECK_THROWS_AS(s.sample(-0.1), Error);
    CHECK_THROWS_AS(s.sample(10.1), Error);
    CHECK_NOTHROW(s.sample(10.0));
}

TEST_CASE("half grid matches pointwise sampling")
{
    const CouplingSchedule s = sample_piecewise();
    const int N = 600;
    const Eigen::MatrixXd half = s.sample_half_grid(N);
    REQUIRE(half.cols() == 2 * N + 1);
    for (int j : {0, 1, 17, 480, 481, 1199, 1200})
        CHECK((half.col(j) - s.sample(j * 10.0 / (2.0 * N))).norm() < 1e-14);
}

TEST_CASE("piecewise segments")
{
    const CouplingSchedule s = sample_piecewise();
    CHECK(s.duration() == 10.0);
    // Bump stage peaks at the middle of its active window.
    const double peak = s.sample(0.45 * 4.0)(1);
    CHECK(peak == doctest::Approx(2.0));
    CHECK(s.sample(3.8)(1) == 0.0); // inside the trailing margin
    CHECK(s.sample(5.0)(1) == 0.0);
    CHECK(s.sample(5.0)(0) == 1.0);
}

TEST_CASE("time reversal is an involution")
{
    for (const CouplingSchedule& s : {sample_crab(), sample_piecewise()}) {
        const CouplingSchedule r = time_reverse(s);
        CHECK(r.reversed());
        CHECK((r.sample(2.5) - s.sample(s.duration() - 2.5)).norm() < 1e-15);
        CHECK(time_reverse(r) == s);
    }
}

TEST_CASE("constant ratio keeps the direction")
{
    Eigen::VectorXd g(3);
    g << 1.0, 0.5, 2.0;
    Eigen::VectorXd env(2);
    env << 0.4, 0.3;
    const CouplingSchedule s = CouplingSchedule::constant_ratio(5.0, g, env);
    for (double t : {0.0, 1.3, 4.9}) {
        const auto gt = s.sample(t);
        CHECK((gt.normalized() - g.normalized()).norm() < 1e-14);
    }
    env << 0.7, 0.5;
    CHECK_THROWS_AS(CouplingSchedule::constant_ratio(5.0, g, env), Error);
}

TEST_CASE("schedule files round trip idempotently")
{
    Eigen::VectorXd g(3);
    g << 1.0, 0.5, 2.0;
    const CouplingSchedule cr = CouplingSchedule::constant_ratio(5.0, g, Eigen::Vector2d(0.1, -0.2));
    const auto dir = temp_dir();
    for (const CouplingSchedule& s : {sample_crab(), sample_piecewise(), cr, time_reverse(sample_crab())}) {
        const auto path = dir / "s.json";
        io::save_schedule(path, s);
        const std::string first = io::read_file(path);
        const CouplingSchedule loaded = io::load_schedule(path);
        CHECK(loaded == s);
        io::save_schedule(path, loaded);
        CHECK(io::read_file(path) == first);
        CHECK((loaded.sample(1.234) - s.sample(1.234)).norm() == 0.0);
    }
}

TEST_CASE("schedule file errors")
{
    io::json j = io::schedule_to_json(sample_crab());
    j["format_version"] = 99;
    CHECK_THROWS_AS(io::schedule_from_json(j), Error);
    j = io::schedule_to_json(sample_crab());
    j["A"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(io::schedule_from_json(j), Error);
    j.erase("A");
    CHECK_THROWS_AS(io::schedule_from_json(j), Error);
    CHECK_THROWS_AS(io::load_schedule(temp_dir() / "does_not_exist.json"), Error);
}

TEST_CASE("pulse CSV round trip")
{
    const TimeGrid grid = TimeGrid::make(2.0, 512);
    PulseShape p = PulseShape::zero(grid);
    for (int k = 0; k <= grid.N; ++k)
        p.samples(k) = Complex(std::sin(grid.t(k)), std::cos(3.0 * grid.t(k)) / 7.0);
    const std::string text = io::pulse_csv(p, 1e7);
    CHECK(text.rfind("# units=g0 g0_ref=10000000\nt,re_f,im_f\n", 0) == 0);
    const PulseShape q = io::parse_pulse_csv(text);
    CHECK(q.grid.N == grid.N);
    CHECK(q.samples == p.samples); // 17 digits are exact for doubles
    CHECK_THROWS_AS(io::parse_pulse_csv("t,re_f,im_f\n0,1\n"), Error);
    CHECK_THROWS_AS(io::parse_pulse_csv("x,y\n"), Error);
}

TEST_CASE("config parsing and unit normalization")
{
    const io::json raw = io::json::parse(R"({
        "units": "raw",
        "system": {"n": 2, "kappa0": 1e8, "kappa": [1e2, 2e2], "gamma_m": 1e4, "omega_m": 1e10, "g0_ref": 1e7},
        "crab": {"T": 1e-5, "g0": 1e7, "restarts": 1, "max_evaluations": 10},
        "state": {"w": [[0.6, 0], [0, 0.8]]},
        "sweep": {"type": "damping", "axis": "gamma_m", "values": [0, 1e5]}
    })");
    const io::RunConfig c = io::parse_config(raw, ".");
    CHECK(c.system.kappa0 == doctest::Approx(10.0));
    CHECK(c.system.kappa(1) == doctest::Approx(2e-5));
    CHECK(c.system.gamma_m == doctest::Approx(1e-3));
    CHECK(*c.system.omega_m == doctest::Approx(1e3));
    CHECK(c.system.g0_ref == 1e7);
    CHECK(c.crab->T == doctest::Approx(100.0));
    CHECK(c.crab->g0_fixed == doctest::Approx(1.0));
    CHECK((*c.state)(1) == Complex(0.0, 0.8));
    CHECK(c.sweep["values"][1].get<double>() == doctest::Approx(1e-2));

    // Same numbers declared as g0 units stay as written.
    io::ConfigOverrides ov;
    ov.units = "g0";
    ov.seed = 77;
    const io::RunConfig d = io::parse_config(raw, ".", ov);
    CHECK(d.system.kappa0 == 1e8);
    CHECK(d.seed == 77);
    CHECK(d.crab->seed == 77);
}

TEST_CASE("config errors")
{
    CHECK_THROWS_AS(io::parse_config(io::json::parse(R"({"system": {"n": 0}})"), "."), Error);
    CHECK_THROWS_AS(io::parse_config(io::json::parse(R"({"units": "furlongs", "system": {"n": 1}})"), "."), Error);
    CHECK_THROWS_AS(io::parse_config(io::json::parse(R"({"system": {"n": 1}, "schedule": "nope.json"})"), "."),
                    Error);
    CHECK_THROWS_AS(io::parse_config(io::json::parse(R"({"system": {"n": 2}, "state": [1, 1]})"), "."), Error);
    CHECK_THROWS_AS(io::parse_config(io::json::parse(R"({"system": {"n": 2, "kappa0": -1}})"), "."), Error);
    CHECK_THROWS_AS(io::load_config("/nonexistent/config.json"), Error);
}

TEST_CASE("atomic write leaves no temp file")
{
    const auto path = temp_dir() / "atomic.txt";
    io::atomic_write(path, "one");
    io::atomic_write(path, "two");
    CHECK(io::read_file(path) == "two");
    CHECK(!std::filesystem::exists(temp_dir() / "atomic.txt.tmp"));
}
