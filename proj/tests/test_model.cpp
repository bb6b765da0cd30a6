#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "amplitude_oracles.hpp"
#include "fracqubit/error.hpp"
#include "fracqubit/model.hpp"

using namespace fracqubit;

namespace {

constexpr cplx kI{0.0, 1.0};
const cplx kEighth = std::polar(1.0, std::numbers::pi / 4);

SystemParams unit(double delta) { return SystemParams{1.0, delta, 1.0, 0.0, 0.0}; }

template <class Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no exception thrown");
    return ErrorCode::gate_failure;
}

}  // namespace

TEST_CASE("parameter validation") {
    CHECK(code_of([] { validate(SystemParams{0.0, 0.0, 1.0, 0.0, 0.0}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { validate(SystemParams{1.0, 0.0, -1.0, 0.0, 0.0}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { validate(SystemParams{1.0, 0.0, 1.0, 4.0, 0.0}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { validate(SystemParams{1.0, NAN, 1.0, 0.0, 0.0}); }) == ErrorCode::non_finite_input);
    CHECK(SystemParams{4.0, 0.0, 4.0, 0.0, 0.0}.b() == doctest::Approx(0.25).epsilon(1e-15));
    const ReducedParams r = reduce(SystemParams{4.0, -2.0, 2.0, 0.0, 0.0});
    CHECK(r.b == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-15));
    CHECK(r.delta == -0.5);
}

TEST_CASE("time grid") {
    const TimeGrid g = TimeGrid::uniform(10.0, 5);
    CHECK(g.size() == 5);
    CHECK(g[0] == 0.0);
    CHECK(g[2] == 5.0);
    CHECK(g[4] == 10.0);
    CHECK(code_of([] { TimeGrid({1.0}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { TimeGrid({0.0, 1.0, 1.0}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([] { TimeGrid({-1.0, 1.0}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("memory kernel") {
    const cplx g = memory_kernel(unit(0.0), 1.0);
    CHECK(g.real() == doctest::Approx(-0.398942280401433).epsilon(1e-14));
    CHECK(g.imag() == doctest::Approx(-0.398942280401433).epsilon(1e-14));
    CHECK(std::abs(memory_kernel(unit(0.0), 4.0)) ==
          doctest::Approx(1.0 / (8.0 * std::sqrt(std::numbers::pi))).epsilon(1e-15));

    SystemParams wide = unit(0.3);
    wide.f = 2.0;
    for (double lag : {0.1, 1.0, 3.7}) {
        CHECK(std::abs(memory_kernel(wide, lag)) / std::abs(memory_kernel(unit(0.3), lag)) ==
              doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
        CHECK(std::abs(memory_kernel(unit(0.3), 2.0 * lag)) / std::abs(memory_kernel(unit(0.3), lag)) ==
              doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-14));
    }
    CHECK(code_of([] { memory_kernel(unit(0.0), 0.0); }) == ErrorCode::non_positive_lag);
    CHECK(code_of([] { memory_kernel(unit(0.0), -2.0); }) == ErrorCode::non_positive_lag);
}

TEST_CASE("kernel from the density of states") {
    for (double delta : {-3.0, 0.0, 2.0}) {
        SystemParams p = unit(delta);
        p.f = 1.3;
        for (double lag : {0.2, 1.0, 6.0}) {
            const cplx direct = memory_kernel(p, lag);
            CHECK(std::abs(memory_kernel_from_dos(p, lag) - direct) <= 1e-12 * std::abs(direct));
        }
    }
}

TEST_CASE("density of states") {
    const SystemParams p = unit(0.0);
    CHECK(dos(p, -1.0, 1.0) == 0.0);
    CHECK(dos(p, 0.0, 1.0) == 0.0);
    CHECK(dos(p, 1.0, 1.0) == doctest::Approx(1.0 / (4.0 * std::numbers::pi * std::numbers::pi)).epsilon(1e-15));
    CHECK(code_of([&] { dos(p, 1.0, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("indicial roots") {
    const IndicialRoots r = indicial_roots(unit(-1.0));
    CHECK(std::abs(r.y1 - kEighth * (std::sqrt(2.0) - 1.0)) < 1e-15);
    CHECK(std::abs(r.y2 - kEighth * (-std::sqrt(2.0) - 1.0)) < 1e-15);
    CHECK(r.kind == RootKind::distinct);
    CHECK(indicial_roots(unit(1.0)).kind == RootKind::degenerate);
    CHECK(indicial_roots(unit(1.0 + 1e-6)).kind == RootKind::distinct);

    for (double beta : {0.5, 1.0, 3.0}) {
        for (double f : {0.7, 1.0, 2.0}) {
            for (double delta : {-10.0, -1.0, 0.0, 0.4, 2.0, 9.0}) {
                const SystemParams p{beta, delta, f, 0.0, 0.0};
                const IndicialRoots y = indicial_roots(p);
                const double b = p.b();
                for (cplx root : {y.y1, y.y2}) {
                    const cplx residual = root * root + 2.0 * b * kEighth * root + kI * delta;
                    CHECK(std::abs(residual) <= 1e-12 * (1.0 + std::abs(delta)));
                }
                CHECK(std::abs(y.y1 + y.y2 + 2.0 * b * kEighth) <= 1e-12 * 2.0 * b);
                CHECK(std::abs(y.y1 * y.y2 - kI * delta) <= 1e-12 * std::max(1.0, std::abs(delta)));
            }
        }
    }
    // beta / f^3 < delta takes the +i branch of the square root.
    const IndicialRoots above = indicial_roots(unit(5.0));
    CHECK(std::abs(above.y1 - kEighth * cplx(-1.0, 2.0)) < 1e-15);
}

TEST_CASE("closed form against the contour-integral oracle") {
    for (const auto& c : oracle::kAmplitude) {
        CAPTURE(c.b);
        CAPTURE(c.delta);
        CAPTURE(c.T);
        const AmplitudePoint pt = closed_form_point({c.b, c.delta}, c.T);
        CHECK(std::abs(pt.U - c.U) <= 1e-12);
        CHECK(std::abs(pt.dU - c.dU) <= 1e-11);
    }
}

TEST_CASE("initial value and amplitude bound") {
    for (double delta : {-10.0, -5.0, -1.0, -0.5, 0.5, 1.0, 2.0, 6.0}) {
        const auto traj = closed_form_amplitude(unit(delta), TimeGrid::uniform(10.0, 801));
        CHECK(traj.U[0] == cplx(1.0));
        CHECK(traj.u[0] == cplx(1.0));
        CHECK(std::isnan(traj.dU[0].real()));
        CHECK(traj.solver == SolverTag::closed_form);
        for (std::size_t i = 0; i < traj.grid.size(); ++i) {
            CHECK(std::abs(traj.U[i]) <= 1.0 + 1e-6);
            CHECK(std::abs(traj.u[i]) == doctest::Approx(std::abs(traj.U[i])).epsilon(1e-15));
        }
    }
}

TEST_CASE("small-time behaviour") {
    // U = 1 + c1 t^{1/2} + c2 t + O(t^{3/2}) with c1 = -4 e^{i pi/4}/sqrt(pi),
    // c2 = 4 i b^2 - i delta.
    const cplx c1 = -4.0 * kEighth / std::sqrt(std::numbers::pi);
    for (double delta : {-1.0, 0.0, 2.0}) {
        const cplx c2 = 4.0 * kI - kI * delta;
        for (double t : {1e-4, 1e-3, 1e-2}) {
            const cplx U = closed_form_point({1.0, delta}, t).U;
            CHECK(std::abs(U - (1.0 + c1 * std::sqrt(t) + c2 * t)) <= 10.0 * std::pow(t, 1.5));
        }
    }
}

TEST_CASE("analytic derivative matches finite differences") {
    for (double delta : {-10.0, -1.0, 0.5, 1.0, 2.0, 5.0}) {
        const ReducedParams p{1.0, delta};
        for (double t : {0.05, 0.7, 3.0, 9.5}) {
            const double h = 1e-5;
            const cplx fd = (closed_form_point(p, t + h).U - closed_form_point(p, t - h).U) / (2.0 * h);
            CHECK(std::abs(fd - closed_form_point(p, t).dU) <= 1e-5);
        }
    }
}

TEST_CASE("degenerate form is continuous across the double root") {
    const TimeGrid grid = TimeGrid::uniform(10.0, 201);
    const auto mid = closed_form_amplitude(unit(1.0), grid, Formula::degenerate);
    for (double offset : {-1e-6, 1e-6}) {
        const auto side = closed_form_amplitude(unit(1.0 + offset), grid, Formula::distinct);
        for (std::size_t i = 0; i < grid.size(); ++i) CHECK(std::abs(mid.U[i] - side.U[i]) <= 1e-4);
    }
    CHECK(code_of([&] { closed_form_amplitude(unit(1.0), grid, Formula::distinct); }) ==
          ErrorCode::degeneracy_mismatch);
    CHECK(code_of([&] { closed_form_amplitude(unit(0.9), grid, Formula::degenerate); }) ==
          ErrorCode::degeneracy_mismatch);
}

TEST_CASE("large positive detuning stays accurate") {
    // Each root term grows like e^{2 b q T}; the result decays.
    const auto traj = closed_form_amplitude(unit(40.0), TimeGrid::uniform(10.0, 101));
    for (std::size_t i = 1; i < traj.grid.size(); ++i) CHECK(std::abs(traj.U[i]) < 1.0);
    const cplx late = closed_form_point({1.0, 40.0}, 10.0).U;
    // Far from the edge the long-time tail is algebraic, about 2 b e^{i pi/4} / (sqrt(pi) d^2 T^{3/2}).
    CHECK(std::abs(late) < 1e-3);
}

TEST_CASE("steady state") {
    CHECK(*steady_state_probability(unit(-1.0)) == doctest::Approx(std::pow(1.0 - 1.0 / std::sqrt(2.0), 2)));
    CHECK(*steady_state_probability(unit(-1.0)) == doctest::Approx(0.0857864).epsilon(1e-6));
    CHECK(*steady_state_probability(unit(-10.0)) == doctest::Approx(0.4878864).epsilon(1e-6));
    CHECK_FALSE(steady_state_probability(unit(2.0)).has_value());
    CHECK_FALSE(steady_state_probability(unit(0.0)).has_value());
    // The residue at the bound-state pole reproduces the long-time average.
    const ReducedParams p{1.0, -1.0};
    double avg = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) avg += std::norm(closed_form_point(p, 2000.0 + 200.0 * i / n).U);
    CHECK(avg / n == doctest::Approx(*steady_state_probability(p)).epsilon(2e-3));
}

TEST_CASE("zero coupling") {
    const auto traj = closed_form_amplitude(ReducedParams{0.0, 0.0}, TimeGrid::uniform(5.0, 11));
    for (const cplx& U : traj.U) CHECK(U == cplx(1.0));
}
