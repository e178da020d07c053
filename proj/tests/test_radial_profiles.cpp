#include <doctest.h>

#include "segregate/error.hpp"
#include "segregate/radial_profiles.hpp"

#include <cmath>
#include <numbers>

using namespace segregate;

namespace {

// Trapezoid rule on the profile table for int f(r) r^{n-1} dr.
template <class F>
double radial_integral(const GroundStateProfile& U, F f)
{
    const auto& r = U.radii();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        double a = f(i) * std::pow(r[i], U.dimension() - 1);
        double b = f(i + 1) * std::pow(r[i + 1], U.dimension() - 1);
        s += 0.5 * (r[i + 1] - r[i]) * (a + b);
    }
    return s;
}

}  // namespace

TEST_CASE("one-dimensional profile matches the sech formula")
{
    for (double p : {3.0, 5.0}) {
        auto U = solve_ground_state(1, p);
        for (double r : {0.0, 0.7, 2.0, 5.0, 9.0}) {
            double exact = std::pow(0.5 * (p + 1) / std::pow(std::cosh(0.5 * (p - 1) * r), 2), 1.0 / (p - 1));
            CHECK(U(r) == doctest::Approx(exact).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("cubic ground states have the tabulated centre values")
{
    // Townes profile in 2D and the 3D cubic soliton
    CHECK(solve_ground_state(2, 3.0).center_value() == doctest::Approx(2.20620).epsilon(1e-5));
    CHECK(solve_ground_state(3, 3.0).center_value() == doctest::Approx(4.33738).epsilon(1e-5));
}

TEST_CASE("energy and Pohozaev identities hold")
{
    for (int n : {2, 3}) {
        const double p = 3.0;
        auto U = solve_ground_state(n, p);
        const auto& u = U.values();
        const auto& du = U.derivatives();
        double grad = radial_integral(U, [&](std::size_t i) { return du[i] * du[i]; });
        double mass = radial_integral(U, [&](std::size_t i) { return u[i] * u[i]; });
        double high = radial_integral(U, [&](std::size_t i) { return std::pow(u[i], p + 1); });
        CHECK(grad + mass == doctest::Approx(high).epsilon(1e-5));
        CHECK((n - 2) / 2.0 * grad + n / 2.0 * mass == doctest::Approx(n / (p + 1) * high).epsilon(1e-5));
        double sphere = n == 2 ? 2 * std::numbers::pi : 4 * std::numbers::pi;
        CHECK(U.power_integral(2.0) == doctest::Approx(sphere * mass).epsilon(1e-5));
    }
}

TEST_CASE("profile is positive, decreasing and solves the ODE")
{
    auto U = solve_ground_state(3, 3.0);
    for (std::size_t i = 1; i < U.values().size(); ++i) {
        REQUIRE(U.values()[i] > 0.0);
        REQUIRE(U.values()[i] < U.values()[i - 1]);
    }
    CHECK(U.max_ode_residual() < 1e-3);
    CHECK(U(35.0) < U(30.0));
    CHECK(U(35.0) > 0.0);
}

TEST_CASE("exponents outside the admissible range are rejected")
{
    CHECK_THROWS_AS(solve_ground_state(3, 5.0), Error);
    CHECK_THROWS_AS(solve_ground_state(3, 1.0), Error);
    try {
        solve_ground_state(3, 6.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidExponent);
    }
}

TEST_CASE("weighted eigenvalues: Lambda = 1 for mode 0 and 3 for mode 1")
{
    auto U = solve_ground_state(2, 3.0);
    auto m0 = eigenpairs(U, 0, 2);
    auto m1 = eigenpairs(U, 1, 1);
    CHECK(m0[0].lambda == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m0[1].lambda > m0[0].lambda);
    CHECK(m1[0].lambda == doctest::Approx(3.0).epsilon(1e-2));
}
