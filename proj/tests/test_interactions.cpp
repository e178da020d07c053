#include <doctest.h>

#include "segregate/interactions.hpp"

#include <cmath>

using namespace segregate;

namespace {
const GroundStateProfile& profile2()
{
    static const GroundStateProfile U = solve_ground_state(2, 3.0);
    return U;
}
const GroundStateProfile& profile3()
{
    static const GroundStateProfile U = solve_ground_state(3, 3.0);
    return U;
}
}  // namespace

TEST_CASE("zero shift gives the power integral")
{
    CHECK(gamma(1, 3, Vec3::Zero(), profile3()) == doctest::Approx(profile3().power_integral(4)).epsilon(1e-8));
    CHECK(gamma(2, 2, Vec3::Zero(), profile2()) == doctest::Approx(profile2().power_integral(4)).epsilon(1e-8));
}

TEST_CASE("interaction depends on |zeta| only and is symmetric in (s, t)")
{
    const auto& U = profile3();
    Vec3 z(2.0, -1.0, 0.5);
    double g = gamma(1, 3, z, U);
    CHECK(gamma(3, 1, z, U) == doctest::Approx(g).epsilon(1e-8));
    CHECK(gamma(1, 3, Vec3(0.0, 0.0, z.norm()), U) == doctest::Approx(g).epsilon(1e-8));
    CHECK(gamma_radial(1, 3, z.norm(), U) == doctest::Approx(g).epsilon(1e-8));
}

TEST_CASE("two-dimensional interaction agrees with a Cartesian grid sum")
{
    const auto& U = profile2();
    const double R = 3.0, h = 0.04, L = 16.0;
    double sum = 0.0;
    for (double x = -L; x <= L + R; x += h)
        for (double y = -L; y <= L; y += h) {
            double a = std::hypot(x, y), b = std::hypot(x - R, y);
            sum += U(a) * U(b) * U(b) * U(b);
        }
    sum *= h * h;
    CHECK(gamma_radial(1, 3, R, U) == doctest::Approx(sum).epsilon(1e-4));
}

TEST_CASE("gradient points along zeta and matches the radial derivative")
{
    const auto& U = profile3();
    Vec3 z(1.5, 2.0, -1.0);
    Vec3 g = gamma_gradient(2, 2, z, U);
    double dr = gamma_radial_derivative(2, 2, z.norm(), U);
    CHECK((g - dr * z.normalized()).norm() < 1e-7 * std::abs(dr));
    double h = 1e-3;
    double fd = (gamma_radial(2, 2, z.norm() + h, U) - gamma_radial(2, 2, z.norm() - h, U)) / (2 * h);
    CHECK(dr == doctest::Approx(fd).epsilon(1e-5));
    CHECK(dr < 0.0);
}

TEST_CASE("asymptotic law table")
{
    // s != t: rate min(s,t), power -min(s,t)(n-1)/2
    auto a = expected_law(1, 3, 3);
    CHECK(a.rate == 1.0);
    CHECK(a.power == doctest::Approx(-1.0));
    CHECK_FALSE(a.log_flag);
    // threshold s = t = (n+1)/(n-1) carries the log
    CHECK(expected_law(2, 2, 3).log_flag);
    CHECK(expected_law(2, 2, 3).power == doctest::Approx(-2.0));
    CHECK(expected_law(3, 3, 2).log_flag);
    CHECK(expected_law(3, 3, 2).power == doctest::Approx(-1.5));
    // above threshold
    CHECK_FALSE(expected_law(3, 3, 3).log_flag);
    CHECK(expected_law(3, 3, 3).power == doctest::Approx(-3.0));
    // below threshold: -s(n-1) + (n+1)/2
    CHECK(expected_law(1.5, 1.5, 3).power == doctest::Approx(-1.0));
    CHECK(expected_law(2, 2, 2).power == doctest::Approx(-0.5));
}

TEST_CASE("fit recovers the decay rate of Gamma_{1,3}")
{
    FitOptions fo;
    fo.enforce_invariants = false;
    auto fit = fit_asymptotics(1, 3, profile3(), fo);
    CHECK(fit.rate == doctest::Approx(1.0).epsilon(0.02));
    CHECK_FALSE(fit.log_flag);
    CHECK(fit.value(14.0) == doctest::Approx(gamma_radial(1, 3, 14.0, profile3())).epsilon(0.02));
}
