#include "segregate/geometry.hpp"

#include "segregate/error.hpp"

#include <cmath>
#include <numbers>

namespace segregate {

namespace {
constexpr double pi = std::numbers::pi;
}

Eigen::Matrix3d rotation(double theta)
{
    double c = std::cos(theta), s = std::sin(theta);
    Eigen::Matrix3d m;
    m << c, s, 0.0,
        -s, c, 0.0,
        0.0, 0.0, 1.0;
    return m;
}

double rotation_angle(const Vec3& x)
{
    return -std::atan2(x[1], x[0]);
}

Eigen::Matrix3d component_rotation(int i, int d, int k)
{
    return rotation(2.0 * pi * (i - 1) / (double(d) * k));
}

double PeakConfiguration::sector_half_width() const { return pi / k; }

double PeakConfiguration::subsector_half_width() const { return pi / (double(d) * k); }

Vec3 PeakConfiguration::eta_tilde(int i) const
{
    return rotation(2.0 * pi * i / (double(d) * k)) * Vec3::UnitX();
}

PeakConfiguration build_peaks(int d, int k, double rho, int n)
{
    if (d < 1 || k < 1 || !(rho > 0.0) || n < 2 || n > 3)
        throw Error(ErrorKind::InvalidArgument, "build_peaks needs d >= 1, k >= 1, rho > 0, n in {2,3}");
    PeakConfiguration c;
    c.n = n;
    c.d = d;
    c.k = k;
    c.rho = rho;
    const Vec3 e1 = Vec3::UnitX();
    for (int h = 1; h <= k; ++h) c.xi.push_back(rotation(2.0 * pi * (h - 1) / k) * e1);
    c.eta.resize(d);
    for (int i = 1; i <= d; ++i) {
        Eigen::Matrix3d back = component_rotation(i, d, k).transpose();
        for (int l = 1; l <= k; ++l) c.eta[i - 1].push_back(back * c.xi[l - 1]);
    }
    int top = d % 2 ? (d - 1) / 2 : d / 2;
    for (int i = -top; i <= top; ++i) c.sector_indices.push_back(i);
    return c;
}

std::optional<int> sector_of(const Vec3& x, const PeakConfiguration& config)
{
    double psi = rotation_angle(x);
    if (std::abs(psi) > pi / config.k) return std::nullopt;
    double scaled = std::abs(psi) * config.d * config.k / (2.0 * pi);
    int idx = static_cast<int>(std::ceil(scaled - 0.5));
    return psi < 0.0 ? -idx : idx;
}

Vec3 fold_into_sector(const Vec3& x, int k)
{
    double psi = rotation_angle(x);
    double m = std::round(psi * k / (2.0 * pi));
    if (m == 0.0) return x;
    return rotation(-2.0 * pi * m / k) * x;
}

}  // namespace segregate
