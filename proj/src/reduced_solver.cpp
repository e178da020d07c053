#include "segregate/reduced_solver.hpp"

#include "segregate/error.hpp"
#include "segregate/parallel.hpp"
#include "segregate/quadrature.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace segregate {

namespace {

constexpr double pi = std::numbers::pi;

template <std::size_t N>
struct SectorSums {
    std::array<double, N> value{};
    std::array<double, N> magnitude{};
};

// Integral over R^n of a k-periodic field even in x2 (and x3), from one half sector.
template <std::size_t N, class F>
SectorSums<N> sector_pass(const PeakConfiguration& c, double width, int order, double reach, int workers,
                          F&& f)
{
    const GaussRule& rule = gauss_rule(order);
    std::vector<double> wr, wa, wz;
    auto rs = composite_nodes(std::max(0.0, c.rho - reach), c.rho + reach, width, rule, wr);
    double half = pi / c.k;
    double arc_width = width / c.rho;
    auto as = composite_nodes(0.0, half, arc_width, rule, wa);
    std::vector<double> zs{0.0};
    wz = {1.0};
    if (c.n == 3) zs = composite_nodes(0.0, reach, width, rule, wz);
    double factor = 2.0 * c.k * (c.n == 3 ? 2.0 : 1.0);

    std::vector<SectorSums<N>> rows(rs.size());
    parallel_for(rs.size(), workers, [&](std::size_t i) {
        SectorSums<N> acc;
        double R = rs[i];
        for (std::size_t j = 0; j < as.size(); ++j) {
            double cx = R * std::cos(as[j]), cy = -R * std::sin(as[j]);
            for (std::size_t l = 0; l < zs.size(); ++l) {
                double w = wr[i] * R * wa[j] * wz[l];
                std::array<double, N> v = f(Vec3(cx, cy, zs[l]));
                for (std::size_t m = 0; m < N; ++m) {
                    acc.value[m] += w * v[m];
                    acc.magnitude[m] += w * std::abs(v[m]);
                }
            }
        }
        rows[i] = acc;
    });
    SectorSums<N> out;
    for (const auto& r : rows)
        for (std::size_t m = 0; m < N; ++m) {
            out.value[m] += factor * r.value[m];
            out.magnitude[m] += factor * r.magnitude[m];
        }
    return out;
}

template <std::size_t N, class F>
std::array<double, N> sector_integral(const PeakConfiguration& c, const QuadOptions& o, F&& f)
{
    if (o.order < 6) throw Error(ErrorKind::InvalidArgument, "sector quadrature needs order >= 6");
    double width = o.panel;
    for (int level = 0; level <= o.max_refinements; ++level, width *= 0.5) {
        auto fine = sector_pass<N>(c, width, o.order, o.reach, o.workers, f);
        auto coarse = sector_pass<N>(c, width, o.order - 2, o.reach, o.workers, f);
        bool ok = true;
        for (std::size_t m = 0; m < N; ++m) {
            double gap = std::abs(fine.value[m] - coarse.value[m]);
            // cancellations inside an integral are judged against its absolute mass
            double scale = std::max(std::abs(fine.value[m]), 1e-6 * fine.magnitude[m]);
            if (gap > o.rel_tol * scale && gap > 1e-300) ok = false;
        }
        if (ok) return fine.value;
    }
    throw Error(ErrorKind::QuadratureBudgetExceeded, "sector quadrature did not settle");
}

double ln_cross_argument(const SystemParams& s, double rho)
{
    return std::log(2.0 * pi * rho / (double(s.d) * s.k));
}

}  // namespace

std::string to_string(ReducedMode m)
{
    return m == ReducedMode::Leading ? "leading" : "quadrature";
}

std::string to_string(AdmissibilityMode m)
{
    switch (m) {
    case AdmissibilityMode::CubicMain: return "cubic-main";
    case AdmissibilityMode::GeneralI: return "general-i";
    case AdmissibilityMode::GeneralII: return "general-ii";
    case AdmissibilityMode::Unsupported: return "unsupported";
    }
    return "unsupported";
}

BetaThreshold beta_threshold(const SystemParams& s)
{
    double top = s.nu * (s.d - 2) / 2.0;
    if (!(top > 1.0)) {
        std::ostringstream m;
        m << "no admissible b: nu (d-2)/2 = " << top << " <= 1";
        throw Error(ErrorKind::EmptyInterval, m.str());
    }
    BetaThreshold t;
    t.b = 0.5 * (1.0 + top);
    t.beta_k = std::pow(double(s.k), -t.b);
    double rho = s.rho_of(s.d * s.nu / (4.0 * pi));
    double k = s.k;
    double lead = t.beta_k * std::pow(k / rho, 2) * std::exp(-4.0 * pi * rho / (s.d * k)) *
                  std::log(std::log(k));
    t.bound_ratio = t.beta_k * t.beta_k * k * std::exp(-(1.0 - s.alpha) * 4.0 * pi * rho / (s.d * k)) / lead;
    t.same_ratio = (k / rho) * std::exp(-2.0 * pi * rho / k) / lead;
    return t;
}

AdmissibilityReport check_admissibility(const SystemParams& s)
{
    AdmissibilityReport rep;
    auto check = [&](const std::string& name, bool ok) {
        rep.checks.push_back({name, ok});
        return ok;
    };
    bool paired = (s.v_inf > 0.0 && s.beta > 0.0) || (s.v_inf < 0.0 && s.beta < 0.0);
    bool ok = true;
    if (s.cubic()) {
        rep.mode = AdmissibilityMode::CubicMain;
        ok &= check("d >= 3", s.d >= 3);
        ok &= check("nu > 2/(d-2)", s.d >= 3 && s.nu > 2.0 / (s.d - 2));
        ok &= check("sign(v_inf) = sign(beta)", paired);
        rep.predicted_ratio = s.d * s.nu / (4.0 * pi);
        if (s.d >= 3 && s.nu * (s.d - 2) / 2.0 > 1.0) {
            BetaThreshold t = beta_threshold(s);
            rep.beta_k = t.beta_k;
            rep.b = t.b;
            check("|beta| < beta_k", std::abs(s.beta) < t.beta_k);
        }
    } else if (s.d <= (s.p - 1.0) / 2.0) {
        rep.mode = AdmissibilityMode::GeneralII;
        ok &= check("d <= (p-1)/2", true);
        ok &= check("v_inf > 0", s.v_inf > 0.0);
        rep.predicted_ratio = s.nu / (2.0 * pi);
        rep.ratio_is_derived = true;
    } else {
        rep.mode = AdmissibilityMode::GeneralI;
        ok &= check("d > (p+1)/2", s.d > (s.p + 1.0) / 2.0);
        ok &= check("p > 5", s.p > 5.0);
        ok &= check("sign(v_inf) = sign(beta)", paired);
        rep.predicted_ratio = s.d * s.nu / (2.0 * pi * std::min(s.q + 1.0, s.r));
        rep.ratio_is_derived = true;
    }
    rep.admissible = ok;
    return rep;
}

GammaRho gamma_rho(const PeakConfiguration& c, const SystemParams& params, const GroundStateProfile& U,
                   bool full_quadrature, const QuadratureOptions& pair_opts, const QuadOptions& sector_opts)
{
    if (!params.cubic()) throw Error(ErrorKind::ModeUnsupported, "gamma_rho is defined for the cubic system");
    if (c.n != U.dimension()) throw Error(ErrorKind::InvalidArgument, "configuration and profile dimensions differ");
    GammaRho g;

    // self term of int (d_rho W)^2: k/n int |grad U|^2; overlaps are O(e^{-2 rho sin(pi/k)})
    const GaussRule& rule = gauss_rule(16);
    std::vector<double> w;
    auto rs = composite_nodes(0.0, U.r_max() + 10.0, 0.5, rule, w);
    double radial = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        double du = U.derivative(rs[i]);
        radial += w[i] * du * du * std::pow(rs[i], c.n - 1);
    }
    double sphere = c.n == 3 ? 4.0 * pi : 2.0 * pi;
    g.denominator = c.k * sphere * radial / c.n;

    if (full_quadrature) {
        auto v = sector_integral<1>(c, sector_opts, [&](const Vec3& x) {
            return std::array<double, 1>{w_rho(x, c, U) * coupling_sum(x, 2.0, c, U) * drho_w(x, c, U)};
        });
        g.numerator = v[0];
    } else {
        int m_all = c.d * c.k;
        double nearest = 0.0;
        double sum = 0.0;
        for (int m = 1; 2 * m <= m_all; ++m) {
            if (m % c.d == 0) continue;
            double th = 2.0 * pi * m / m_all;
            Vec3 zeta = c.rho * Vec3(std::cos(th) - 1.0, -std::sin(th), 0.0);
            double dist = zeta.norm();
            if (nearest == 0.0) nearest = dist;
            if (dist - nearest > 19.0) break;  // Gamma_22 has dropped by e^-38
            Vec3 grad = gamma_gradient(2.0, 2.0, zeta, U, pair_opts);
            double mult = 2 * m == m_all ? 1.0 : 2.0;
            sum += mult * (-0.5 * grad[0]);
        }
        g.numerator = c.k * sum;
    }
    g.value = g.denominator > 0.0 ? g.numerator / g.denominator : 0.0;
    return g;
}

LeadingConstants leading_constants(const SystemParams& s, const GroundStateProfile& U, const FitOptions& fit)
{
    if (std::abs(U.exponent() - s.p) > 1e-12 || U.dimension() != s.n)
        throw Error(ErrorKind::InvalidArgument, "profile does not match (n, p)");
    if (s.n < 2) throw Error(ErrorKind::CaseUnresolved, "interaction cases need n >= 2");
    FitOptions o = fit;
    o.enforce_invariants = false;
    LeadingConstants c;
    c.mass = U.power_integral(2.0);
    c.same = fit_asymptotics(s.p, 1.0, U, o);
    c.same_law = expected_law(s.p, 1.0, s.n);
    auto anchor = [&](const InteractionFit& f, const AsymptoticLaw& law) {
        double z = std::sqrt(f.zeta_min * f.zeta_max);
        double shape = std::exp(-law.rate * z) * std::pow(z, law.power) * (law.log_flag ? std::log(z) : 1.0);
        return f.value(z) / shape;
    };
    c.same_c = anchor(c.same, c.same_law);
    if (s.d >= 2) {
        c.cross = fit_asymptotics(s.q + 1.0, s.r, U, o);
        c.cross_law = expected_law(s.q + 1.0, s.r, s.n);
        c.cross_c = anchor(c.cross, c.cross_law);
    }
    return c;
}

ReducedSample reduced_leading(const SystemParams& s, double rho, const LeadingConstants& c,
                              const LeadingOptions& opts)
{
    if (s.n < 2) throw Error(ErrorKind::CaseUnresolved, "no leading-order case table for n < 2");
    if (!(rho > 0.0)) throw Error(ErrorKind::InvalidArgument, "rho must be positive");
    ReducedSample out;
    out.rho = rho;
    out.ratio = rho / s.log_k();
    out.mode = ReducedMode::Leading;
    const double k = s.k, d = s.d;
    const double kr = k / rho;

    out.A = 0.5 * s.nu * c.mass;
    out.t1 = s.v_inf * out.A * k / std::pow(rho, s.nu + 1.0);

    const AsymptoticLaw& a2 = c.same_law;
    out.B = 2.0 * pi * a2.rate * c.same_c * std::pow(2.0 * pi, a2.power);
    double z2 = 2.0 * pi * rho / k;
    out.t2 = -out.B * std::pow(kr, -a2.power) * std::exp(-a2.rate * z2) * (a2.log_flag ? std::log(z2) : 1.0);

    if (s.d >= 2 && s.beta != 0.0) {
        const AsymptoticLaw& a3 = c.cross_law;
        out.C = 2.0 * pi * a3.rate * c.cross_c * std::pow(2.0 * pi / d, a3.power) / (d * (s.q + 1.0));
        double z3 = 2.0 * pi * rho / (d * k);
        out.t3 = -s.beta * out.C * std::pow(kr, -a3.power) * std::exp(-a3.rate * z3) *
                 (a3.log_flag ? ln_cross_argument(s, rho) : 1.0);
    }

    if (s.cubic()) {
        out.t4_bound = s.beta * s.beta * k * std::exp(-(1.0 - s.alpha) * 4.0 * pi * rho / (d * k));
    } else {
        out.sigma = std::min({1.0, s.p - 1.0 - s.alpha, (s.q - s.alpha) / d, (s.r - s.alpha) / d});
        out.tau = std::min({1.0, s.p - 1.0 - s.alpha, (s.q - 1.0 - s.alpha) / d, (s.r - 1.0 - s.alpha) / d});
        double phi = std::pow(rho, -s.nu) + std::exp(-2.0 * pi * rho * out.sigma / k);
        out.xi_bound = k * (phi * phi + (std::pow(rho, -s.nu) + std::exp(-2.0 * pi * rho * out.tau / k)) * phi);
    }
    out.t4_included = opts.include_bound;
    out.total = out.t1 + out.t2 + out.t3 + (opts.include_bound ? out.t4_bound : 0.0);
    return out;
}

ReducedSample reduced_quadrature(const PeakConfiguration& c, const SystemParams& s, const GroundStateProfile& U,
                                 const QuadOptions& opts, std::optional<double> correction)
{
    if (c.n != U.dimension() || c.n != s.n)
        throw Error(ErrorKind::InvalidArgument, "configuration, parameters and profile dimensions differ");
    auto v = sector_integral<3>(c, opts, [&](const Vec3& x) {
        double w = w_rho(x, c, U);
        double dw = drho_w(x, c, U);
        double wp = s.p == 3.0 ? w * w * w : std::pow(w, s.p);
        double i1 = (1.0 - potential(x, s)) * w * dw;
        double i2 = (wp - bubble_power_sum(x, s.p, c, U)) * dw;
        double i3 = 0.0;
        if (s.beta != 0.0 && c.d >= 2) i3 = std::pow(w, s.q) * coupling_sum(x, s.r, c, U) * dw;
        return std::array<double, 3>{i1, i2, i3};
    });
    ReducedSample out;
    out.rho = c.rho;
    out.ratio = c.rho / s.log_k();
    out.mode = ReducedMode::Quadrature;
    out.t1 = v[0];
    out.t2 = v[1];
    out.t3 = s.beta * v[2];
    if (s.cubic())
        out.t4_bound = s.beta * s.beta * s.k * std::exp(-(1.0 - s.alpha) * 4.0 * pi * c.rho / (double(s.d) * s.k));
    out.correction = correction.value_or(0.0);
    out.total = out.t1 + out.t2 + out.t3 + out.correction;
    return out;
}

std::pair<double, double> radius_bracket(const SystemParams& s)
{
    if (s.r1 > 0.0 && s.r2 > s.r1) return {s.r1, s.r2};
    double r = check_admissibility(s).predicted_ratio;
    return {0.5 * r, 2.0 * r};
}

RadiusReport find_radius(const SystemParams& s, const std::function<ReducedSample(double)>& eval,
                         const RootOptions& opts)
{
    auto [lo, hi] = radius_bracket(s);
    RadiusReport rep;
    rep.r_lo = lo;
    rep.r_hi = hi;
    rep.predicted_ratio = check_admissibility(s).predicted_ratio;
    double f_lo = eval(s.rho_of(lo)).total;
    double f_hi = eval(s.rho_of(hi)).total;
    rep.c_lo = f_lo;
    rep.c_hi = f_hi;
    auto sign = [](double v) { return v > 0.0 ? '+' : (v < 0.0 ? '-' : '0'); };
    rep.sign_pattern = std::string{sign(f_lo), sign(f_hi)};
    if (f_lo == 0.0 || f_hi == 0.0 || (f_lo > 0.0) == (f_hi > 0.0)) {
        std::ostringstream m;
        m.precision(6);
        m << "C_k keeps one sign on r in [" << lo << ", " << hi << "]: C(lo) = " << f_lo << ", C(hi) = " << f_hi;
        if (f_lo == 0.0 || f_hi == 0.0) {
            if (f_lo != f_hi) {
                rep.r_star = f_lo == 0.0 ? lo : hi;
                rep.rho_star = s.rho_of(rep.r_star);
                rep.at_root = eval(rep.rho_star);
                return rep;
            }
        }
        throw Error(ErrorKind::NoSignChange, m.str());
    }
    double a = lo, b = hi, fa = f_lo;
    int it = 0;
    while (b - a > opts.rel_tol * 0.5 * (a + b) && it < opts.max_iterations) {
        double mid = 0.5 * (a + b);
        double fm = eval(s.rho_of(mid)).total;
        ++it;
        if (fm == 0.0) {
            a = b = mid;
            break;
        }
        if ((fm > 0.0) == (fa > 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if (b - a > opts.rel_tol * 0.5 * (a + b))
        throw Error(ErrorKind::NoConvergence, "bisection did not reach the requested tolerance");
    rep.iterations = it;
    rep.r_star = 0.5 * (a + b);
    rep.rho_star = s.rho_of(rep.r_star);
    rep.at_root = eval(rep.rho_star);
    return rep;
}

RadiusReport find_radius_leading(const SystemParams& s, const LeadingConstants& c, const LeadingOptions& lopts,
                                 const RootOptions& opts)
{
    return find_radius(s, [&](double rho) { return reduced_leading(s, rho, c, lopts); }, opts);
}

}  // namespace segregate
