#include "segregate/ansatz.hpp"

#include "segregate/error.hpp"
#include "segregate/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace segregate {

namespace {

constexpr double pi = std::numbers::pi;
// exp(-38) ~ 3e-17: bubbles this much farther than the nearest one are dropped.
constexpr double horizon_decay = 38.0;

struct Polar {
    double R;    // in-plane radius
    double psi;  // rotation parameter
    double z;    // x3 (zero in the plane)
};

Polar polar_of(const Vec3& x)
{
    return {std::hypot(x[0], x[1]), rotation_angle(x), x[2]};
}

Vec3 point_of(double R, double psi, double z)
{
    return {R * std::cos(psi), -R * std::sin(psi), z};
}

// Visits vertices of the m-gon of radius a at angles phase + 2 pi j / m, nearest first in
// both angular directions, until the distance exceeds the nearest one by `horizon`.
// f(dist, cos(psi - psi_j)).
template <class F>
void for_polygon(const Polar& x, int m, double a, double phase, double horizon, F&& f)
{
    const double step = 2.0 * pi / m;
    const double base = x.R * x.R + a * a + x.z * x.z;
    const double t = (x.psi - phase) / step;
    const long j0 = std::lround(t);
    auto dist = [&](long j, double& c) {
        c = std::cos(x.psi - phase - step * j);
        return std::sqrt(std::max(0.0, base - 2.0 * x.R * a * c));
    };
    double c0;
    double d0 = dist(j0, c0);
    f(d0, c0);
    double cut = d0 + horizon;
    int below = (m - 1) / 2, above = m / 2;
    // the side closer in angle goes up to `above` so each vertex is visited once
    bool up_first = t - j0 >= 0.0;
    int lim_up = up_first ? above : below;
    int lim_dn = up_first ? below : above;
    for (int s = 1; s <= lim_up; ++s) {
        double c;
        double dd = dist(j0 + s, c);
        if (dd > cut) break;
        f(dd, c);
    }
    for (int s = 1; s <= lim_dn; ++s) {
        double c;
        double dd = dist(j0 - s, c);
        if (dd > cut) break;
        f(dd, c);
    }
}

double ipow(double u, double m)
{
    if (m == 1.0) return u;
    if (m == 2.0) return u * u;
    if (m == 3.0) return u * u * u;
    return std::pow(u, m);
}

double horizon_for(double m)
{
    return horizon_decay / std::min(1.0, m);
}

double w_polar(const Polar& x, double phase, const PeakConfiguration& c, const GroundStateProfile& U)
{
    double s = 0.0;
    for_polygon(x, c.k, c.rho, phase, horizon_decay, [&](double r, double) { s += U(r); });
    return s;
}

double power_polar(const Polar& x, double m, const PeakConfiguration& c, const GroundStateProfile& U)
{
    double s = 0.0;
    for_polygon(x, c.k, c.rho, 0.0, horizon_for(m), [&](double r, double) { s += ipow(U(r), m); });
    return s;
}

double coupling_polar(const Polar& x, double m, const PeakConfiguration& c, const GroundStateProfile& U)
{
    double s = 0.0;
    for (int i = 2; i <= c.d; ++i) {
        // W(Theta_i x) = sum over the peaks rotated back by 2 pi (i-1)/(dk)
        double phase = -2.0 * pi * (i - 1) / (double(c.d) * c.k);
        s += ipow(w_polar(x, phase, c, U), m);
    }
    return s;
}

}  // namespace

double SystemParams::log_k() const
{
    return k * std::log(double(k));
}

void validate(const SystemParams& s)
{
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, m); };
    if (s.n != 2 && s.n != 3) fail("n must be 2 or 3");
    if (s.d < 2) fail("d must be at least 2");
    if (s.k < 2) fail("k must be at least 2");
    if (!(s.nu > 1.0)) fail("nu must exceed 1");
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) fail("alpha must lie in (0,1)");
    if (!(s.p > 1.0)) fail("p must exceed 1");
    if (s.n == 3 && !(s.p < 5.0)) fail("p must be below 5 in three dimensions");
    if (!(s.q >= 1.0)) fail("q must be at least 1");
    if (!(s.r > 1.0)) fail("r must exceed 1");
    if (!std::isfinite(s.v_inf)) fail("v_inf must be finite");
    if (!std::isfinite(s.beta)) fail("beta must be finite");
    if (s.r1 < 0.0 || s.r2 < 0.0 || (s.r2 > 0.0 && !(s.r2 > s.r1))) fail("need 0 <= r1 < r2");
}

void validate_cubic_hypotheses(const SystemParams& s)
{
    validate(s);
    if (!s.cubic()) throw Error(ErrorKind::ModeUnsupported, "cubic exponents (p,q,r) = (3,1,2) required");
    if (s.d < 3) throw Error(ErrorKind::InvalidArgument, "d must be at least 3");
    if (!(s.nu > 2.0 / (s.d - 2))) throw Error(ErrorKind::InvalidArgument, "nu must exceed 2/(d-2)");
}

PeakConfiguration peaks_for(const SystemParams& params, double rho)
{
    return build_peaks(params.d, params.k, rho, params.n);
}

double potential(const Vec3& x, const SystemParams& params)
{
    double r = std::max(x.norm(), 1.0);
    double v = 1.0 + params.v_inf / std::pow(r, params.nu);
    if (params.remainder_coeff != 0.0)
        v += params.remainder_coeff / std::pow(r, params.nu + params.remainder_eps);
    return v;
}

double w_rho(const Vec3& x, const PeakConfiguration& config, const GroundStateProfile& profile)
{
    return w_polar(polar_of(x), 0.0, config, profile);
}

double drho_w(const Vec3& x, const PeakConfiguration& config, const GroundStateProfile& profile)
{
    Polar p = polar_of(x);
    double s = 0.0;
    for_polygon(p, config.k, config.rho, 0.0, horizon_decay, [&](double r, double c) {
        if (r > 1e-14) s += profile.derivative(r) * (config.rho - p.R * c) / r;
    });
    return s;
}

double bubble_power_sum(const Vec3& x, double m, const PeakConfiguration& config,
                        const GroundStateProfile& profile)
{
    return power_polar(polar_of(x), m, config, profile);
}

double coupling_sum(const Vec3& x, double m, const PeakConfiguration& config,
                    const GroundStateProfile& profile)
{
    return coupling_polar(polar_of(x), m, config, profile);
}

double weight(const Vec3& x, const PeakConfiguration& config, double alpha)
{
    double s = 0.0;
    for_polygon(polar_of(x), config.d * config.k, config.rho, 0.0, horizon_decay / alpha,
                [&](double r, double) { s += std::exp(-alpha * r); });
    return s;
}

FieldSampler w_field(const PeakConfiguration& config, const GroundStateProfile& profile)
{
    return {[config, &profile](const Vec3& x) { return w_rho(x, config, profile); }, config};
}

FieldSampler drho_w_field(const PeakConfiguration& config, const GroundStateProfile& profile)
{
    return {[config, &profile](const Vec3& x) { return drho_w(x, config, profile); }, config};
}

FieldSampler weight_field(const PeakConfiguration& config, double alpha)
{
    return {[config, alpha](const Vec3& x) { return weight(x, config, alpha); }, config};
}

double symmetry_defect(const FieldSampler& field, int points, unsigned seed)
{
    std::mt19937_64 gen(seed);
    const PeakConfiguration& c = field.config;
    std::uniform_real_distribution<double> rad(0.0, 1.5 * c.rho + 10.0), ang(-pi, pi), zz(-3.0, 3.0);
    Eigen::Matrix3d rot = rotation(2.0 * pi / c.k);
    double worst = 0.0;
    for (int i = 0; i < points; ++i) {
        Vec3 x = point_of(rad(gen), ang(gen), c.n == 3 ? zz(gen) : 0.0);
        double f = field(x);
        double scale = std::max(1.0, std::abs(f));
        if (field.even) {
            Vec3 y(x[0], -x[1], -x[2]);
            worst = std::max(worst, std::abs(f - field(y)) / scale);
            if (c.n == 3) {
                Vec3 y3(x[0], x[1], -x[2]);
                worst = std::max(worst, std::abs(f - field(y3)) / scale);
            }
        }
        if (field.rotational) worst = std::max(worst, std::abs(f - field(rot * x)) / scale);
    }
    return worst;
}

namespace {

std::vector<Vec3> norm_samples(const PeakConfiguration& c, bool even, bool rotational, double h,
                               const NormOptions& o)
{
    double lo, hi;
    if (rotational) {
        hi = pi / c.k;
        lo = even ? 0.0 : -hi;
    } else {
        hi = pi;
        lo = even ? 0.0 : -pi;
    }
    std::vector<double> layers{0.0};
    if (c.n == 3)
        for (double z = h; z <= 8.0 + 1e-12; z *= 2.0) layers.push_back(z);

    std::vector<Vec3> pts;
    auto emit = [&](double R, double psi) {
        for (double z : layers) pts.push_back(point_of(R, psi, z));
    };

    // radial-angular grid over the sector up to 2 rho, dense near the peak circle
    double R = 0.0;
    const double top = 2.0 * c.rho + o.band;
    while (R <= top) {
        int na = std::max(2, static_cast<int>(std::ceil(R * (hi - lo) / h)) + 1);
        for (int j = 0; j < na; ++j) emit(R, lo + (hi - lo) * j / (na - 1));
        R += std::abs(R - c.rho) < o.band ? h : 8.0 * h;
    }

    // rings around every peak whose angle falls in the sampled range
    int m = c.d * c.k;
    double step = 2.0 * pi / m;
    for (long j = std::lround(std::floor(lo / step)); j <= std::lround(std::ceil(hi / step)); ++j) {
        double a = step * j;
        if (a < lo - 1e-12 || a > hi + 1e-12) continue;
        Vec3 centre = point_of(c.rho, a, 0.0);
        Vec3 radial = centre / c.rho;
        Vec3 tangent(-radial[1], radial[0], 0.0);
        for (double s = 0.5 * h; s <= o.ring_radius + 1e-12; s += h) {
            int na = static_cast<int>(std::ceil(2.0 * pi * s / h)) + 8;
            for (int t = 0; t < na; ++t) {
                double th = 2.0 * pi * t / na;
                Vec3 x = centre + s * (std::cos(th) * radial + std::sin(th) * tangent);
                for (double z : layers) pts.push_back(Vec3(x[0], x[1], z));
            }
        }
    }
    return pts;
}

}  // namespace

std::vector<NormResult> weighted_norms(const std::vector<FieldSampler>& fields, double alpha,
                                       const NormOptions& opts)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0,1)");
    if (fields.empty()) return {};
    const PeakConfiguration& c = fields.front().config;
    bool even = true, rotational = true;
    for (const auto& f : fields) {
        even = even && f.even;
        rotational = rotational && f.rotational;
    }

    std::vector<NormResult> best(fields.size()), prev;
    for (int level = 0; level <= opts.max_refinements; ++level) {
        double h = opts.spacing / std::ldexp(1.0, level);
        std::vector<Vec3> pts = norm_samples(c, even, rotational, h, opts);
        std::size_t nf = fields.size();
        std::vector<double> ratio(pts.size() * nf, 0.0);
        parallel_for(pts.size(), opts.workers, [&](std::size_t i) {
            double w = weight(pts[i], c, alpha);
            for (std::size_t f = 0; f < nf; ++f) {
                double v = std::abs(fields[f](pts[i]));
                ratio[i * nf + f] = (w > 0.0 && v > 0.0) ? v / w : 0.0;
            }
        });
        std::vector<NormResult> cur(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            cur[f].spacing = h;
            cur[f].samples = pts.size();
            cur[f].refinements = level;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (ratio[i * nf + f] > cur[f].value) {
                    cur[f].value = ratio[i * nf + f];
                    cur[f].argmax = pts[i];
                }
            }
        }
        bool settled = level > 0;
        if (settled) {
            for (std::size_t f = 0; f < nf; ++f) {
                double a = prev[f].value, b = cur[f].value;
                if (std::abs(b - a) > opts.rel_change * std::max(std::abs(b), 1e-300) && b != a)
                    settled = false;
            }
        }
        best = cur;
        if (settled) break;
        prev = std::move(cur);
    }
    return best;
}

NormResult weighted_norm(const FieldSampler& field, double alpha, const NormOptions& opts)
{
    return weighted_norms({field}, alpha, opts).front();
}

FieldSampler e1_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile)
{
    return {[config, params, &profile](const Vec3& x) {
                return (1.0 - potential(x, params)) * w_rho(x, config, profile);
            },
            config};
}

FieldSampler e2_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile)
{
    return {[config, p = params.p, &profile](const Vec3& x) {
                Polar q = polar_of(x);
                return ipow(w_polar(q, 0.0, config, profile), p) - power_polar(q, p, config, profile);
            },
            config};
}

FieldSampler e3_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile)
{
    return {[config, params, &profile](const Vec3& x) {
                if (params.beta == 0.0) return 0.0;
                Polar q = polar_of(x);
                return params.beta * ipow(w_polar(q, 0.0, config, profile), params.q) *
                       coupling_polar(q, params.r, config, profile);
            },
            config};
}

ErrorComponents error_components(const PeakConfiguration& config, const SystemParams& params,
                                 const GroundStateProfile& profile, std::optional<double> gamma_rho,
                                 const NormOptions& opts)
{
    if (config.n != profile.dimension())
        throw Error(ErrorKind::InvalidArgument, "configuration and profile dimensions differ");
    FieldSampler f1 = e1_field(config, params, profile);
    FieldSampler f2 = e2_field(config, params, profile);
    FieldSampler f3 = e3_field(config, params, profile);
    bool refined = gamma_rho.has_value() && params.cubic();
    double g = gamma_rho.value_or(0.0);
    FieldSampler tot{[=, &profile](const Vec3& x) {
                         double s = f1(x) + f2(x);
                         if (refined)
                             s += params.beta * g * drho_w(x, config, profile);
                         else
                             s += f3(x);
                         return s;
                     },
                     config};
    auto res = weighted_norms({f1, f2, f3, tot}, params.alpha, opts);
    ErrorComponents out;
    out.e1 = res[0].value;
    out.e2 = res[1].value;
    out.e3 = res[2].value;
    out.gamma_rho = g;
    out.total = res[3].value;
    return out;
}

}  // namespace segregate
