#include "segregate/interactions.hpp"

#include "segregate/error.hpp"
#include "segregate/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

namespace segregate {

namespace {

inline double power(double u, double e)
{
    if (e == 1.0) return u;
    if (e == 2.0) return u * u;
    if (e == 3.0) return u * u * u;
    if (e == 4.0) { double q = u * u; return q * q; }
    return std::pow(u, e);
}

struct Box {
    double z_lo, z_hi, q_hi;
};

// Region outside which U^s(x + zeta) U^t(x) < e^-cut times the peak of the integrand, using U ~ e^-r.
Box truncation_box(double s, double t, double R, double cut)
{
    double m = std::min(s, t), sum = s + t;
    Box b;
    b.z_hi = std::max(0.0, (cut + (m - s) * R) / sum) + 2.0;
    b.z_lo = -R - std::max(0.0, (cut + (m - t) * R) / sum) - 2.0;
    b.q_hi = (cut + m * R) / sum + 2.0;
    return b;
}

// Integral over the half plane through the axis e1, weighted to cover R^n; f(r1, r0, z + R).
template <class F>
double axial_integral(int n, double R, const Box& box, double width, int order, F&& f)
{
    const GaussRule& r = gauss_rule(order);
    std::vector<double> wz, wq;
    auto z = composite_nodes(box.z_lo, box.z_hi, width, r, wz);
    auto q = composite_nodes(0.0, box.q_hi, width, r, wq);
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        double zi = z[i], zr = zi + R, row = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            double qj = q[j];
            double r0 = std::sqrt(zi * zi + qj * qj);
            double r1 = std::sqrt(zr * zr + qj * qj);
            double weight = n == 3 ? 2.0 * std::numbers::pi * qj : 2.0;
            row += wq[j] * weight * f(r1, r0, zr);
        }
        total += wz[i] * row;
    }
    return total;
}

template <class F>
double refined_integral(int n, double R, double s, double t, const QuadratureOptions& o, F&& f)
{
    if (n != 2 && n != 3) throw Error(ErrorKind::InvalidArgument, "interaction integrals need n in {2,3}");
    Box box = truncation_box(s, t, R, o.truncation);
    double width = o.panel;
    for (int level = 0; level <= o.max_refinements; ++level, width *= 0.5) {
        double fine = axial_integral(n, R, box, width, o.order, f);
        double coarse = axial_integral(n, R, box, width, o.order - 2, f);
        if (std::abs(fine - coarse) <= o.rel_tol * std::abs(fine)) return fine;
    }
    throw Error(ErrorKind::QuadratureBudgetExceeded, "interaction quadrature did not settle");
}

}  // namespace

double gamma_radial(double s, double t, double R, const GroundStateProfile& U, const QuadratureOptions& opts)
{
    if (s < 1.0 || t < 1.0) throw Error(ErrorKind::InvalidArgument, "exponents must be at least 1");
    return refined_integral(U.dimension(), R, s, t, opts, [&](double r1, double r0, double) {
        return power(U(r1), s) * power(U(r0), t);
    });
}

double gamma(double s, double t, const Vec3& zeta, const GroundStateProfile& U, const QuadratureOptions& opts)
{
    return gamma_radial(s, t, zeta.norm(), U, opts);
}

double gamma_radial_derivative(double s, double t, double R, const GroundStateProfile& U,
                               const QuadratureOptions& opts)
{
    if (s < 1.0 || t < 1.0) throw Error(ErrorKind::InvalidArgument, "exponents must be at least 1");
    return refined_integral(U.dimension(), R, s, t, opts, [&](double r1, double r0, double axial) {
        if (r1 == 0.0) return 0.0;
        return s * power(U(r1), s - 1.0) * U.derivative(r1) * (axial / r1) * power(U(r0), t);
    });
}

Vec3 gamma_gradient(double s, double t, const Vec3& zeta, const GroundStateProfile& U,
                    const QuadratureOptions& opts)
{
    double R = zeta.norm();
    if (!(R > 0.0)) throw Error(ErrorKind::InvalidArgument, "gradient needs a nonzero offset");
    return gamma_radial_derivative(s, t, R, U, opts) * (zeta / R);
}

AsymptoticLaw expected_law(double s, double t, int n)
{
    AsymptoticLaw law;
    double m = std::min(s, t);
    law.rate = m;
    if (std::abs(s - t) > 1e-12) {
        law.power = -m * (n - 1) / 2.0;
        return law;
    }
    double threshold = (n + 1.0) / (n - 1.0);
    if (std::abs(s - threshold) < 1e-12) {
        law.power = -s * (n - 1) / 2.0;
        law.log_flag = true;
    } else if (s > threshold) {
        law.power = -s * (n - 1) / 2.0;
    } else {
        // Below the threshold the integrand is carried by the whole segment between the centres.
        law.power = -s * (n - 1) + (n + 1) / 2.0;
    }
    return law;
}

double InteractionFit::value(double z) const
{
    double v = constant * std::exp(-rate * z) * std::pow(z, power);
    return log_flag ? v * std::log(z) : v;
}

double InteractionFit::derivative(double z) const
{
    double logd = -rate + power / z + (log_flag ? 1.0 / (z * std::log(z)) : 0.0);
    return value(z) * logd;
}

std::string fit_violations(const InteractionFit& f)
{
    AsymptoticLaw law = expected_law(f.s, f.t, f.n);
    std::ostringstream out;
    if (std::abs(f.rate - law.rate) > 0.02 * law.rate)
        out << "rate " << f.rate << " vs " << law.rate << "; ";
    double tol = law.power == 0.0 ? 0.05 : 0.05 * std::abs(law.power);
    if (std::abs(f.power - law.power) > tol) out << "power " << f.power << " vs " << law.power << "; ";
    if (f.log_flag != law.log_flag) out << "log flag " << f.log_flag << " vs " << law.log_flag << "; ";
    if (!(f.constant > 0.0)) out << "constant not positive; ";
    return out.str();
}

InteractionFit fit_asymptotics(double s, double t, const GroundStateProfile& U, const FitOptions& o)
{
    if (o.zeta_min < 8.0 || o.samples < 12 || !(o.zeta_max > o.zeta_min))
        throw Error(ErrorKind::InvalidArgument, "fit window needs zeta_min >= 8 and at least 12 samples");

    const int m = o.samples;
    std::vector<double> zs(m), gs(m);
    for (int i = 0; i < m; ++i) zs[i] = o.zeta_min + (o.zeta_max - o.zeta_min) * i / (m - 1);

    unsigned workers = o.workers > 0 ? unsigned(o.workers) : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, unsigned(m));
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = int(w); i < m; i += int(workers)) gs[i] = gamma_radial(s, t, zs[i], U, o.quadrature);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : failures)
        if (e) std::rethrow_exception(e);

    Eigen::MatrixXd A(m, 3);
    Eigen::VectorXd plain(m), logged(m);
    for (int i = 0; i < m; ++i) {
        if (!(gs[i] > 0.0)) throw Error(ErrorKind::FitRejected, "interaction integral not positive in window");
        A(i, 0) = 1.0;
        A(i, 1) = -zs[i];
        A(i, 2) = std::log(zs[i]);
        plain[i] = std::log(gs[i]);
        logged[i] = plain[i] - std::log(std::log(zs[i]));
    }
    auto solve = [&](const Eigen::VectorXd& y, Eigen::Vector3d& coef, double& rms, double& worst) {
        coef = A.colPivHouseholderQr().solve(y);
        Eigen::VectorXd res = y - A * coef;
        rms = std::sqrt(res.squaredNorm() / m);
        worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::max(worst, std::abs(std::expm1(res[i])));
    };
    Eigen::Vector3d ca, cb;
    double rms_a, rms_b, worst_a, worst_b;
    solve(plain, ca, rms_a, worst_a);
    solve(logged, cb, rms_b, worst_b);

    InteractionFit f;
    f.s = s;
    f.t = t;
    f.n = U.dimension();
    f.zeta_min = o.zeta_min;
    f.zeta_max = o.zeta_max;
    f.rms_plain = rms_a;
    f.rms_log = rms_b;
    f.log_flag = rms_b <= 0.7 * rms_a;
    const Eigen::Vector3d& c = f.log_flag ? cb : ca;
    f.constant = std::exp(c[0]);
    f.rate = c[1];
    f.power = c[2];
    f.max_rel_residual = f.log_flag ? worst_b : worst_a;
    if (worst_a > 0.05 && worst_b > 0.05)
        throw Error(ErrorKind::FitRejected, "neither asymptotic model fits within 5%");
    if (o.enforce_invariants) {
        std::string why = fit_violations(f);
        if (!why.empty()) throw Error(ErrorKind::FitRejected, why);
    }
    return f;
}

}  // namespace segregate
