#include "segregate/radial_profiles.hpp"

#include "segregate/error.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

namespace segregate {

namespace {

using State = std::array<double, 2>;

double signed_pow(double u, double p)
{
    return u >= 0.0 ? std::pow(u, p) : -std::pow(-u, p);
}

struct RadialRhs {
    int n;
    double p;
    void operator()(const State& y, State& dy, double r) const
    {
        dy[0] = y[1];
        dy[1] = -(n - 1) / r * y[1] + y[0] - signed_pow(y[0], p);
    }
};

enum class Fate { Overshoot, Undershoot, Undecided };

struct Trajectory {
    Fate fate = Fate::Undecided;
    std::vector<double> u, du;  // samples at requested radii, truncated at the fate radius
};

// Integrates from the series start and stops once U < 0 or U' > 0 at a checkpoint.
// Steps land exactly on the checkpoints so sampled values carry full stepper accuracy.
Trajectory shoot(int n, double p, double u0, double r_end, double rtol,
                 const std::vector<double>* sample_at = nullptr)
{
    namespace odeint = boost::numeric::odeint;
    const double r0 = 1e-5;
    const double c = (u0 - std::pow(u0, p)) / n;
    State y{u0 + 0.5 * c * r0 * r0, c * r0};

    std::vector<double> marks;
    if (sample_at) {
        marks = *sample_at;
    } else {
        for (double r = 0.05; r < r_end; r += 0.05) marks.push_back(r);
        marks.push_back(r_end);
    }

    auto stepper = odeint::make_controlled(1e-15, rtol, odeint::runge_kutta_dopri5<State>());
    RadialRhs rhs{n, p};
    Trajectory out;
    double r = r0, dt = 1e-5;
    for (double mark : marks) {
        if (mark <= r0) {
            out.u.push_back(u0 + 0.5 * c * mark * mark);
            out.du.push_back(c * mark);
            continue;
        }
        odeint::integrate_adaptive(stepper, rhs, y, r, mark, dt);
        r = mark;
        if (y[0] < 0.0) {
            out.fate = Fate::Overshoot;
            break;
        }
        if (y[1] > 0.0) {
            out.fate = Fate::Undershoot;
            break;
        }
        out.u.push_back(y[0]);
        out.du.push_back(y[1]);
    }
    return out;
}

// r^{-nu} K_nu(r) with nu = (n-2)/2 solves the linear radial equation and decays.
double bessel_tail(int n, double r)
{
    double nu = 0.5 * (n - 2);
    return std::pow(r, -nu) * boost::math::cyl_bessel_k(std::abs(nu), r);
}

double bessel_tail_derivative(int n, double r)
{
    double nu = 0.5 * (n - 2);
    return -std::pow(r, -nu) * boost::math::cyl_bessel_k(nu + 1.0, r);
}

double sphere_area(int n)
{
    switch (n) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
    }
}

std::vector<double> tail_products(const GroundStateProfile& g)
{
    const auto& r = g.radii();
    const auto& u = g.values();
    std::size_t start = r.size() - r.size() / 4;
    std::vector<double> out;
    for (std::size_t j = start; j < r.size(); ++j)
        out.push_back(std::pow(r[j], 0.5 * (g.dimension() - 1)) * std::exp(r[j]) * u[j]);
    return out;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Fornberg weights for the first derivative at x0 from the given nodes.
std::array<double, 5> first_derivative_weights(double x0, const std::array<double, 5>& x)
{
    std::array<double, 5> w{};
    for (int j = 0; j < 5; ++j) {
        double num = 0.0, den = 1.0;
        for (int m = 0; m < 5; ++m) {
            if (m == j) continue;
            den *= x[j] - x[m];
            double prod = 1.0;
            for (int l = 0; l < 5; ++l)
                if (l != j && l != m) prod *= x0 - x[l];
            num += prod;
        }
        w[j] = num / den;
    }
    return w;
}

}  // namespace

GroundStateProfile::GroundStateProfile(int n, double p, std::vector<double> radii,
                                       std::vector<double> values, std::vector<double> derivatives)
    : n_(n), p_(p), radii_(std::move(radii)), values_(std::move(values)),
      derivatives_(std::move(derivatives))
{
    if (radii_.size() < 8 || radii_.size() != values_.size() || radii_.size() != derivatives_.size())
        throw Error(ErrorKind::InvalidArgument, "profile tables must agree in length");
    second_.resize(radii_.size());
    for (std::size_t j = 0; j < radii_.size(); ++j) {
        double r = radii_[j], u = values_[j];
        second_[j] = (r > 0.0 ? -(n_ - 1) / r * derivatives_[j] : 0.0) + u - signed_pow(u, p_);
        if (r == 0.0) second_[j] = (u - signed_pow(u, p_)) / n_;
    }
    decay_ = median(tail_products(*this));
    seam_ = std::pow(r_max(), 0.5 * (n_ - 1)) * std::exp(r_max()) * values_.back();
}

std::size_t GroundStateProfile::locate(double r) const
{
    auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
    std::size_t j = static_cast<std::size_t>(it - radii_.begin());
    if (j == 0) return 0;
    return std::min(j - 1, radii_.size() - 2);
}

double GroundStateProfile::operator()(double r) const
{
    if (r >= r_max()) return seam_ * std::pow(r, -0.5 * (n_ - 1)) * std::exp(-r);
    std::size_t j = locate(r);
    double h = radii_[j + 1] - radii_[j];
    double t = (r - radii_[j]) / h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * values_[j] + (t3 - 2 * t2 + t) * h * derivatives_[j] +
           (-2 * t3 + 3 * t2) * values_[j + 1] + (t3 - t2) * h * derivatives_[j + 1];
}

double GroundStateProfile::derivative(double r) const
{
    if (r >= r_max()) return -(*this)(r) * (1.0 + 0.5 * (n_ - 1) / r);
    std::size_t j = locate(r);
    double h = radii_[j + 1] - radii_[j];
    double t = (r - radii_[j]) / h;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * derivatives_[j] + (t3 - 2 * t2 + t) * h * second_[j] +
           (-2 * t3 + 3 * t2) * derivatives_[j + 1] + (t3 - t2) * h * second_[j + 1];
}

double GroundStateProfile::second_derivative(double r) const
{
    double u = (*this)(r);
    if (r == 0.0) return (u - signed_pow(u, p_)) / n_;
    return -(n_ - 1) / r * derivative(r) + u - signed_pow(u, p_);
}

double GroundStateProfile::max_ode_residual() const
{
    double worst = 0.0;
    for (std::size_t j = 2; j + 2 < radii_.size(); ++j) {
        std::array<double, 5> x{radii_[j - 2], radii_[j - 1], radii_[j], radii_[j + 1], radii_[j + 2]};
        auto w = first_derivative_weights(radii_[j], x);
        double upp = 0.0;
        for (int m = 0; m < 5; ++m) upp += w[m] * derivatives_[j - 2 + m];
        double r = radii_[j], u = values_[j];
        double res = -upp - (n_ - 1) / r * derivatives_[j] + u - signed_pow(u, p_);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

double GroundStateProfile::power_integral(double m) const
{
    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    auto integrate = [&](double a, double b) {
        double mid = 0.5 * (a + b), half = 0.5 * (b - a), s = 0.0;
        for (int i = 0; i < 4; ++i) {
            double r = mid + half * gx[i];
            s += gw[i] * std::pow((*this)(r), m) * std::pow(r, n_ - 1);
        }
        return s * half;
    };
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < radii_.size(); ++j) total += integrate(radii_[j], radii_[j + 1]);
    double a = r_max(), b = r_max() + 40.0 / m;
    for (int i = 0; i < 200; ++i) total += integrate(a + (b - a) * i / 200, a + (b - a) * (i + 1) / 200);
    return sphere_area(n_) * total;
}

GroundStateProfile solve_ground_state(int n, double p, const ShootingOptions& opts)
{
    if (n < 1 || n > 3) throw Error(ErrorKind::InvalidArgument, "dimension must be 1, 2 or 3");
    if (!(p > 1.0) || (n == 3 && p >= 5.0))
        throw Error(ErrorKind::InvalidExponent, "exponent must satisfy 1 < p < (n+2)/(n-2)");
    if (opts.r_max < 20.0) throw Error(ErrorKind::InvalidArgument, "r_max must be at least 20");
    if (!(opts.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");

    const double rtol = std::min(opts.tol / 10.0, 1e-11);
    const double r_probe = 80.0;

    double lo = 1.0 + 1e-9;
    if (shoot(n, p, lo, r_probe, rtol).fate != Fate::Undershoot)
        throw Error(ErrorKind::NoConvergence, "lower shooting value does not undershoot");
    double hi = 2.0;
    int grow = 0;
    while (shoot(n, p, hi, r_probe, rtol).fate != Fate::Overshoot) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 60) throw Error(ErrorKind::NoConvergence, "no overshooting value found");
    }
    int it = 0;
    for (; it < opts.max_bisections && hi - lo > 4e-16 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        Fate f = shoot(n, p, mid, r_probe, rtol).fate;
        if (f == Fate::Overshoot) hi = mid;
        else if (f == Fate::Undershoot) lo = mid;
        else { lo = hi = mid; break; }
    }
    if (hi - lo > 1e-12 * hi) throw Error(ErrorKind::NoConvergence, "shooting bracket did not close");

    const std::size_t N = opts.points;
    const double a = 3.0;
    std::vector<double> radii(N);
    for (std::size_t j = 0; j < N; ++j)
        radii[j] = opts.r_max * std::sinh(a * double(j) / double(N - 1)) / std::sinh(a);
    radii.front() = 0.0;
    radii.back() = opts.r_max;

    Trajectory tl = shoot(n, p, lo, opts.r_max, rtol, &radii);
    Trajectory th = shoot(n, p, hi, opts.r_max, rtol, &radii);
    std::size_t valid = std::min(tl.u.size(), th.u.size());
    std::vector<double> u(N), du(N);
    for (std::size_t j = 0; j < valid; ++j) {
        u[j] = 0.5 * (tl.u[j] + th.u[j]);
        du[j] = 0.5 * (tl.du[j] + th.du[j]);
    }
    // Match to the decaying linear solution where value and slope agree best on one amplitude:
    // the nonlinearity spoils the agreement at small r, the growing mode at large r.
    std::size_t match = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < valid; ++j) {
        if (std::abs(th.u[j] - tl.u[j]) > 1e-6 * std::abs(u[j])) break;
        if (std::pow(u[j], p - 1.0) > 1e-3) continue;
        double amp_value = u[j] / bessel_tail(n, radii[j]);
        double amp_slope = du[j] / bessel_tail_derivative(n, radii[j]);
        double mismatch = std::abs(amp_value / amp_slope - 1.0);
        if (mismatch < best) {
            best = mismatch;
            match = j;
        }
    }
    if (match == 0) throw Error(ErrorKind::NoConvergence, "no radius suitable for tail matching");
    double scale = u[match] / bessel_tail(n, radii[match]);
    for (std::size_t j = match + 1; j < N; ++j) {
        u[j] = scale * bessel_tail(n, radii[j]);
        du[j] = scale * bessel_tail_derivative(n, radii[j]);
    }
    u.front() = 0.5 * (lo + hi);
    du.front() = 0.0;
    return GroundStateProfile(n, p, std::move(radii), std::move(u), std::move(du));
}

double decay_constant(const GroundStateProfile& profile)
{
    if (profile.r_max() < 20.0)
        throw Error(ErrorKind::InvalidArgument, "decay constant needs r_max >= 20");
    auto v = tail_products(profile);
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    double med = median(v);
    if ((*mx - *mn) > 0.01 * med)
        throw Error(ErrorKind::TailNotSettled, "tail product spread exceeds 1%");
    return med;
}

namespace {

// Solves a symmetric tridiagonal system in place (diagonally dominant, no pivoting).
void tridiagonal_solve(const std::vector<double>& diag, const std::vector<double>& off,
                       Eigen::Ref<Eigen::VectorXd> x)
{
    std::size_t n = diag.size();
    std::vector<double> c(n), d(n);
    c[0] = off.size() ? off[0] / diag[0] : 0.0;
    d[0] = x[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        double m = diag[i] - off[i - 1] * c[i - 1];
        c[i] = i + 1 < n ? off[i] / m : 0.0;
        d[i] = (x[i] - off[i - 1] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

std::vector<EigenPair> subspace_pairs(const GroundStateProfile& profile, int mode, int count,
                                      const EigenOptions& opts)
{
    const int n = profile.dimension();
    const double h = opts.step;
    const std::size_t N = static_cast<std::size_t>(std::llround(opts.radius / h));
    const double c = n == 2 ? double(mode) * mode : (n == 3 ? double(mode) * (mode + 1) : 0.0);

    std::vector<double> r(N), diag(N), off(N - 1), mass(N);
    auto face = [&](double x) { return std::pow(x, n - 1); };
    for (std::size_t i = 0; i < N; ++i) {
        r[i] = (double(i) + 0.5) * h;
        double left = i == 0 ? 0.0 : face(double(i) * h) / h;
        double right = i + 1 == N ? 2.0 * face(double(N) * h) / h : face(double(i + 1) * h) / h;
        diag[i] = left + right + h * face(r[i]) * (1.0 + c / (r[i] * r[i]));
        if (i + 1 < N) off[i] = -face(double(i + 1) * h) / h;
        double u = profile(r[i]);
        mass[i] = h * face(r[i]) * u * u;
    }

    const int q = std::min<int>(count + 4, static_cast<int>(N));
    Eigen::MatrixXd X(N, q);
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = dist(rng);

    Eigen::Map<const Eigen::VectorXd> M(mass.data(), Eigen::Index(N));
    auto applyA = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(v.size());
        for (std::size_t i = 0; i < N; ++i) {
            double s = diag[i] * v[i];
            if (i > 0) s += off[i - 1] * v[i - 1];
            if (i + 1 < N) s += off[i] * v[i + 1];
            out[i] = s;
        }
        return out;
    };

    Eigen::VectorXd previous = Eigen::VectorXd::Constant(count, 0.0);
    Eigen::VectorXd lambdas;
    Eigen::MatrixXd Z;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
        Eigen::MatrixXd Y = M.asDiagonal() * X;
        for (int j = 0; j < q; ++j) tridiagonal_solve(diag, off, Y.col(j));
        Eigen::MatrixXd AY(N, q);
        for (int j = 0; j < q; ++j) AY.col(j) = applyA(Y.col(j));
        Eigen::MatrixXd K = Y.transpose() * AY;
        Eigen::MatrixXd B = Y.transpose() * M.asDiagonal() * Y;
        K = 0.5 * (K + K.transpose());
        B = 0.5 * (B + B.transpose());
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(K, B);
        if (ges.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "Rayleigh-Ritz failed");
        lambdas = ges.eigenvalues();
        X = Y * ges.eigenvectors();
        Eigen::VectorXd head = lambdas.head(count);
        if (it > 2 && ((head - previous).array().abs() <= opts.tol * head.array().abs()).all()) {
            converged = true;
            break;
        }
        previous = head;
    }
    if (!converged) throw Error(ErrorKind::NoConvergence, "subspace iteration did not settle");

    std::vector<EigenPair> out;
    for (int j = 0; j < count; ++j) {
        EigenPair e;
        e.lambda = lambdas[j];
        e.mode = mode;
        e.radii = r;
        Eigen::VectorXd v = X.col(j);
        double norm = std::sqrt(v.dot(M.asDiagonal() * v));
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) norm = -norm;
        e.phi.assign(v.data(), v.data() + v.size());
        for (double& x : e.phi) x /= norm;
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

std::vector<EigenPair> eigenpairs(const GroundStateProfile& profile, int mode, int count,
                                  const EigenOptions& opts)
{
    if (std::abs(profile.exponent() - 3.0) > 1e-12)
        throw Error(ErrorKind::ModeUnsupported, "weighted eigenproblem is only defined for p = 3");
    if (count < 1 || mode < 0) throw Error(ErrorKind::InvalidArgument, "count >= 1 and mode >= 0 required");
    if (profile.dimension() == 1 && mode > 0)
        throw Error(ErrorKind::InvalidArgument, "no angular modes in one dimension");

    auto base = subspace_pairs(profile, 0, mode == 0 ? count : 1, opts);
    if (std::abs(base.front().lambda - 1.0) > 1e-2)
        throw Error(ErrorKind::DiscretizationTooCoarse, "first eigenvalue of mode 0 is off from 1");
    if (mode == 0) return base;
    return subspace_pairs(profile, mode, count, opts);
}

}  // namespace segregate
