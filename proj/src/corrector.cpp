#include "segregate/corrector.hpp"

#include "segregate/error.hpp"
#include "segregate/parallel.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>
#include <sstream>

namespace segregate {

namespace {
constexpr double pi = std::numbers::pi;
}

Vec3 GridDomain::point(std::size_t c) const
{
    int i = static_cast<int>(c / ntheta), j = static_cast<int>(c % ntheta);
    double r = radius(i), a = angle(j);
    return {r * std::cos(a), -r * std::sin(a), 0.0};
}

double GridDomain::area(std::size_t c) const
{
    return radius(static_cast<int>(c / ntheta)) * h * dpsi;
}

std::size_t GridDomain::rotated(std::size_t c, int cells) const
{
    int i = static_cast<int>(c / ntheta), j = static_cast<int>(c % ntheta);
    const int period = half ? 2 * ntheta : ntheta;  // cells per 2 pi / k
    int u = ((j + cells) % period + period) % period;
    if (half && u >= ntheta) u = period - 1 - u;  // angle in (pi/k, 2pi/k): rotate back, then reflect
    return index(i, u);
}

int GridDomain::component_shift(int i) const
{
    // 2 pi (i-1)/(dk) spans 2 pi / k * (i-1)/d, and 2 pi / k is 2 * ntheta cells in half mode
    const int period = half ? 2 * ntheta : ntheta;
    return period * (i - 1) / config.d;
}

GridDomain build_grid(const PeakConfiguration& config, const GridOptions& o)
{
    if (config.n != 2) throw Error(ErrorKind::ModeUnsupported, "the corrector grid is two-dimensional");
    if (!(o.nodes_per_unit >= 1.0) || !(o.margin > 0.0))
        throw Error(ErrorKind::InvalidArgument, "grid needs margin > 0 and nodes_per_unit >= 1");
    GridDomain g;
    g.config = config;
    g.half = o.half;
    g.r_in = std::max(0.0, config.rho - o.margin);
    g.r_out = config.rho + o.margin;
    g.nr = static_cast<int>(std::ceil((g.r_out - g.r_in) * o.nodes_per_unit));
    g.h = (g.r_out - g.r_in) / g.nr;
    double half_width = pi / config.k;
    int m = static_cast<int>(std::ceil(o.nodes_per_unit * (config.rho + 6.0) * half_width));
    m = ((m + config.d - 1) / config.d) * config.d;
    g.ntheta = o.half ? m : 2 * m;
    g.dpsi = half_width / m;
    g.psi0 = o.half ? 0.0 : -half_width;
    return g;
}

Eigen::VectorXd sample(const GridDomain& grid, const std::function<double(const Vec3&)>& f)
{
    Eigen::VectorXd v(grid.size());
    parallel_for(grid.size(), 0, [&](std::size_t c) { v[c] = f(grid.point(c)); });
    return v;
}

Eigen::VectorXd rotated_sum(const GridDomain& grid, const Eigen::VectorXd& f, int power)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
    for (int i = 2; i <= grid.config.d; ++i) {
        int s = grid.component_shift(i);
        for (std::size_t c = 0; c < grid.size(); ++c) out[c] += std::pow(f[grid.rotated(c, s)], power);
    }
    return out;
}

double grid_norm(const GridDomain& grid, const Eigen::VectorXd& f, double alpha)
{
    double best = 0.0;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        if (f[c] == 0.0) continue;
        double w = weight(grid.point(c), grid.config, alpha);
        if (w > 0.0) best = std::max(best, std::abs(f[c]) / w);
    }
    return best;
}

LinearOperator assemble_linear(const GridDomain& g, const SystemParams& params, const GroundStateProfile& U,
                               OperatorVariant variant, const AssembleOptions& opts)
{
    if (!params.cubic()) throw Error(ErrorKind::ModeUnsupported, "the corrector handles the cubic system only");
    if (g.config.n != 2 || U.dimension() != 2)
        throw Error(ErrorKind::ModeUnsupported, "the corrector is implemented for n = 2");
    const PeakConfiguration& cfg = g.config;
    const std::size_t N = g.size();
    LinearOperator op;
    op.area.resize(N);
    op.w.resize(N);
    op.z.resize(N);
    Eigen::VectorXd cubes(N), pot(N);
    parallel_for(N, opts.workers, [&](std::size_t c) {
        Vec3 x = g.point(c);
        op.area[c] = g.area(c);
        op.w[c] = w_rho(x, cfg, U);
        op.z[c] = drho_w(x, cfg, U);
        cubes[c] = bubble_power_sum(x, 3.0, cfg, U);
        pot[c] = potential(x, params);
    });
    Eigen::VectorXd cross_sq = rotated_sum(g, op.w, 2);

    // stiffness of -Lap integrated over cells
    std::vector<std::vector<Eigen::Triplet<double>>> rows(N);
    parallel_for(N, opts.workers, [&](std::size_t c) {
        int i = static_cast<int>(c / g.ntheta), j = static_cast<int>(c % g.ntheta);
        auto& t = rows[c];
        double diag = 0.0;
        double r_lo = g.r_in + i * g.h, r_hi = r_lo + g.h;
        if (i > 0) {
            double a = r_lo * g.dpsi / g.h;
            t.emplace_back(c, g.index(i - 1, j), -a);
            diag += a;
        } else if (g.r_in > 0.0) {
            diag += r_lo * g.dpsi / (0.5 * g.h);  // Dirichlet at the inner circle
        }
        if (i + 1 < g.nr) {
            double a = r_hi * g.dpsi / g.h;
            t.emplace_back(c, g.index(i + 1, j), -a);
            diag += a;
        } else {
            diag += r_hi * g.dpsi / (0.5 * g.h);  // Dirichlet at r_out
        }
        double b = g.h / (g.radius(i) * g.dpsi);
        for (int dj : {-1, 1}) {
            int jj = j + dj;
            if (jj < 0 || jj >= g.ntheta) {
                if (g.half) continue;  // reflecting edge
                jj = (jj + g.ntheta) % g.ntheta;
            }
            if (jj == j) continue;
            t.emplace_back(c, g.index(i, jj), -b);
            diag += b;
        }
        double a = op.area[c];
        diag += a * (pot[c] - 3.0 * op.w[c] * op.w[c] - params.beta * cross_sq[c]);
        t.emplace_back(c, c, diag);
        if (variant == OperatorVariant::Full && params.beta != 0.0) {
            for (int k = 2; k <= cfg.d; ++k) {
                std::size_t img = g.rotated(c, g.component_shift(k));
                t.emplace_back(c, img, -2.0 * params.beta * a * op.w[c] * op.w[img]);
            }
        }
    });
    std::vector<Eigen::Triplet<double>> all;
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    op.matrix.resize(N, N);
    op.matrix.setFromTriplets(all.begin(), all.end());

    // -Lap W = sum U_h^3 - W near the first peak, away from the truncation boundary
    Eigen::SparseMatrix<double> lap = op.matrix;
    {
        std::vector<Eigen::Triplet<double>> fix;
        for (std::size_t c = 0; c < N; ++c) {
            double a = op.area[c];
            double local = a * (pot[c] - 3.0 * op.w[c] * op.w[c] - params.beta * cross_sq[c]);
            fix.emplace_back(c, c, -local);
            if (variant == OperatorVariant::Full && params.beta != 0.0)
                for (int k = 2; k <= cfg.d; ++k) {
                    std::size_t img = g.rotated(c, g.component_shift(k));
                    fix.emplace_back(c, img, 2.0 * params.beta * a * op.w[c] * op.w[img]);
                }
        }
        Eigen::SparseMatrix<double> corr(N, N);
        corr.setFromTriplets(fix.begin(), fix.end());
        lap += corr;
    }
    Eigen::VectorXd lw = lap * op.w;
    Vec3 peak = cfg.rho * cfg.xi.front();
    double worst = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < N; ++c) {
        int i = static_cast<int>(c / g.ntheta);
        if ((g.point(c) - peak).norm() > 6.0 || i == 0 || i + 1 == g.nr) continue;
        double exact = cubes[c] - op.w[c];
        worst = std::max(worst, std::abs(lw[c] / op.area[c] - exact));
        scale = std::max(scale, std::abs(exact));
    }
    op.self_test_error = scale > 0.0 ? worst / scale : 0.0;
    if (op.self_test_error > opts.self_test_tol) {
        std::ostringstream m;
        m << "discrete Laplacian of W misses its exact image by " << op.self_test_error << " (relative)";
        throw Error(ErrorKind::GridTooCoarse, m.str());
    }
    return op;
}

void check_resonance(double beta, const GroundStateProfile& profile, double radius)
{
    for (int mode = 0; mode <= 2; ++mode) {
        for (const EigenPair& e : eigenpairs(profile, mode, 3)) {
            if (std::abs(beta - e.lambda) < radius) {
                std::ostringstream m;
                m << "beta = " << beta << " lies within " << radius << " of Lambda = " << e.lambda << " (mode " << mode
                  << ")";
                throw Error(ErrorKind::NearResonance, m.str());
            }
        }
    }
}

struct ConstrainedSolver::Impl {
    const LinearOperator* op;
    const GridDomain* grid;
    double alpha;
    SolveOptions opts;
    Eigen::SparseMatrix<double> saddle;
    Eigen::VectorXd mz;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

ConstrainedSolver::ConstrainedSolver(const LinearOperator& op, const GridDomain& grid, double alpha,
                                     const SolveOptions& opts)
    : impl_(std::make_unique<Impl>())
{
    if (opts.resonance_profile) check_resonance(opts.beta, *opts.resonance_profile, opts.resonance_radius);
    Impl& s = *impl_;
    s.op = &op;
    s.grid = &grid;
    s.alpha = alpha;
    s.opts = opts;
    const Eigen::Index N = op.matrix.rows();
    s.mz = op.area.cwiseProduct(op.z);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(op.matrix.nonZeros() + 2 * N);
    for (int col = 0; col < op.matrix.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, col); it; ++it)
            t.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index c = 0; c < N; ++c) {
        if (s.mz[c] == 0.0) continue;
        t.emplace_back(c, N, -s.mz[c]);
        t.emplace_back(N, c, s.mz[c]);
    }
    s.saddle.resize(N + 1, N + 1);
    s.saddle.setFromTriplets(t.begin(), t.end());
    s.saddle.makeCompressed();
    s.lu.compute(s.saddle);
    if (s.lu.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "factorisation of the bordered system failed");
}

ConstrainedSolver::~ConstrainedSolver() = default;

CorrectionResult ConstrainedSolver::solve(const Eigen::VectorXd& h) const
{
    const Impl& s = *impl_;
    const Eigen::Index N = s.op->matrix.rows();
    if (h.size() != N) throw Error(ErrorKind::InvalidArgument, "right-hand side does not match the grid");
    Eigen::VectorXd b(N + 1);
    b.head(N) = s.op->area.cwiseProduct(h);
    b[N] = 0.0;
    Eigen::VectorXd x = s.lu.solve(b);
    if (s.lu.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "bordered solve failed");
    double bn = b.norm();
    auto residual = [&](const Eigen::VectorXd& v) {
        return bn > 0.0 ? (s.saddle * v - b).norm() / bn : (s.saddle * v).norm();
    };
    double res = residual(x);
    for (int pass = 0; pass < 2 && res > 1e-13; ++pass) {
        x += s.lu.solve(b - s.saddle * x);
        res = residual(x);
    }
    if (res > s.opts.residual_tol) {
        std::ostringstream m;
        m << "bordered solve residual " << res;
        throw Error(ErrorKind::SolverFailure, m.str());
    }
    CorrectionResult out;
    out.field = x.head(N);
    out.multiplier = x[N];
    out.linear_residual = res;
    double pz = s.op->area.cwiseProduct(out.field).dot(s.op->z);
    double pn = std::sqrt(s.op->area.cwiseProduct(out.field).dot(out.field));
    double zn = std::sqrt(s.mz.dot(s.op->z));
    out.orthogonality = pn > 0.0 && zn > 0.0 ? std::abs(pz) / (pn * zn) : 0.0;
    out.norm_star = grid_norm(*s.grid, out.field, s.alpha);
    return out;
}

CorrectionResult solve_constrained(const LinearOperator& op, const Eigen::VectorXd& h, const GridDomain& grid,
                                   double alpha, const SolveOptions& opts)
{
    ConstrainedSolver solver(op, grid, alpha, opts);
    return solver.solve(h);
}

CorrectionResult compute_Y(const ConstrainedSolver& solver, const LinearOperator& op, const GridDomain& grid,
                           double gamma)
{
    Eigen::VectorXd rhs = op.w.cwiseProduct(rotated_sum(grid, op.w, 2)) - gamma * op.z;
    return solver.solve(rhs);
}

Eigen::VectorXd remainder_q(const GridDomain& g, const LinearOperator& op, const SystemParams& params,
                            const Eigen::VectorXd& phi)
{
    const std::size_t N = g.size();
    Eigen::VectorXd q(N);
    for (std::size_t c = 0; c < N; ++c) {
        double f = phi[c], w = op.w[c];
        q[c] = 3.0 * w * f * f + f * f * f;
    }
    if (params.beta == 0.0) return q;
    for (int i = 2; i <= g.config.d; ++i) {
        int s = g.component_shift(i);
        for (std::size_t c = 0; c < N; ++c) {
            std::size_t m = g.rotated(c, s);
            double f = phi[c], fi = phi[m];
            q[c] += params.beta * (2.0 * f * op.w[m] * fi + op.w[c] * fi * fi + f * fi * fi);
        }
    }
    return q;
}

Eigen::VectorXd error_field(const GridDomain& g, const LinearOperator& op, const SystemParams& params,
                            const GroundStateProfile& U, double gamma, const CorrectionResult& y)
{
    const std::size_t N = g.size();
    Eigen::VectorXd e(N);
    parallel_for(N, 0, [&](std::size_t c) {
        Vec3 x = g.point(c);
        double w = op.w[c];
        e[c] = (1.0 - potential(x, params)) * w + w * w * w - bubble_power_sum(x, 3.0, g.config, U);
    });
    e += params.beta * (gamma - y.multiplier) * op.z;
    e += remainder_q(g, op, params, params.beta * y.field);
    return e;
}

Eigen::VectorXd nonlinear_n(const GridDomain& g, const LinearOperator& op, const SystemParams& params,
                            const Eigen::VectorXd& psi, const Eigen::VectorXd& phi)
{
    return remainder_q(g, op, params, psi + phi) - remainder_q(g, op, params, psi);
}

CorrectionResult fixed_point(const ConstrainedSolver& solver, const LinearOperator& op, const GridDomain& g,
                             const SystemParams& params, const Eigen::VectorXd& psi, const Eigen::VectorXd& e,
                             const FixedPointOptions& opts)
{
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(g.size());
    CorrectionResult cur;
    std::vector<double> steps;
    int rising = 0;
    for (int it = 1; it <= opts.max_iters; ++it) {
        cur = solver.solve(nonlinear_n(g, op, params, psi, phi) + e);
        double step = grid_norm(g, cur.field - phi, params.alpha);
        steps.push_back(step);
        phi = cur.field;
        cur.iterations = it;
        if (step <= opts.tol * cur.norm_star || step == 0.0) break;
        if (steps.size() >= 2 && step >= steps[steps.size() - 2]) {
            if (++rising >= 3) {
                std::ostringstream m;
                m << "successive differences stopped shrinking at iteration " << it << " (" << step << ")";
                throw Error(ErrorKind::NoContraction, m.str());
            }
        } else {
            rising = 0;
        }
    }
    cur.step_norms = steps;
    return cur;
}

double equation_residual(const LinearOperator& op, const GridDomain& g, const SystemParams& params,
                         const Eigen::VectorXd& psi, const Eigen::VectorXd& e, const CorrectionResult& phi)
{
    Eigen::VectorXd rhs = nonlinear_n(g, op, params, psi, phi.field) + e + phi.multiplier * op.z;
    Eigen::VectorXd r = op.matrix * phi.field - op.area.cwiseProduct(rhs);
    double en = op.area.cwiseProduct(e).norm();
    return en > 0.0 ? r.norm() / en : r.norm();
}

double reduced_correction(const LinearOperator& op, const GridDomain& g, const SystemParams& params,
                          const Eigen::VectorXd& psi, const CorrectionResult& y, const CorrectionResult& phi)
{
    Eigen::VectorXd extra = remainder_q(g, op, params, psi) - params.beta * y.multiplier * op.z +
                            nonlinear_n(g, op, params, psi, phi.field);
    double s = op.area.cwiseProduct(extra).dot(op.z) - (op.matrix * phi.field).dot(op.z);
    double factor = g.half ? 2.0 * g.config.k : double(g.config.k);
    return factor * s;
}

}  // namespace segregate
