#pragma once

#include "segregate/ansatz.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace segregate {

// Cell-centred polar grid on the sector, n = 2.  Half mode covers psi in [0, pi/k] with
// reflecting edges; full mode covers [-pi/k, pi/k] with periodic edges.
struct GridDomain {
    PeakConfiguration config;
    bool half = true;
    double r_in = 0.0, r_out = 0.0;
    double h = 0.0;       // radial spacing
    double dpsi = 0.0;    // angular spacing
    int nr = 0, ntheta = 0;
    double psi0 = 0.0;    // left edge of the angular range

    std::size_t size() const { return std::size_t(nr) * ntheta; }
    std::size_t index(int i, int j) const { return std::size_t(i) * ntheta + j; }
    double radius(int i) const { return r_in + (i + 0.5) * h; }
    double angle(int j) const { return psi0 + (j + 0.5) * dpsi; }
    Vec3 point(std::size_t c) const;
    double area(std::size_t c) const;
    // Cell holding Theta x for Theta the rotation by `cells` angular cells, folded back into the grid.
    std::size_t rotated(std::size_t c, int cells) const;
    // Angular cell shift realising Theta_i, i = 2..d.
    int component_shift(int i) const;
};

struct GridOptions {
    double margin = 24.0;           // annulus [rho - margin, rho + margin], clipped at 0
    double nodes_per_unit = 12.0;   // radial and (at rho + 6) angular resolution
    bool half = true;
};

GridDomain build_grid(const PeakConfiguration& config, const GridOptions& opts = {});

enum class OperatorVariant { Full, LocalOnly };

// Cell-integrated -Lap + V - 3 W^2 - beta sum W^2(Theta_i x) [- 2 beta W sum W(Theta_i x) Phi(Theta_i x)].
struct LinearOperator {
    Eigen::SparseMatrix<double> matrix;  // acts on cell values, returns cell integrals
    Eigen::VectorXd area;
    Eigen::VectorXd w, z;                // W_rho and d_rho W_rho at the cells
    double self_test_error = 0.0;        // relative defect of -Lap W = sum U_h^3 - W near xi_1
};

struct AssembleOptions {
    double self_test_tol = 0.02;
    int workers = 0;
};

// Throws GridTooCoarse when the self test fails; n = 2 and the cubic system only.
LinearOperator assemble_linear(const GridDomain& grid, const SystemParams& params,
                               const GroundStateProfile& profile,
                               OperatorVariant variant = OperatorVariant::Full,
                               const AssembleOptions& opts = {});

struct CorrectionResult {
    Eigen::VectorXd field;
    double multiplier = 0.0;
    double norm_star = 0.0;
    double orthogonality = 0.0;       // |<Phi, Z>| / (|Phi| |Z|), area-weighted
    double linear_residual = 0.0;     // relative residual of the saddle system
    int iterations = 0;
    std::vector<double> step_norms;   // weighted norms of successive differences
};

struct SolveOptions {
    // beta is compared against the resonance set when a profile is supplied
    const GroundStateProfile* resonance_profile = nullptr;
    double beta = 0.0;
    double resonance_radius = 1e-2;
    double residual_tol = 1e-8;
};

// Factorises the bordered system [L, -Z; Z^T, 0] once; solves L Phi = h + c Z with <Phi, Z> = 0.
class ConstrainedSolver {
public:
    ConstrainedSolver(const LinearOperator& op, const GridDomain& grid, double alpha, const SolveOptions& opts = {});
    ~ConstrainedSolver();
    ConstrainedSolver(const ConstrainedSolver&) = delete;
    ConstrainedSolver& operator=(const ConstrainedSolver&) = delete;

    // h holds cell values of the right-hand side.
    CorrectionResult solve(const Eigen::VectorXd& h) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CorrectionResult solve_constrained(const LinearOperator& op, const Eigen::VectorXd& h, const GridDomain& grid,
                                   double alpha, const SolveOptions& opts = {});

// Throws NearResonance when beta lies within `radius` of an eigenvalue of modes 0..2.
void check_resonance(double beta, const GroundStateProfile& profile, double radius = 1e-2);

// Cell values of the fields on the grid.
Eigen::VectorXd sample(const GridDomain& grid, const std::function<double(const Vec3&)>& f);
// sum_{i>=2} f(Theta_i x) for a cell field f.
Eigen::VectorXd rotated_sum(const GridDomain& grid, const Eigen::VectorXd& f, int power);
// Area-weighted sup of |f| / weight over the cells.
double grid_norm(const GridDomain& grid, const Eigen::VectorXd& f, double alpha);

// L Y = W sum W^2(Theta_i x) - gamma Z, orthogonal to Z.
CorrectionResult compute_Y(const ConstrainedSolver& solver, const LinearOperator& op, const GridDomain& grid,
                           double gamma);

// Quadratic and cubic remainder Q(phi) of the cubic nonlinearity around W.
Eigen::VectorXd remainder_q(const GridDomain& grid, const LinearOperator& op, const SystemParams& params,
                            const Eigen::VectorXd& phi);

// E = (1 - V) W + W^3 - sum U_h^3 + beta (gamma - c_Y) Z + Q(Psi), Psi = beta Y.
Eigen::VectorXd error_field(const GridDomain& grid, const LinearOperator& op, const SystemParams& params,
                            const GroundStateProfile& profile, double gamma, const CorrectionResult& y);

struct FixedPointOptions {
    int max_iters = 50;
    double tol = 1e-8;  // on the weighted norm of successive differences, relative to |Phi|_*
};

// Phi_{m+1} solves L Phi = N(Phi_m) + E + c Z with N(Phi) = Q(Psi + Phi) - Q(Psi).
// Throws NoContraction after three consecutive non-decreasing differences.
CorrectionResult fixed_point(const ConstrainedSolver& solver, const LinearOperator& op, const GridDomain& grid,
                             const SystemParams& params, const Eigen::VectorXd& psi, const Eigen::VectorXd& e,
                             const FixedPointOptions& opts = {});

// N(Phi) = Q(Psi + Phi) - Q(Psi).
Eigen::VectorXd nonlinear_n(const GridDomain& grid, const LinearOperator& op, const SystemParams& params,
                            const Eigen::VectorXd& psi, const Eigen::VectorXd& phi);

// |L Phi - N(Phi) - E - c Z| / |E| with area-weighted cell integrals.
double equation_residual(const LinearOperator& op, const GridDomain& grid, const SystemParams& params,
                         const Eigen::VectorXd& psi, const Eigen::VectorXd& e, const CorrectionResult& phi);

// Lines of int (E + N(Phi) - L(Phi)) d_rho W not covered by I1 + I2 + I3, over R^2.
double reduced_correction(const LinearOperator& op, const GridDomain& grid, const SystemParams& params,
                          const Eigen::VectorXd& psi, const CorrectionResult& y, const CorrectionResult& phi);

}  // namespace segregate
