#pragma once

#include <vector>

namespace segregate {

// Radial ground state of -Laplace(U) + U = U^p in R^n, tabulated on [0, r_max].
class GroundStateProfile {
public:
    GroundStateProfile(int n, double p, std::vector<double> radii, std::vector<double> values,
                       std::vector<double> derivatives);

    int dimension() const { return n_; }
    double exponent() const { return p_; }
    double r_max() const { return radii_.back(); }
    double center_value() const { return values_.front(); }
    double decay() const { return decay_; }

    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& derivatives() const { return derivatives_; }

    // U(r); cubic Hermite inside the table, exponential tail beyond r_max.
    double operator()(double r) const;
    double derivative(double r) const;

    // Second derivative from the equation itself.
    double second_derivative(double r) const;

    // Largest |-U'' - (n-1)/r U' + U - U^p| over interior nodes, U'' by finite differences.
    double max_ode_residual() const;

    // Integral of U^m over R^n.
    double power_integral(double m) const;

private:
    std::size_t locate(double r) const;

    int n_;
    double p_;
    std::vector<double> radii_;
    std::vector<double> values_;
    std::vector<double> derivatives_;
    std::vector<double> second_;
    double decay_ = 0.0;
    double seam_ = 0.0;
};

struct ShootingOptions {
    double r_max = 30.0;
    double tol = 1e-6;
    std::size_t points = 4000;
    int max_bisections = 200;
};

GroundStateProfile solve_ground_state(int n, double p, const ShootingOptions& opts = {});

// Median of r^{(n-1)/2} e^r U(r) over the last quarter of the table.
double decay_constant(const GroundStateProfile& profile);

struct EigenPair {
    double lambda = 0.0;
    int mode = 0;
    std::vector<double> radii;
    std::vector<double> phi;
};

struct EigenOptions {
    double step = 0.005;
    double radius = 25.0;
    int max_iterations = 500;
    double tol = 1e-12;
};

// Lowest eigenvalues of -phi'' - (n-1)/r phi' + (1 + c/r^2) phi = Lambda U^2 phi, cubic profiles only.
std::vector<EigenPair> eigenpairs(const GroundStateProfile& profile, int mode, int count,
                                  const EigenOptions& opts = {});

}  // namespace segregate
