#pragma once

#include "segregate/geometry.hpp"
#include "segregate/radial_profiles.hpp"

#include <string>

namespace segregate {

struct QuadratureOptions {
    double panel = 0.5;        // panel width before refinement
    int order = 10;            // Gauss-Legendre points per panel and direction
    double truncation = 37.0;  // integrand cut where U^min(s,t) has dropped by e^-truncation
    double rel_tol = 1e-9;     // agreement demanded between two rule orders
    int max_refinements = 3;
};

// Gamma_{s,t}(zeta) = integral of U^s(x + zeta) U^t(x) over R^n.
double gamma(double s, double t, const Vec3& zeta, const GroundStateProfile& profile,
             const QuadratureOptions& opts = {});

// Same with zeta = R e1.
double gamma_radial(double s, double t, double R, const GroundStateProfile& profile,
                    const QuadratureOptions& opts = {});

// d/dR of gamma_radial, from the differentiated integrand.
double gamma_radial_derivative(double s, double t, double R, const GroundStateProfile& profile,
                               const QuadratureOptions& opts = {});

// Gradient in zeta; parallel to zeta.
Vec3 gamma_gradient(double s, double t, const Vec3& zeta, const GroundStateProfile& profile,
                    const QuadratureOptions& opts = {});

// Power and log factor expected for Gamma_{s,t} at large |zeta|.
struct AsymptoticLaw {
    double rate = 0.0;
    double power = 0.0;
    bool log_flag = false;
};
AsymptoticLaw expected_law(double s, double t, int n);

struct InteractionFit {
    double s = 0.0, t = 0.0;
    int n = 3;
    double rate = 0.0;      // b
    double power = 0.0;     // a
    double constant = 0.0;  // c
    bool log_flag = false;
    double zeta_min = 0.0, zeta_max = 0.0;
    double max_rel_residual = 0.0;
    double rms_plain = 0.0, rms_log = 0.0;

    // c e^{-b z} z^a (ln z)^flag and its z-derivative.
    double value(double zeta) const;
    double derivative(double zeta) const;
};

struct FitOptions {
    double zeta_min = 10.0;
    double zeta_max = 18.0;
    int samples = 17;
    bool enforce_invariants = true;
    int workers = 0;  // 0: hardware concurrency
    QuadratureOptions quadrature{};
};

InteractionFit fit_asymptotics(double s, double t, const GroundStateProfile& profile,
                               const FitOptions& opts = {});

// Empty string when the fit matches the expected law within the documented tolerances.
std::string fit_violations(const InteractionFit& fit);

}  // namespace segregate
