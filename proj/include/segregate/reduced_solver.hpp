#pragma once

#include "segregate/ansatz.hpp"
#include "segregate/interactions.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace segregate {

enum class ReducedMode { Leading, Quadrature };
std::string to_string(ReducedMode m);

enum class AdmissibilityMode { CubicMain, GeneralI, GeneralII, Unsupported };
std::string to_string(AdmissibilityMode m);

struct HypothesisCheck {
    std::string name;
    bool passed = false;
};

struct AdmissibilityReport {
    AdmissibilityMode mode = AdmissibilityMode::Unsupported;
    bool admissible = false;
    std::vector<HypothesisCheck> checks;
    double beta_k = 0.0;           // cubic mode only, 0 when the b-interval is empty
    double b = 0.0;
    double predicted_ratio = 0.0;  // balance ratio r* = rho / (k ln k)
    bool ratio_is_derived = false; // true for the general modes
};

AdmissibilityReport check_admissibility(const SystemParams& params);

struct BetaThreshold {
    double b = 0.0;
    double beta_k = 0.0;
    // beta_k^2 k e^{-(1-alpha) 4 pi rho/(dk)} and (k/rho) e^{-2 pi rho/k}, each divided by
    // beta_k (k/rho)^2 e^{-4 pi rho/(dk)} ln ln k, at rho = (d nu / 4 pi) k ln k.
    double bound_ratio = 0.0;
    double same_ratio = 0.0;
};

// beta_k = k^{-b} with b the midpoint of (1, nu (d-2)/2); throws EmptyInterval.
BetaThreshold beta_threshold(const SystemParams& params);

struct QuadOptions {
    double panel = 2.0;       // panel width in R, arc length and x3
    int order = 8;            // Gauss-Legendre points per direction; order-2 is the check rule
    double reach = 20.0;      // integrate over | |x| - rho | <= reach and |x3| <= reach
    double rel_tol = 1e-3;
    int max_refinements = 2;  // panel halvings before giving up
    int workers = 0;
};

struct GammaRho {
    double numerator = 0.0;    // int W sum_i W^2(Theta_i x) d_rho W
    double denominator = 0.0;  // int (d_rho W)^2
    double value = 0.0;
};

// Pairwise mode: numerator = k sum over other-component peaks of -1/2 <grad Gamma_22(rho(eta - xi_1)), xi_1>.
// With full_quadrature the numerator is integrated directly over the sector.
GammaRho gamma_rho(const PeakConfiguration& config, const SystemParams& params,
                   const GroundStateProfile& profile, bool full_quadrature = false,
                   const QuadratureOptions& pair_opts = {}, const QuadOptions& sector_opts = {});

// Constants for the leading-order reduced function.
struct LeadingConstants {
    double mass = 0.0;        // integral of U^2
    InteractionFit same;      // Gamma_{p,1}
    InteractionFit cross;     // Gamma_{q+1,r}
    AsymptoticLaw same_law;   // exponents used for the same-component term
    AsymptoticLaw cross_law;  // exponents used for the cross-component term
    double same_c = 0.0;      // fit constants re-anchored to the exact exponents
    double cross_c = 0.0;
};

LeadingConstants leading_constants(const SystemParams& params, const GroundStateProfile& profile,
                                   const FitOptions& fit = {});

struct ReducedSample {
    double rho = 0.0;
    double ratio = 0.0;  // rho / (k ln k)
    ReducedMode mode = ReducedMode::Leading;
    double t1 = 0.0;     // potential term
    double t2 = 0.0;     // same-component term
    double t3 = 0.0;     // cross-component term
    double t4_bound = 0.0;
    bool t4_included = false;
    double correction = 0.0;  // Phi-dependent lines, when supplied
    double total = 0.0;
    double A = 0.0, B = 0.0, C = 0.0;
    double xi_bound = 0.0;  // general modes: remainder envelope
    double sigma = 0.0, tau = 0.0;
};

struct LeadingOptions {
    bool include_bound = false;  // add beta^2 k e^{-(1-alpha) 4 pi rho/(dk)} to the total
};

ReducedSample reduced_leading(const SystemParams& params, double rho, const LeadingConstants& constants,
                              const LeadingOptions& opts = {});

// I1 + I2 + I3 integrated over one sector and multiplied by the symmetry factor.
ReducedSample reduced_quadrature(const PeakConfiguration& config, const SystemParams& params,
                                 const GroundStateProfile& profile, const QuadOptions& opts = {},
                                 std::optional<double> correction = std::nullopt);

struct RadiusReport {
    double r_star = 0.0;
    double rho_star = 0.0;
    double r_lo = 0.0, r_hi = 0.0;
    double c_lo = 0.0, c_hi = 0.0;
    std::string sign_pattern;
    int iterations = 0;
    double predicted_ratio = 0.0;
    ReducedSample at_root;
};

struct RootOptions {
    double rel_tol = 1e-6;
    int max_iterations = 200;
};

// Bracket [r1, r2] from params, or [r*/2, 2 r*] around the predicted ratio when unset.
std::pair<double, double> radius_bracket(const SystemParams& params);

// Bisection in r of C_k(r k ln k); throws NoSignChange with both end values in the message.
RadiusReport find_radius(const SystemParams& params, const std::function<ReducedSample(double rho)>& eval,
                         const RootOptions& opts = {});
RadiusReport find_radius_leading(const SystemParams& params, const LeadingConstants& constants,
                                 const LeadingOptions& lopts = {}, const RootOptions& opts = {});

}  // namespace segregate
