#pragma once

#include "segregate/geometry.hpp"
#include "segregate/radial_profiles.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace segregate {

// Parameters of -Lap u + V u = |u|^{p-1} u + beta |u|^{q-1} u sum_{i>=2} |u|^{r-1} u (Theta_i x).
// The cubic system is p = 3, q = 1, r = 2.
struct SystemParams {
    int n = 3;
    int d = 3;
    double p = 3.0;
    double q = 1.0;
    double r = 2.0;
    double v_inf = 0.0;
    double nu = 3.0;
    double beta = 0.0;
    int k = 2;
    double alpha = 0.5;
    // D_k = [r1, r2] * k ln k; zero means "derive from the predicted balance ratio".
    double r1 = 0.0;
    double r2 = 0.0;
    // Optional remainder c / |x|^{nu + eps} in the potential.
    double remainder_coeff = 0.0;
    double remainder_eps = 1.0;

    bool cubic() const { return p == 3.0 && q == 1.0 && r == 2.0; }
    double log_k() const;
    double rho_of(double ratio) const { return ratio * log_k(); }
};

// Throws InvalidArgument naming the first offending field.
void validate(const SystemParams& params);
// Extra hypotheses of the cubic existence result: d >= 3 and nu > 2/(d-2).
void validate_cubic_hypotheses(const SystemParams& params);

PeakConfiguration peaks_for(const SystemParams& params, double rho);

// V(x) = 1 + v_inf / max(|x|, 1)^nu (+ remainder).
double potential(const Vec3& x, const SystemParams& params);

// W_rho(x) = sum_h U(|x - rho xi_h|).
double w_rho(const Vec3& x, const PeakConfiguration& config, const GroundStateProfile& profile);
// d/drho W_rho(x).
double drho_w(const Vec3& x, const PeakConfiguration& config, const GroundStateProfile& profile);
// sum_h U(|x - rho xi_h|)^m.
double bubble_power_sum(const Vec3& x, double m, const PeakConfiguration& config,
                        const GroundStateProfile& profile);
// sum_{i=2..d} W_rho(Theta_i x)^m.
double coupling_sum(const Vec3& x, double m, const PeakConfiguration& config,
                    const GroundStateProfile& profile);
// sum over all d k peaks of exp(-alpha |x - rho eta_ij|).
double weight(const Vec3& x, const PeakConfiguration& config, double alpha);

struct FieldSampler {
    std::function<double(const Vec3&)> eval;
    PeakConfiguration config;
    bool even = true;        // invariant under x2 -> -x2
    bool rotational = true;  // invariant under rotation by 2 pi / k

    double operator()(const Vec3& x) const { return eval(x); }
};

FieldSampler w_field(const PeakConfiguration& config, const GroundStateProfile& profile);
FieldSampler drho_w_field(const PeakConfiguration& config, const GroundStateProfile& profile);
FieldSampler weight_field(const PeakConfiguration& config, double alpha);

// Largest |field(x) - field(g x)| over random points and the declared symmetries g.
double symmetry_defect(const FieldSampler& field, int points, unsigned seed);

struct NormOptions {
    double spacing = 0.5;     // initial sample spacing
    int max_refinements = 3;  // halvings of the spacing
    double rel_change = 0.02; // stop when successive estimates agree this well
    double band = 40.0;       // dense sampling for | |x| - rho | < band
    double ring_radius = 6.0; // sample rings around each peak of the sector up to this radius
    int workers = 0;
};

struct NormResult {
    double value = 0.0;
    double spacing = 0.0;
    std::size_t samples = 0;
    int refinements = 0;
    Vec3 argmax = Vec3::Zero();
};

// Sampled sup of |field| / weight; all fields share one sample set per refinement level.
std::vector<NormResult> weighted_norms(const std::vector<FieldSampler>& fields, double alpha,
                                       const NormOptions& opts = {});
NormResult weighted_norm(const FieldSampler& field, double alpha, const NormOptions& opts = {});

struct ErrorComponents {
    double e1 = 0.0;         // (1 - V) W
    double e2 = 0.0;         // W^p - sum U_h^p
    double e3 = 0.0;         // beta W^q sum W^r(Theta_i x)
    double gamma_rho = 0.0;  // as supplied
    double total = 0.0;      // E1 + E2 + beta gamma_rho d_rho W (cubic, gamma supplied) or E1 + E2 + E3
};

FieldSampler e1_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile);
FieldSampler e2_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile);
FieldSampler e3_field(const PeakConfiguration& config, const SystemParams& params,
                      const GroundStateProfile& profile);

ErrorComponents error_components(const PeakConfiguration& config, const SystemParams& params,
                                 const GroundStateProfile& profile,
                                 std::optional<double> gamma_rho = std::nullopt,
                                 const NormOptions& opts = {});

}  // namespace segregate
