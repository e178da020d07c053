#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace segregate {

using Vec3 = Eigen::Vector3d;

// Rotation by theta in the (x1, x2) plane with top row (cos, sin); identity on x3.
Eigen::Matrix3d rotation(double theta);

// Rotation parameter psi of a point, i.e. x = |x| * rotation(psi) * e1 in the plane.
double rotation_angle(const Vec3& x);

struct PeakConfiguration {
    int n = 3;
    int d = 2;
    int k = 2;
    double rho = 1.0;
    std::vector<Vec3> xi;                // unit peaks of the first component
    std::vector<std::vector<Vec3>> eta;  // eta[i-1][l-1], unit peaks of component i
    std::vector<int> sector_indices;     // the index set I, ascending

    // Rotated peak direction inside subsector i (unit length); eta_tilde(0) = xi_1.
    Vec3 eta_tilde(int i) const;
    // Angular half-width of the sector (pi/k) and of a subsector (pi/(dk)).
    double sector_half_width() const;
    double subsector_half_width() const;
};

PeakConfiguration build_peaks(int d, int k, double rho, int n = 3);

// Index i in I of the subsector containing x, or nullopt when x lies outside the sector.
std::optional<int> sector_of(const Vec3& x, const PeakConfiguration& config);

// Rotates x by a multiple of 2*pi/k so that its rotation parameter lies in [-pi/k, pi/k].
Vec3 fold_into_sector(const Vec3& x, int k);

// The map x -> Theta_{2 pi (i-1)/(dk)} x used by the coupling terms.
Eigen::Matrix3d component_rotation(int i, int d, int k);

}  // namespace segregate
