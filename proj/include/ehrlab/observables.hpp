#pragma once

// Particle-level reductions of field data: charge, centroid, velocity field,
// energy/momentum and the first charge moment. All moments on the torus use
// minimum-image offsets.

#include <cstdint>
#include <vector>

#include "ehrlab/matter.hpp"

namespace ehrlab {

struct TrajectoryRecord {
    double t = 0.0;
    Vec3 xi;   // charge centroid
    Vec3 v;    // current velocity interpolated at xi
    Vec3 P;    // integrated T^{0i}
    double En = 0.0;  // integrated T^{00}
    double Q = 0.0;
    Vec3 d;    // first charge moment about the expansion point
    double neg_freq_fraction = 0.0;
};

/// Offset wrapped into [-L/2, L/2).
double minimum_image(double dx, double L);

double total_charge(const FourCurrent& cur);

/// Normalised first moment of rho. Circular mean per axis, refined with
/// minimum-image offsets. Throws NumericalError when |Q| <= 1e-6 |charge_unit|.
Vec3 centroid(const FourCurrent& cur, double charge_unit);

/// Lattice maximum of rho/sign(Q), refined per axis by a three-point parabola.
Vec3 density_peak(const FourCurrent& cur);

struct VelocityField {
    std::array<RealField, 3> v;
    std::vector<std::uint8_t> valid;  // 1 where |rho| >= mask_floor * max|rho|
};

VelocityField velocity_field(const FourCurrent& cur, double mask_floor = 1e-6);

/// Multilinear interpolation of v at x over the active axes. Throws
/// NumericalError if any contributing cell is masked.
Vec3 velocity_at(const VelocityField& vf, const Vec3& x);

struct EnergyMomentum {
    double En = 0.0;
    Vec3 P;
};

EnergyMomentum energy_momentum(const StressEnergySlice& se);

/// d = integral of (r - xi) rho dV with minimum-image offsets (charge-weighted,
/// so d(xi + delta) = d(xi) - delta Q).
Vec3 dipole_moment(const FourCurrent& cur, const Vec3& xi);

}  // namespace ehrlab
