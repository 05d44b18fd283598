#pragma once

// Prescribed external electromagnetic fields in closed form, their grid
// samples, and the Maxwell-side energy/momentum bookkeeping.
//
// Vacuum throughout: D = E and H = B. Units are natural (hbar = c = 1).

#include <array>
#include <string>

#include "ehrlab/grid.hpp"
#include "ehrlab/vec3.hpp"

namespace ehrlab {

enum class FieldKind { Zero, UniformE, UniformB, LinearGradientE, PlaneWave };

std::string to_string(FieldKind kind);

/// Closed-form field family. Construct through the factories, which validate.
///
/// Gauge per kind (A^mu contravariant, A^0 the scalar potential):
///   UniformE         A^0 = -E0.x,                A = 0
///   UniformB         A^0 = 0,                    A = B0 x r / 2
///   LinearGradientE  A^0 = -E0.x - x.G.x / 2,    A = 0
///   PlaneWave        A^0 = 0,                    A = (a/w) pol sin(k.x - w t), w = |k|
struct EMFieldConfig {
    FieldKind kind = FieldKind::Zero;
    Vec3 E0;
    Vec3 B0;
    Mat3 G;
    double amplitude = 0.0;
    Vec3 k;
    Vec3 pol;

    static EMFieldConfig zero();
    static EMFieldConfig uniform_e(const Vec3& E0);
    static EMFieldConfig uniform_b(const Vec3& B0);
    /// G must be symmetric and trace-free so the static field is curl- and divergence-free.
    static EMFieldConfig linear_gradient_e(const Vec3& E0, const Mat3& G);
    /// pol must be a unit vector orthogonal to k; k must be nonzero.
    static EMFieldConfig plane_wave(double amplitude, const Vec3& k, const Vec3& pol);

    bool is_static() const { return kind != FieldKind::PlaneWave; }
    double omega() const { return norm(k); }
};

struct FourPotential {
    double a0 = 0.0;  // A^0
    Vec3 a;           // A^i
};

struct EBValues {
    Vec3 E;
    Vec3 B;
};

/// Spatial derivatives of the fields: dE[i][j] = d_i E_j, dB[i][j] = d_i B_j.
struct FieldGradients {
    Mat3 dE;
    Mat3 dB;
};

FourPotential eval_potential(const EMFieldConfig& field, const Vec3& x, double t);
EBValues eval_EB(const EMFieldConfig& field, const Vec3& x, double t);
FieldGradients eval_gradients(const EMFieldConfig& field, const Vec3& x, double t);

/// Throws InvalidArgument unless a PlaneWave wavevector lies on the grid's
/// wavenumber lattice (components along absent axes must vanish).
void check_commensurate(const EMFieldConfig& field, const Grid& grid);

/// Throws InvalidArgument (prefixed with `what`) unless k is on the lattice
/// and strictly inside the resolvable band.
void check_wavevector_on_lattice(const Vec3& k, const Grid& grid, const std::string& what);

/// Potentials sampled on the lattice at one instant.
struct SampledPotentials {
    RealField a0;
    std::array<RealField, 3> a;
    bool has_scalar = false;
    bool has_vector = false;
};

SampledPotentials sample_potentials(const EMFieldConfig& field, const GridPtr& grid, double t);

struct SampledEB {
    std::array<RealField, 3> E;
    std::array<RealField, 3> B;
};

SampledEB sample_EB(const EMFieldConfig& field, const GridPtr& grid, double t);

/// Largest |A| (vector part) and |A^0| over the lattice at time t.
struct PotentialBounds {
    double vector_max = 0.0;
    double scalar_min = 0.0;
    double scalar_max = 0.0;
};

PotentialBounds potential_bounds(const EMFieldConfig& field, const Grid& grid, double t);

struct FieldStressEnergy {
    RealField energy_density;                  // T^{00}_F
    std::array<RealField, 3> momentum_density; // T^{0i}_F = (D x B)^i
    std::array<RealField, 6> stress;           // T^{ij}_F: xx, xy, xz, yy, yz, zz

    const RealField& stress_component(int i, int j) const;
};

FieldStressEnergy field_stress_energy(const std::array<RealField, 3>& E, const std::array<RealField, 3>& B);

struct PoyntingResidual {
    double energy = 0.0;
    Vec3 momentum;
};

/// d/dt of the integrated field energy and momentum (central difference with
/// step dt) plus the integrated flux divergence, which vanishes on the torus.
/// Applies to fields that are source-free on the periodic box; throws for
/// LinearGradientE, whose sampled field is not periodic.
PoyntingResidual poynting_residual(const EMFieldConfig& field, const GridPtr& grid, double t, double dt);

}  // namespace ehrlab
