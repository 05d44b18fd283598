#pragma once

// Relativistic matter fields under minimal coupling D_mu = d_mu + i e A_mu:
// Klein-Gordon and Dirac time evolution, free Proca plane-wave snapshots,
// four-currents and energy-momentum densities.
//
// Metric signature (+,-,-,-). Dirac representation: beta = diag(1,1,-1,-1),
// alpha_i = offdiag(sigma_i, sigma_i). In 1D the Dirac field is a 2-spinor
// with gamma^0 = sigma_3, gamma^1 = i sigma_2, i.e. alpha = sigma_1,
// beta = sigma_3.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ehrlab/em_fields.hpp"
#include "ehrlab/grid.hpp"

namespace ehrlab {

enum class Model { KG, Dirac, Proca };

std::string to_string(Model m);
Model model_from_string(const std::string& s);

/// Discretised wave function.
///
/// Component order:
///   KG     phi, pi = D_t phi
///   Dirac  psi_0..psi_3 (psi_0, psi_1 in 1D)
///   Proca  phi^0..phi^3, then phi^{01}, phi^{02}, phi^{03}, phi^{12}, phi^{13}, phi^{23}
struct MatterState {
    Model model = Model::Dirac;
    double mass = 1.0;
    double charge = 1.0;  // e, sign included
    double t = 0.0;
    std::vector<ComplexField> components;

    const GridPtr& grid() const { return components.front().grid(); }

    static int component_count(Model model, int dims);

    /// Throws InvalidArgument on wrong component count, mismatched grids,
    /// non-positive mass, zero charge or non-finite values.
    void validate() const;
};

struct PacketParams {
    Vec3 center;
    Vec3 width{1.0, 1.0, 1.0};  // standard deviation of the unskewed density per axis
    Vec3 momentum;
    double skew = 0.0;          // skew-normal shape parameter along x; 0 = symmetric
};

/// Gaussian packet normalised to total charge e.
///
/// Dirac: spin-up spinor projected onto the free positive-energy subspace.
/// KG: pi chosen so that the free packet is purely positive-frequency.
/// Throws for Proca and for widths exceeding extent/8 on an active axis.
MatterState init_gaussian(Model model, const GridPtr& grid, double mass, double charge, const PacketParams& packet);

enum class DiracPropagator {
    Split,      // Strang splitting: half local phase, exact free step, half local phase
    Chebyshev,  // Chebyshev expansion of exp(-i H dt); static fields only
};

std::string to_string(DiracPropagator p);

struct StepperOptions {
    DiracPropagator dirac = DiracPropagator::Split;
    double growth_limit = 10.0;  // abort when the L2 norm grows by more than this per step
};

/// Largest time step admitted by dt < 0.5 / (|k|max + |e||A|max + m).
double max_stable_dt(const Grid& grid, const EMFieldConfig& field, double mass, double charge);

/// Advances KG and Dirac states. Caches the sampled potentials of static fields.
class Evolver {
public:
    Evolver(EMFieldConfig field, GridPtr grid, StepperOptions options = {});

    MatterState step(const MatterState& state, double dt) const;

    const EMFieldConfig& field() const { return field_; }
    std::shared_ptr<const SampledPotentials> potentials(double t) const;

private:
    MatterState step_kg(const MatterState& s, double dt) const;
    MatterState step_dirac_split(const MatterState& s, double dt) const;
    MatterState step_dirac_chebyshev(const MatterState& s, double dt) const;

    EMFieldConfig field_;
    GridPtr grid_;
    StepperOptions options_;
    std::shared_ptr<const SampledPotentials> static_pots_;
};

/// Classical 4th-order Runge-Kutta step of (phi, pi) with spectral derivatives.
MatterState step_kg(const MatterState& state, const EMFieldConfig& field, double dt);
/// Strang-split step with the exact free Dirac propagator in wavenumber space.
MatterState step_dirac(const MatterState& state, const EMFieldConfig& field, double dt,
                       DiracPropagator propagator = DiracPropagator::Split);

struct FourVector {
    double t = 0.0;
    Vec3 s;
};

/// Free Proca plane wave phi^mu = eps^mu exp(i(k.x - w t)), w^2 = k^2 + m^2,
/// with phi^{mu nu} = d^mu phi^nu - d^nu phi^mu evaluated in closed form.
/// Requires k on the wavenumber lattice and k_mu eps^mu = 0.
MatterState proca_plane_wave(const GridPtr& grid, double mass, double charge, const Vec3& k,
                             const FourVector& polarization, double t = 0.0);

struct FourCurrent {
    RealField rho;               // includes the factor e
    std::array<RealField, 3> j;  // e rho v
};

FourCurrent four_current(const MatterState& state, const SampledPotentials& pots);
FourCurrent four_current(const MatterState& state, const EMFieldConfig& field);

/// How the Dirac energy-momentum tensor treats the potential.
enum class DiracTensorForm {
    Covariant,  // gauge-covariant D^nu in the tensor and Lagrangian
    Printed,    // plain d^nu; gauge dependent
};

struct StressEnergySlice {
    RealField T00;
    std::array<RealField, 3> T0i;
};

StressEnergySlice stress_energy(const MatterState& state, const SampledPotentials& pots,
                                DiracTensorForm form = DiracTensorForm::Covariant);
StressEnergySlice stress_energy(const MatterState& state, const EMFieldConfig& field,
                                DiracTensorForm form = DiracTensorForm::Covariant);

/// Charge-weighted fraction of negative-frequency content, using the free
/// dispersion in wavenumber space. KG treats pi as d_t phi.
double negative_frequency_fraction(const MatterState& state);

/// psi -> exp(-i e chi) psi (KG: both phi and pi). Pair with gauge_shift.
MatterState gauge_transform(const MatterState& state, const RealField& chi);
/// A^i -> A^i - d_i chi for a static gauge function chi.
SampledPotentials gauge_shift(const SampledPotentials& pots, const RealField& chi);

/// ||(rho_after - rho_before)/(2 dt) + div j_mid||_2 / ||rho_mid||_2.
double continuity_residual(const RealField& rho_before, const RealField& rho_after, const FourCurrent& mid, double dt);

struct ProcaResiduals {
    double current = 0.0;  // max |d_mu j^mu|
    double energy = 0.0;   // max |d_t T^00 + d_i T^{i0}|
};

/// Local conservation residuals of a free Proca plane-wave snapshot, with
/// time derivatives taken in closed form (d_t -> -i w on every component).
ProcaResiduals proca_conservation_residuals(const GridPtr& grid, double mass, double charge, const Vec3& k,
                                            const FourVector& polarization);

/// Integrated sum of |component|^2 over the lattice.
double l2_norm_squared(const MatterState& state);

}  // namespace ehrlab
