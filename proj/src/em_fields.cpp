#include "ehrlab/em_fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehrlab/errors.hpp"

namespace ehrlab {

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Zero: return "zero";
        case FieldKind::UniformE: return "uniform_e";
        case FieldKind::UniformB: return "uniform_b";
        case FieldKind::LinearGradientE: return "linear_gradient_e";
        case FieldKind::PlaneWave: return "plane_wave";
    }
    return "?";
}

namespace {

bool finite(const Vec3& v) { return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]); }

}  // namespace

EMFieldConfig EMFieldConfig::zero() { return {}; }

EMFieldConfig EMFieldConfig::uniform_e(const Vec3& E0) {
    if (!finite(E0)) throw InvalidArgument("uniform_e: E0 must be finite");
    EMFieldConfig f;
    f.kind = FieldKind::UniformE;
    f.E0 = E0;
    return f;
}

EMFieldConfig EMFieldConfig::uniform_b(const Vec3& B0) {
    if (!finite(B0)) throw InvalidArgument("uniform_b: B0 must be finite");
    EMFieldConfig f;
    f.kind = FieldKind::UniformB;
    f.B0 = B0;
    return f;
}

EMFieldConfig EMFieldConfig::linear_gradient_e(const Vec3& E0, const Mat3& G) {
    if (!finite(E0)) throw InvalidArgument("linear_gradient_e: E0 must be finite");
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (!std::isfinite(G[i][j])) throw InvalidArgument("linear_gradient_e: G must be finite");
            scale = std::max(scale, std::abs(G[i][j]));
        }
    const double tol = 1e-12 * std::max(scale, 1e-300);
    if (std::abs(G.trace()) > tol) throw InvalidArgument("linear_gradient_e: G must be trace-free (divergence-free field)");
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (std::abs(G[i][j] - G[j][i]) > tol)
                throw InvalidArgument("linear_gradient_e: G must be symmetric (curl-free field)");
    EMFieldConfig f;
    f.kind = FieldKind::LinearGradientE;
    f.E0 = E0;
    f.G = G;
    return f;
}

EMFieldConfig EMFieldConfig::plane_wave(double amplitude, const Vec3& k, const Vec3& pol) {
    if (!std::isfinite(amplitude) || !finite(k) || !finite(pol))
        throw InvalidArgument("plane_wave: parameters must be finite");
    const double kn = norm(k);
    if (!(kn > 0.0)) throw InvalidArgument("plane_wave: wavevector must be nonzero");
    if (std::abs(norm(pol) - 1.0) > 1e-12) throw InvalidArgument("plane_wave: polarization must be a unit vector");
    if (std::abs(dot(pol, k)) > 1e-12 * kn) throw InvalidArgument("plane_wave: polarization must be orthogonal to k");
    EMFieldConfig f;
    f.kind = FieldKind::PlaneWave;
    f.amplitude = amplitude;
    f.k = k;
    f.pol = pol;
    return f;
}

FourPotential eval_potential(const EMFieldConfig& f, const Vec3& x, double t) {
    FourPotential A;
    switch (f.kind) {
        case FieldKind::Zero: break;
        case FieldKind::UniformE: A.a0 = -dot(f.E0, x); break;
        case FieldKind::UniformB: A.a = 0.5 * cross(f.B0, x); break;
        case FieldKind::LinearGradientE: A.a0 = -dot(f.E0, x) - 0.5 * dot(x, f.G * x); break;
        case FieldKind::PlaneWave: {
            const double w = f.omega();
            A.a = (f.amplitude / w) * std::sin(dot(f.k, x) - w * t) * f.pol;
            break;
        }
    }
    return A;
}

EBValues eval_EB(const EMFieldConfig& f, const Vec3& x, double t) {
    EBValues r;
    switch (f.kind) {
        case FieldKind::Zero: break;
        case FieldKind::UniformE: r.E = f.E0; break;
        case FieldKind::UniformB: r.B = f.B0; break;
        case FieldKind::LinearGradientE: r.E = f.E0 + f.G * x; break;
        case FieldKind::PlaneWave: {
            const double w = f.omega();
            const double c = f.amplitude * std::cos(dot(f.k, x) - w * t);
            r.E = c * f.pol;
            r.B = c * cross(f.k / w, f.pol);
            break;
        }
    }
    return r;
}

FieldGradients eval_gradients(const EMFieldConfig& f, const Vec3& x, double t) {
    FieldGradients g;
    switch (f.kind) {
        case FieldKind::Zero:
        case FieldKind::UniformE:
        case FieldKind::UniformB: break;
        case FieldKind::LinearGradientE:
            // d_i E_j = G_ji; G is symmetric.
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) g.dE[i][j] = f.G[j][i];
            break;
        case FieldKind::PlaneWave: {
            const double w = f.omega();
            const double s = -f.amplitude * std::sin(dot(f.k, x) - w * t);
            const Vec3 bdir = cross(f.k / w, f.pol);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    g.dE[i][j] = s * f.k[i] * f.pol[j];
                    g.dB[i][j] = s * f.k[i] * bdir[j];
                }
            break;
        }
    }
    return g;
}

void check_wavevector_on_lattice(const Vec3& k, const Grid& grid, const std::string& what) {
    for (int a = 0; a < 3; ++a) {
        if (a >= grid.dims()) {
            if (k[a] != 0.0) {
                std::ostringstream os;
                os << what << ": wavevector component " << k[a] << " along absent axis " << a
                   << " is not on the grid lattice";
                throw InvalidArgument(os.str());
            }
            continue;
        }
        const double dk = 2.0 * M_PI / grid.extent(a);
        const double n = k[a] / dk;
        const double nearest = std::round(n);
        if (std::abs(n - nearest) > 1e-12 * std::max(1.0, std::abs(nearest))) {
            std::ostringstream os;
            os.precision(17);
            os << what << ": wavevector component " << k[a] << " on axis " << a
               << " is not on the grid lattice (spacing " << dk << ")";
            throw InvalidArgument(os.str());
        }
        if (std::abs(nearest) >= grid.points(a) / 2)
            throw InvalidArgument(what + ": wavevector exceeds the grid's resolvable band");
    }
}

void check_commensurate(const EMFieldConfig& f, const Grid& grid) {
    if (f.kind == FieldKind::PlaneWave) check_wavevector_on_lattice(f.k, grid, "plane_wave");
}

SampledPotentials sample_potentials(const EMFieldConfig& f, const GridPtr& grid, double t) {
    SampledPotentials s;
    s.a0 = RealField(grid);
    for (auto& c : s.a) c = RealField(grid);
    s.has_scalar = f.kind == FieldKind::UniformE || f.kind == FieldKind::LinearGradientE;
    s.has_vector = f.kind == FieldKind::UniformB || f.kind == FieldKind::PlaneWave;
    if (!s.has_scalar && !s.has_vector) return s;
    grid->for_each_site([&](std::size_t i, double x, double y, double z) {
        const FourPotential A = eval_potential(f, {x, y, z}, t);
        s.a0[i] = A.a0;
        for (int c = 0; c < 3; ++c) s.a[c][i] = A.a[c];
    });
    return s;
}

SampledEB sample_EB(const EMFieldConfig& f, const GridPtr& grid, double t) {
    SampledEB s;
    for (int c = 0; c < 3; ++c) {
        s.E[c] = RealField(grid);
        s.B[c] = RealField(grid);
    }
    grid->for_each_site([&](std::size_t i, double x, double y, double z) {
        const EBValues v = eval_EB(f, {x, y, z}, t);
        for (int c = 0; c < 3; ++c) {
            s.E[c][i] = v.E[c];
            s.B[c][i] = v.B[c];
        }
    });
    return s;
}

PotentialBounds potential_bounds(const EMFieldConfig& f, const Grid& grid, double t) {
    PotentialBounds b;
    bool first = true;
    grid.for_each_site([&](std::size_t, double x, double y, double z) {
        const FourPotential A = eval_potential(f, {x, y, z}, t);
        b.vector_max = std::max(b.vector_max, norm(A.a));
        if (first) {
            b.scalar_min = b.scalar_max = A.a0;
            first = false;
        } else {
            b.scalar_min = std::min(b.scalar_min, A.a0);
            b.scalar_max = std::max(b.scalar_max, A.a0);
        }
    });
    if (f.kind == FieldKind::PlaneWave) b.vector_max = std::max(b.vector_max, std::abs(f.amplitude) / f.omega());
    return b;
}

namespace {
constexpr int stress_index(int i, int j) {
    if (i > j) std::swap(i, j);
    constexpr int base[3] = {0, 3, 5};
    return base[i] + (j - i);
}
}  // namespace

const RealField& FieldStressEnergy::stress_component(int i, int j) const { return stress[stress_index(i, j)]; }

FieldStressEnergy field_stress_energy(const std::array<RealField, 3>& E, const std::array<RealField, 3>& B) {
    const GridPtr& grid = E[0].grid();
    for (int c = 0; c < 3; ++c) {
        require_same_grid(*grid, *E[c].grid(), "field_stress_energy");
        require_same_grid(*grid, *B[c].grid(), "field_stress_energy");
    }
    FieldStressEnergy out;
    out.energy_density = RealField(grid);
    for (auto& m : out.momentum_density) m = RealField(grid);
    for (auto& s : out.stress) s = RealField(grid);
    for (std::size_t n = 0; n < grid->size(); ++n) {
        const Vec3 e{E[0][n], E[1][n], E[2][n]};
        const Vec3 b{B[0][n], B[1][n], B[2][n]};
        const double u = 0.5 * (dot(e, e) + dot(b, b));
        out.energy_density[n] = u;
        const Vec3 g = cross(e, b);
        for (int c = 0; c < 3; ++c) out.momentum_density[c][n] = g[c];
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                out.stress[stress_index(i, j)][n] = -e[i] * e[j] - b[i] * b[j] + (i == j ? u : 0.0);
    }
    return out;
}

PoyntingResidual poynting_residual(const EMFieldConfig& f, const GridPtr& grid, double t, double dt) {
    if (f.kind == FieldKind::LinearGradientE)
        throw InvalidArgument("poynting_residual: linear_gradient_e is not source-free on the periodic box");
    if (!(dt > 0.0)) throw InvalidArgument("poynting_residual: dt must be positive");
    check_commensurate(f, *grid);

    auto totals = [&](double tt) {
        const SampledEB eb = sample_EB(f, grid, tt);
        const FieldStressEnergy se = field_stress_energy(eb.E, eb.B);
        Vec3 p;
        for (int c = 0; c < 3; ++c) p[c] = integrate(se.momentum_density[c]);
        return std::pair{integrate(se.energy_density), p};
    };
    const auto [u_plus, p_plus] = totals(t + dt);
    const auto [u_minus, p_minus] = totals(t - dt);

    PoyntingResidual r;
    r.energy = (u_plus - u_minus) / (2.0 * dt);
    r.momentum = (p_plus - p_minus) / (2.0 * dt);

    // Flux divergence terms, integrated over the torus.
    const SampledEB eb = sample_EB(f, grid, t);
    const FieldStressEnergy se = field_stress_energy(eb.E, eb.B);
    for (int a = 0; a < grid->dims(); ++a) {
        r.energy += integrate(derivative(se.momentum_density[a], a));  // S = E x H = g for vacuum
        for (int i = 0; i < 3; ++i) r.momentum[i] += integrate(derivative(se.stress_component(a, i), a));
    }
    return r;
}

}  // namespace ehrlab
