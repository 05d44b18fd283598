#include "ehrlab/matter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ehrlab/errors.hpp"

namespace ehrlab {

namespace {

constexpr cplx I{0.0, 1.0};

using Buffers = std::vector<std::vector<cplx>>;

int spinor_size(int dims) { return dims == 1 ? 2 : 4; }

Buffers to_buffers(const MatterState& s) {
    Buffers b;
    b.reserve(s.components.size());
    for (const auto& c : s.components) b.emplace_back(c.values().begin(), c.values().end());
    return b;
}

MatterState from_buffers(const MatterState& like, Buffers&& b, double t) {
    MatterState out;
    out.model = like.model;
    out.mass = like.mass;
    out.charge = like.charge;
    out.t = t;
    out.components.reserve(b.size());
    for (auto& v : b) out.components.emplace_back(like.grid(), std::move(v));
    return out;
}

// (sigma . n)(a, b)
inline void sigma_dot(const Vec3& n, cplx a, cplx b, cplx& ra, cplx& rb) {
    ra = n[2] * a + cplx(n[0], -n[1]) * b;
    rb = cplx(n[0], n[1]) * a - n[2] * b;
}

// alpha_axis applied to one spinor; ns = 2 uses alpha = sigma_1 (axis 0 only).
inline void apply_alpha(int axis, int ns, const cplx* in, cplx* out) {
    if (ns == 2) {
        out[0] = in[1];
        out[1] = in[0];
        return;
    }
    Vec3 n;
    n[axis] = 1.0;
    sigma_dot(n, in[2], in[3], out[0], out[1]);
    sigma_dot(n, in[0], in[1], out[2], out[3]);
}

// H_k = alpha.k + beta m applied to one spinor.
inline void apply_free_hamiltonian(const Vec3& k, double m, int ns, const cplx* in, cplx* out) {
    if (ns == 2) {
        out[0] = m * in[0] + k[0] * in[1];
        out[1] = k[0] * in[0] - m * in[1];
        return;
    }
    cplx ua, ub, la, lb;
    sigma_dot(k, in[2], in[3], ua, ub);
    sigma_dot(k, in[0], in[1], la, lb);
    out[0] = m * in[0] + ua;
    out[1] = m * in[1] + ub;
    out[2] = la - m * in[2];
    out[3] = lb - m * in[3];
}

Vec3 k_vector(double kx, double ky, double kz) { return {kx, ky, kz}; }

// Applies the exact free propagator exp(-i H_k dt) to spinor buffers.
void free_dirac_step(const Grid& grid, Buffers& psi, double mass, double dt) {
    const int ns = static_cast<int>(psi.size());
    for (auto& c : psi) grid.forward(c);
    grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
        const Vec3 k = k_vector(kx, ky, kz);
        const double E = std::sqrt(dot(k, k) + mass * mass);
        // c - 1 = -2 sin^2(E dt / 2), kept separate so the update stays a small
        // correction to psi instead of a rescaling by c ~ 1.
        const double half = std::sin(0.5 * E * dt);
        const double cm1 = -2.0 * half * half;
        const double s = std::sin(E * dt) / E;
        cplx in[4], hin[4];
        for (int a = 0; a < ns; ++a) in[a] = psi[a][idx];
        apply_free_hamiltonian(k, mass, ns, in, hin);
        for (int a = 0; a < ns; ++a) psi[a][idx] = in[a] + (cm1 * in[a] - I * s * hin[a]);
    });
    for (auto& c : psi) grid.inverse(c);
}

// exp(-i tau (e A^0 - e alpha.A)) applied pointwise.
void local_dirac_step(Buffers& psi, const SampledPotentials& pots, double e, double tau) {
    if (!pots.has_scalar && !pots.has_vector) return;
    const int ns = static_cast<int>(psi.size());
    const std::size_t n = psi[0].size();
    for (std::size_t i = 0; i < n; ++i) {
        const cplx phase = pots.has_scalar ? std::exp(-I * (tau * e * pots.a0[i])) : cplx(1.0);
        if (!pots.has_vector) {
            for (int a = 0; a < ns; ++a) psi[a][i] *= phase;
            continue;
        }
        Vec3 v{e * pots.a[0][i], e * pots.a[1][i], e * pots.a[2][i]};
        if (ns == 2) v = {v[0], 0.0, 0.0};
        const double vn = norm(v);
        cplx in[4], out[4];
        for (int a = 0; a < ns; ++a) in[a] = psi[a][i];
        if (vn == 0.0) {
            for (int a = 0; a < ns; ++a) psi[a][i] = phase * in[a];
            continue;
        }
        const Vec3 nh = v / vn;
        if (ns == 2) {
            out[0] = nh[0] * in[1];
            out[1] = nh[0] * in[0];
        } else {
            sigma_dot(nh, in[2], in[3], out[0], out[1]);
            sigma_dot(nh, in[0], in[1], out[2], out[3]);
        }
        const double c = std::cos(tau * vn);
        const double s = std::sin(tau * vn);
        for (int a = 0; a < ns; ++a) psi[a][i] = phase * (c * in[a] + I * s * out[a]);
    }
}

// Gradients of each spinor component along the active axes.
std::vector<std::array<std::vector<cplx>, 3>> component_gradients(const Grid& grid, const Buffers& psi) {
    std::vector<std::array<std::vector<cplx>, 3>> g(psi.size());
    for (std::size_t c = 0; c < psi.size(); ++c) {
        std::array<std::span<cplx>, 3> out;
        for (int a = 0; a < grid.dims(); ++a) {
            g[c][a].assign(psi[c].size(), cplx{});
            out[a] = g[c][a];
        }
        spectral::gradient(grid, psi[c], out);
    }
    return g;
}

// Kinetic momentum pi_a psi = (-i d_a - e A^a) psi at site i, for all three axes.
inline void kinetic_momentum(int ns, std::size_t i, const Buffers& psi,
                             const std::vector<std::array<std::vector<cplx>, 3>>& grads, int dims,
                             const SampledPotentials& pots, double e, cplx out[3][4]) {
    for (int a = 0; a < 3; ++a)
        for (int c = 0; c < ns; ++c) {
            cplx v = a < dims ? -I * grads[c][a][i] : cplx{};
            if (pots.has_vector) v -= e * pots.a[a][i] * psi[c][i];
            out[a][c] = v;
        }
}

// K psi = alpha.(P - e A) psi + beta m psi.
Buffers apply_kinetic(const Grid& grid, const Buffers& psi, const SampledPotentials& pots, double e, double m) {
    const int ns = static_cast<int>(psi.size());
    const int axes = ns == 2 ? 1 : 3;
    const auto grads = component_gradients(grid, psi);
    Buffers out(ns, std::vector<cplx>(psi[0].size()));
    for (std::size_t i = 0; i < psi[0].size(); ++i) {
        cplx pim[3][4];
        kinetic_momentum(ns, i, psi, grads, grid.dims(), pots, e, pim);
        cplx acc[4];
        for (int c = 0; c < ns; ++c) acc[c] = (c < ns / 2 ? m : -m) * psi[c][i];
        for (int a = 0; a < axes; ++a) {
            cplx tmp[4];
            apply_alpha(a, ns, pim[a], tmp);
            for (int c = 0; c < ns; ++c) acc[c] += tmp[c];
        }
        for (int c = 0; c < ns; ++c) out[c][i] = acc[c];
    }
    return out;
}

double buffers_norm2(const Buffers& b) {
    double s = 0.0;
    for (const auto& c : b)
        for (const auto& v : c) s += std::norm(v);
    return s;
}

bool buffers_finite(const Buffers& b) {
    for (const auto& c : b)
        for (const auto& v : c)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

void guard_growth(const Buffers& before, const Buffers& after, double limit, double t) {
    const double n0 = buffers_norm2(before);
    const double n1 = buffers_norm2(after);
    if (!buffers_finite(after) || n1 > limit * limit * n0) {
        std::ostringstream os;
        os << "instability: L2 norm grew from " << std::sqrt(n0) << " to " << std::sqrt(n1) << " in one step at t = "
           << t;
        throw NumericalError(os.str());
    }
}

// D_a phi = d_a phi - i e A^a phi for a = 0..2.
std::array<std::vector<cplx>, 3> kg_covariant_gradient(const Grid& grid, const std::vector<cplx>& phi,
                                                       const SampledPotentials& pots, double e) {
    std::array<std::vector<cplx>, 3> d;
    std::array<std::span<cplx>, 3> out;
    for (int a = 0; a < 3; ++a) d[a].assign(phi.size(), cplx{});
    for (int a = 0; a < grid.dims(); ++a) out[a] = d[a];
    spectral::gradient(grid, phi, out);
    if (pots.has_vector)
        for (int a = 0; a < 3; ++a)
            for (std::size_t i = 0; i < phi.size(); ++i) d[a][i] -= I * e * pots.a[a][i] * phi[i];
    return d;
}

// (D.D) phi = sum_a D_a D_a phi.
std::vector<cplx> kg_covariant_laplacian(const Grid& grid, const std::vector<cplx>& phi, const SampledPotentials& pots,
                                         double e) {
    std::vector<cplx> out(phi);
    if (!pots.has_vector) {
        grid.forward(out);
        grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
            out[idx] *= -(kx * kx + ky * ky + kz * kz);
        });
        grid.inverse(out);
        return out;
    }
    std::fill(out.begin(), out.end(), cplx{});
    std::vector<cplx> w(phi.size());
    for (int a = 0; a < 3; ++a) {
        if (a < grid.dims()) {
            spectral::derivative(grid, phi, a, w);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= I * e * pots.a[a][i] * phi[i];
            std::vector<cplx> dw(w.size());
            spectral::derivative(grid, w, a, dw);
            for (std::size_t i = 0; i < w.size(); ++i) out[i] += dw[i] - I * e * pots.a[a][i] * w[i];
        } else {
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double ea = e * pots.a[a][i];
                out[i] -= ea * ea * phi[i];
            }
        }
    }
    return out;
}

// Time derivative of (phi, pi).
Buffers kg_rhs(const Grid& grid, const Buffers& y, const SampledPotentials& pots, double e, double m) {
    const auto& phi = y[0];
    const auto& pi = y[1];
    Buffers f(2, std::vector<cplx>(phi.size()));
    auto lap = kg_covariant_laplacian(grid, phi, pots, e);
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const cplx iea0 = pots.has_scalar ? I * e * pots.a0[i] : cplx{};
        f[0][i] = pi[i] - iea0 * phi[i];
        f[1][i] = lap[i] - m * m * phi[i] - iea0 * pi[i];
    }
    return f;
}

void axpy(Buffers& out, const Buffers& x, double a, const Buffers& y) {
    for (std::size_t c = 0; c < x.size(); ++c)
        for (std::size_t i = 0; i < x[c].size(); ++i) out[c][i] = x[c][i] + a * y[c][i];
}

void require_model(const MatterState& s, Model m, const char* what) {
    if (s.model != m) throw InvalidArgument(std::string(what) + ": wrong model " + to_string(s.model));
}

}  // namespace

std::string to_string(Model m) {
    switch (m) {
        case Model::KG: return "kg";
        case Model::Dirac: return "dirac";
        case Model::Proca: return "proca";
    }
    return "?";
}

Model model_from_string(const std::string& s) {
    if (s == "kg") return Model::KG;
    if (s == "dirac") return Model::Dirac;
    if (s == "proca") return Model::Proca;
    throw InvalidArgument("unknown model '" + s + "' (expected kg, dirac or proca)");
}

std::string to_string(DiracPropagator p) { return p == DiracPropagator::Split ? "split" : "chebyshev"; }

int MatterState::component_count(Model model, int dims) {
    switch (model) {
        case Model::KG: return 2;
        case Model::Dirac: return spinor_size(dims);
        case Model::Proca: return 10;
    }
    return 0;
}

void MatterState::validate() const {
    if (components.empty()) throw InvalidArgument("state: no components");
    const int expected = component_count(model, grid()->dims());
    if (static_cast<int>(components.size()) != expected)
        throw InvalidArgument("state: " + to_string(model) + " on a " + std::to_string(grid()->dims()) +
                              "D grid needs " + std::to_string(expected) + " components");
    for (const auto& c : components) {
        require_same_grid(*grid(), *c.grid(), "state");
        if (!c.all_finite()) throw InvalidArgument("state: non-finite component values");
    }
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("state: mass must be positive");
    if (charge == 0.0 || !std::isfinite(charge)) throw InvalidArgument("state: charge must be nonzero");
    if (!std::isfinite(t)) throw InvalidArgument("state: time must be finite");
}

double l2_norm_squared(const MatterState& s) {
    double n = 0.0;
    for (const auto& c : s.components)
        for (const auto& v : c.values()) n += std::norm(v);
    return n * s.grid()->cell_volume();
}

MatterState init_gaussian(Model model, const GridPtr& grid, double mass, double charge, const PacketParams& p) {
    if (model == Model::Proca) throw InvalidArgument("init_gaussian: Proca has no dynamic model");
    if (!(mass > 0.0)) throw InvalidArgument("init_gaussian: mass must be positive");
    if (charge == 0.0) throw InvalidArgument("init_gaussian: charge must be nonzero");
    for (int a = 0; a < grid->dims(); ++a) {
        if (!(p.width[a] > 0.0)) throw InvalidArgument("init_gaussian: width must be positive");
        if (8.0 * p.width[a] > grid->extent(a)) {
            std::ostringstream os;
            os << "init_gaussian: width " << p.width[a] << " on axis " << a << " is too large for extent "
               << grid->extent(a) << " (wrap risk; need width <= extent/8)";
            throw InvalidArgument(os.str());
        }
    }

    // Scalar envelope times plane-wave factor, with minimum-image offsets.
    std::vector<cplx> env(grid->size());
    grid->for_each_site([&](std::size_t i, double x, double y, double z) {
        const Vec3 r{x, y, z};
        double log_amp = 0.0;
        double phase = 0.0;
        double skew_factor = 1.0;
        for (int a = 0; a < grid->dims(); ++a) {
            const double L = grid->extent(a);
            const double d = r[a] - p.center[a] - L * std::round((r[a] - p.center[a]) / L);
            const double u = d / p.width[a];
            log_amp -= 0.25 * u * u;
            phase += p.momentum[a] * d;
            if (a == 0 && p.skew != 0.0) skew_factor = std::sqrt(std::erfc(-p.skew * u / std::sqrt(2.0)));
        }
        env[i] = std::exp(log_amp) * skew_factor * std::exp(I * phase);
    });

    MatterState s;
    s.model = model;
    s.mass = mass;
    s.charge = charge;
    s.t = 0.0;
    Buffers b;
    if (model == Model::Dirac) {
        const int ns = spinor_size(grid->dims());
        b.assign(ns, std::vector<cplx>(grid->size()));
        b[0] = env;
        grid->forward(b[0]);
        grid->for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
            const Vec3 k{kx, ky, kz};
            const double E = std::sqrt(dot(k, k) + mass * mass);
            cplx in[4] = {b[0][idx], 0.0, 0.0, 0.0};
            cplx h[4];
            apply_free_hamiltonian(k, mass, ns, in, h);
            for (int a = 0; a < ns; ++a) b[a][idx] = 0.5 * (in[a] + h[a] / E);
        });
        for (auto& c : b) grid->inverse(c);
        const double q = buffers_norm2(b) * grid->cell_volume();
        const double scale = 1.0 / std::sqrt(q);
        for (auto& c : b)
            for (auto& v : c) v *= scale;
    } else {
        b.assign(2, env);
        grid->forward(b[1]);
        grid->for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
            const double E = std::sqrt(kx * kx + ky * ky + kz * kz + mass * mass);
            b[1][idx] *= -I * E;
        });
        grid->inverse(b[1]);
        // Q/e = integral of Re[i phi* pi].
        double q = 0.0;
        for (std::size_t i = 0; i < b[0].size(); ++i) q += -(std::conj(b[0][i]) * b[1][i]).imag();
        q *= grid->cell_volume();
        const double scale = 1.0 / std::sqrt(q);
        for (auto& c : b)
            for (auto& v : c) v *= scale;
    }
    for (auto& v : b) s.components.emplace_back(grid, std::move(v));
    return s;
}

double max_stable_dt(const Grid& grid, const EMFieldConfig& field, double mass, double charge) {
    const PotentialBounds pb = potential_bounds(field, grid, 0.0);
    const double amax = pb.vector_max + std::max(std::abs(pb.scalar_min), std::abs(pb.scalar_max));
    return 0.5 / (grid.k_max_norm() + std::abs(charge) * amax + mass);
}

Evolver::Evolver(EMFieldConfig field, GridPtr grid, StepperOptions options)
    : field_(std::move(field)), grid_(std::move(grid)), options_(options) {
    check_commensurate(field_, *grid_);
    if (field_.is_static()) static_pots_ = std::make_shared<const SampledPotentials>(sample_potentials(field_, grid_, 0.0));
    if (options_.dirac == DiracPropagator::Chebyshev && !field_.is_static())
        throw InvalidArgument("chebyshev propagator requires a static field");
}

std::shared_ptr<const SampledPotentials> Evolver::potentials(double t) const {
    if (static_pots_) return static_pots_;
    return std::make_shared<const SampledPotentials>(sample_potentials(field_, grid_, t));
}

MatterState Evolver::step(const MatterState& state, double dt) const {
    require_same_grid(*grid_, *state.grid(), "evolver");
    if (!(dt >= 0.0) || !std::isfinite(dt)) throw InvalidArgument("step: dt must be non-negative");
    if (dt == 0.0) return state;
    switch (state.model) {
        case Model::KG: return step_kg(state, dt);
        case Model::Dirac:
            return options_.dirac == DiracPropagator::Split ? step_dirac_split(state, dt)
                                                            : step_dirac_chebyshev(state, dt);
        case Model::Proca: break;
    }
    throw InvalidArgument("step: Proca states have no time evolution");
}

MatterState Evolver::step_kg(const MatterState& s, double dt) const {
    const Grid& g = *grid_;
    const double e = s.charge;
    const double m = s.mass;
    const Buffers y0 = to_buffers(s);
    const auto p0 = potentials(s.t);
    const auto ph = potentials(s.t + 0.5 * dt);
    const auto p1 = potentials(s.t + dt);

    Buffers tmp = y0;
    const Buffers k1 = kg_rhs(g, y0, *p0, e, m);
    axpy(tmp, y0, 0.5 * dt, k1);
    const Buffers k2 = kg_rhs(g, tmp, *ph, e, m);
    axpy(tmp, y0, 0.5 * dt, k2);
    const Buffers k3 = kg_rhs(g, tmp, *ph, e, m);
    axpy(tmp, y0, dt, k3);
    const Buffers k4 = kg_rhs(g, tmp, *p1, e, m);

    Buffers y1 = y0;
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t i = 0; i < y1[c].size(); ++i)
            y1[c][i] += dt / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);
    guard_growth(y0, y1, options_.growth_limit, s.t);
    return from_buffers(s, std::move(y1), s.t + dt);
}

MatterState Evolver::step_dirac_split(const MatterState& s, double dt) const {
    Buffers psi = to_buffers(s);
    const Buffers before = psi;
    local_dirac_step(psi, *potentials(s.t), s.charge, 0.5 * dt);
    free_dirac_step(*grid_, psi, s.mass, dt);
    local_dirac_step(psi, *potentials(s.t + dt), s.charge, 0.5 * dt);
    guard_growth(before, psi, options_.growth_limit, s.t);
    return from_buffers(s, std::move(psi), s.t + dt);
}

MatterState Evolver::step_dirac_chebyshev(const MatterState& s, double dt) const {
    const Grid& g = *grid_;
    const SampledPotentials& pots = *static_pots_;
    const double e = s.charge;
    const double m = s.mass;
    const PotentialBounds pb = potential_bounds(field_, g, s.t);
    const double center = e * 0.5 * (pb.scalar_min + pb.scalar_max);
    const double half_width =
        1.01 * (std::sqrt(std::pow(g.k_max_norm() + std::abs(e) * pb.vector_max, 2) + m * m) +
                std::abs(e) * 0.5 * (pb.scalar_max - pb.scalar_min));

    const Buffers psi0 = to_buffers(s);
    auto apply_normalized = [&](const Buffers& in) {
        Buffers out = apply_kinetic(g, in, pots, e, m);
        for (std::size_t c = 0; c < in.size(); ++c)
            for (std::size_t i = 0; i < in[c].size(); ++i) {
                const double v = pots.has_scalar ? e * pots.a0[i] : 0.0;
                out[c][i] = ((v - center) * in[c][i] + out[c][i]) / half_width;
            }
        return out;
    };

    const double x = half_width * dt;
    Buffers acc = psi0;
    const double j0 = std::cyl_bessel_j(0.0, x);
    for (auto& c : acc)
        for (auto& v : c) v *= j0;

    Buffers prev = psi0;
    Buffers cur = apply_normalized(psi0);
    cplx minus_i_pow = -I;
    int small = 0;
    for (int n = 1; n < 10000; ++n) {
        const double jn = std::cyl_bessel_j(static_cast<double>(n), x);
        const cplx a = 2.0 * minus_i_pow * jn;
        for (std::size_t c = 0; c < acc.size(); ++c)
            for (std::size_t i = 0; i < acc[c].size(); ++i) acc[c][i] += a * cur[c][i];
        if (n > x && std::abs(jn) < 1e-18) {
            if (++small >= 2) break;
        } else {
            small = 0;
        }
        Buffers next = apply_normalized(cur);
        for (std::size_t c = 0; c < next.size(); ++c)
            for (std::size_t i = 0; i < next[c].size(); ++i) next[c][i] = 2.0 * next[c][i] - prev[c][i];
        prev = std::move(cur);
        cur = std::move(next);
        minus_i_pow *= -I;
    }
    const cplx global = std::exp(-I * (center * dt));
    for (auto& c : acc)
        for (auto& v : c) v *= global;
    guard_growth(psi0, acc, options_.growth_limit, s.t);
    return from_buffers(s, std::move(acc), s.t + dt);
}

MatterState step_kg(const MatterState& state, const EMFieldConfig& field, double dt) {
    require_model(state, Model::KG, "step_kg");
    return Evolver(field, state.grid()).step(state, dt);
}

MatterState step_dirac(const MatterState& state, const EMFieldConfig& field, double dt, DiracPropagator propagator) {
    require_model(state, Model::Dirac, "step_dirac");
    return Evolver(field, state.grid(), {propagator}).step(state, dt);
}

// ---------------------------------------------------------------------------
// Proca

namespace {

constexpr double metric(int mu) { return mu == 0 ? 1.0 : -1.0; }

// Index into the 6 stored antisymmetric components, with sign.
inline std::pair<int, double> tensor_slot(int mu, int nu) {
    if (mu == nu) return {-1, 0.0};
    const double sign = mu < nu ? 1.0 : -1.0;
    if (mu > nu) std::swap(mu, nu);
    static constexpr int slot[4][4] = {{-1, 0, 1, 2}, {-1, -1, 3, 4}, {-1, -1, -1, 5}, {-1, -1, -1, -1}};
    return {slot[mu][nu], sign};
}

struct ProcaSite {
    cplx phi[4];
    cplx F[4][4];
};

inline ProcaSite proca_site(const std::vector<const std::vector<cplx>*>& comps, std::size_t i) {
    ProcaSite s;
    for (int mu = 0; mu < 4; ++mu) s.phi[mu] = (*comps[mu])[i];
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu) {
            const auto [slot, sign] = tensor_slot(mu, nu);
            s.F[mu][nu] = slot < 0 ? cplx{} : sign * (*comps[4 + slot])[i];
        }
    return s;
}

// Sesquilinear forms (left conjugated) whose real parts give j^mu and T^{0 nu}.
struct ProcaDensities {
    cplx j[4];
    cplx T0[4];
};

inline ProcaDensities proca_forms(const ProcaSite& L, const ProcaSite& R, double m, double e) {
    ProcaDensities d{};
    for (int mu = 0; mu < 4; ++mu) {
        cplx acc{};
        for (int nu = 0; nu < 4; ++nu) acc += metric(nu) * std::conj(L.phi[nu]) * R.F[mu][nu];
        d.j[mu] = -e * I * acc;
    }
    cplx lag{};
    for (int mu = 0; mu < 4; ++mu) {
        for (int nu = 0; nu < 4; ++nu) lag += -0.25 * metric(mu) * metric(nu) * std::conj(L.F[mu][nu]) * R.F[mu][nu];
        lag += 0.5 * m * m * metric(mu) * std::conj(L.phi[mu]) * R.phi[mu];
    }
    for (int nu = 0; nu < 4; ++nu) {
        cplx acc{};
        for (int lam = 0; lam < 4; ++lam) acc -= metric(lam) * std::conj(L.F[0][lam]) * R.F[nu][lam];
        acc += m * m * std::conj(L.phi[0]) * R.phi[nu];
        if (nu == 0) acc -= lag;
        d.T0[nu] = acc;
    }
    return d;
}

std::vector<const std::vector<cplx>*> component_ptrs(const Buffers& b) {
    std::vector<const std::vector<cplx>*> p;
    for (const auto& c : b) p.push_back(&c);
    return p;
}

}  // namespace


MatterState proca_plane_wave(const GridPtr& grid, double mass, double charge, const Vec3& k, const FourVector& eps,
                             double t) {
    if (!(mass > 0.0)) throw InvalidArgument("proca_plane_wave: mass must be positive");
    if (charge == 0.0) throw InvalidArgument("proca_plane_wave: charge must be nonzero");
    check_wavevector_on_lattice(k, *grid, "proca_plane_wave");
    const double w = std::sqrt(dot(k, k) + mass * mass);
    const double transverse = w * eps.t - dot(k, eps.s);
    const double scale = std::max({1.0, std::abs(w * eps.t), norm(k) * norm(eps.s)});
    if (std::abs(transverse) > 1e-12 * scale)
        throw InvalidArgument("proca_plane_wave: polarization is not four-transverse (k_mu eps^mu != 0)");

    const double kup[4] = {w, k[0], k[1], k[2]};
    const double eup[4] = {eps.t, eps.s[0], eps.s[1], eps.s[2]};
    Buffers b(10, std::vector<cplx>(grid->size()));
    grid->for_each_site([&](std::size_t i, double x, double y, double z) {
        const cplx phase = std::exp(I * (k[0] * x + k[1] * y + k[2] * z - w * t));
        for (int mu = 0; mu < 4; ++mu) b[mu][i] = eup[mu] * phase;
        // d^mu phase = -i k^mu phase
        int slot = 0;
        for (int mu = 0; mu < 4; ++mu)
            for (int nu = mu + 1; nu < 4; ++nu, ++slot)
                b[4 + slot][i] = -I * (kup[mu] * eup[nu] - kup[nu] * eup[mu]) * phase;
    });
    MatterState s;
    s.model = Model::Proca;
    s.mass = mass;
    s.charge = charge;
    s.t = t;
    for (auto& v : b) s.components.emplace_back(grid, std::move(v));
    return s;
}

FourCurrent four_current(const MatterState& s, const SampledPotentials& pots) {
    const GridPtr& grid = s.grid();
    const double e = s.charge;
    FourCurrent cur;
    cur.rho = RealField(grid);
    for (auto& j : cur.j) j = RealField(grid);
    const std::size_t n = grid->size();

    switch (s.model) {
        case Model::KG: {
            const std::vector<cplx> phi(s.components[0].values().begin(), s.components[0].values().end());
            const auto& pi = s.components[1];
            const auto D = kg_covariant_gradient(*grid, phi, pots, e);
            for (std::size_t i = 0; i < n; ++i) {
                const cplx pc = std::conj(phi[i]);
                cur.rho[i] = -e * (pc * pi[i]).imag();
                for (int a = 0; a < 3; ++a) cur.j[a][i] = e * (pc * D[a][i]).imag();
            }
            break;
        }
        case Model::Dirac: {
            const int ns = static_cast<int>(s.components.size());
            const int axes = ns == 2 ? 1 : 3;
            for (std::size_t i = 0; i < n; ++i) {
                cplx psi[4], tmp[4];
                double r = 0.0;
                for (int c = 0; c < ns; ++c) {
                    psi[c] = s.components[c][i];
                    r += std::norm(psi[c]);
                }
                cur.rho[i] = e * r;
                for (int a = 0; a < axes; ++a) {
                    apply_alpha(a, ns, psi, tmp);
                    cplx acc{};
                    for (int c = 0; c < ns; ++c) acc += std::conj(psi[c]) * tmp[c];
                    cur.j[a][i] = e * acc.real();
                }
            }
            break;
        }
        case Model::Proca: {
            const Buffers b = to_buffers(s);
            const auto ptrs = component_ptrs(b);
            for (std::size_t i = 0; i < n; ++i) {
                const ProcaSite site = proca_site(ptrs, i);
                const ProcaDensities d = proca_forms(site, site, s.mass, e);
                cur.rho[i] = d.j[0].real();
                for (int a = 0; a < 3; ++a) cur.j[a][i] = d.j[a + 1].real();
            }
            break;
        }
    }
    return cur;
}

FourCurrent four_current(const MatterState& state, const EMFieldConfig& field) {
    return four_current(state, sample_potentials(field, state.grid(), state.t));
}

StressEnergySlice stress_energy(const MatterState& s, const SampledPotentials& pots, DiracTensorForm form) {
    const GridPtr& grid = s.grid();
    const double e = s.charge;
    const double m = s.mass;
    const std::size_t n = grid->size();
    StressEnergySlice se;
    se.T00 = RealField(grid);
    for (auto& c : se.T0i) c = RealField(grid);

    switch (s.model) {
        case Model::KG: {
            const std::vector<cplx> phi(s.components[0].values().begin(), s.components[0].values().end());
            const auto& pi = s.components[1];
            const auto D = kg_covariant_gradient(*grid, phi, pots, e);
            for (std::size_t i = 0; i < n; ++i) {
                double grad2 = 0.0;
                for (int a = 0; a < 3; ++a) grad2 += std::norm(D[a][i]);
                se.T00[i] = 0.5 * (std::norm(pi[i]) + grad2 + m * m * std::norm(phi[i]));
                // T^{0i} = Re[(D^0 phi)* D^i phi] with D^i = -D_i
                for (int a = 0; a < 3; ++a) se.T0i[a][i] = -(std::conj(pi[i]) * D[a][i]).real();
            }
            break;
        }
        case Model::Dirac: {
            const Buffers psi = to_buffers(s);
            const int ns = static_cast<int>(psi.size());
            const int axes = ns == 2 ? 1 : 3;
            const auto grads = component_gradients(*grid, psi);
            const Buffers K = apply_kinetic(*grid, psi, pots, e, m);
            Buffers K_free;
            if (form == DiracTensorForm::Printed) K_free = apply_kinetic(*grid, psi, SampledPotentials{}, e, m);
            const SampledPotentials none{};
            for (std::size_t i = 0; i < n; ++i) {
                cplx p[4], k[4];
                for (int c = 0; c < ns; ++c) {
                    p[c] = psi[c][i];
                    k[c] = K[c][i];
                }
                // i d_t psi = (K + e A^0) psi on shell; covariant form uses i D_0 psi = K psi.
                if (form == DiracTensorForm::Printed && pots.has_scalar)
                    for (int c = 0; c < ns; ++c) k[c] += e * pots.a0[i] * p[c];
                cplx mom[3][4];
                kinetic_momentum(ns, i, psi, grads, grid->dims(),
                                 form == DiracTensorForm::Covariant ? pots : none, e, mom);
                cplx t00{};
                for (int c = 0; c < ns; ++c)
                    t00 += std::conj(p[c]) * (form == DiracTensorForm::Covariant ? k[c] : K_free[c][i]);
                se.T00[i] = t00.real();
                for (int a = 0; a < axes; ++a) {
                    cplx ak[4];
                    apply_alpha(a, ns, k, ak);
                    cplx acc{};
                    for (int c = 0; c < ns; ++c) acc += std::conj(p[c]) * (mom[a][c] + ak[c]);
                    se.T0i[a][i] = 0.5 * acc.real();
                }
            }
            break;
        }
        case Model::Proca: {
            const Buffers b = to_buffers(s);
            const auto ptrs = component_ptrs(b);
            for (std::size_t i = 0; i < n; ++i) {
                const ProcaSite site = proca_site(ptrs, i);
                const ProcaDensities d = proca_forms(site, site, m, e);
                se.T00[i] = d.T0[0].real();
                for (int a = 0; a < 3; ++a) se.T0i[a][i] = d.T0[a + 1].real();
            }
            break;
        }
    }
    return se;
}

StressEnergySlice stress_energy(const MatterState& state, const EMFieldConfig& field, DiracTensorForm form) {
    return stress_energy(state, sample_potentials(field, state.grid(), state.t), form);
}

double negative_frequency_fraction(const MatterState& s) {
    const Grid& grid = *s.grid();
    const double m = s.mass;
    Buffers b = to_buffers(s);
    for (auto& c : b) grid.forward(c);
    double neg = 0.0;
    double total = 0.0;
    switch (s.model) {
        case Model::Dirac: {
            const int ns = static_cast<int>(b.size());
            grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
                const Vec3 k{kx, ky, kz};
                const double E = std::sqrt(dot(k, k) + m * m);
                cplx in[4], h[4];
                for (int c = 0; c < ns; ++c) in[c] = b[c][idx];
                apply_free_hamiltonian(k, m, ns, in, h);
                for (int c = 0; c < ns; ++c) {
                    neg += std::norm(0.5 * (in[c] - h[c] / E));
                    total += std::norm(in[c]);
                }
            });
            break;
        }
        case Model::KG: {
            grid.for_each_k([&](std::size_t idx, double kx, double ky, double kz) {
                const double E = std::sqrt(kx * kx + ky * ky + kz * kz + m * m);
                const cplx plus = 0.5 * (b[0][idx] + I * b[1][idx] / E);
                const cplx minus = 0.5 * (b[0][idx] - I * b[1][idx] / E);
                neg += E * std::norm(minus);
                total += E * (std::norm(plus) + std::norm(minus));
            });
            break;
        }
        case Model::Proca: return 0.0;
    }
    return total > 0.0 ? neg / total : 0.0;
}

MatterState gauge_transform(const MatterState& s, const RealField& chi) {
    require_same_grid(*s.grid(), *chi.grid(), "gauge_transform");
    MatterState out = s;
    for (auto& c : out.components)
        for (std::size_t i = 0; i < c.size(); ++i) c[i] *= std::exp(-I * (s.charge * chi[i]));
    return out;
}

SampledPotentials gauge_shift(const SampledPotentials& pots, const RealField& chi) {
    SampledPotentials out = pots;
    const GridPtr& grid = chi.grid();
    if (!out.a0.grid()) {
        out.a0 = RealField(grid);
        for (auto& c : out.a) c = RealField(grid);
    }
    for (int a = 0; a < grid->dims(); ++a) {
        const RealField d = derivative(chi, a);
        for (std::size_t i = 0; i < d.size(); ++i) out.a[a][i] -= d[i];
    }
    out.has_vector = true;
    return out;
}

double continuity_residual(const RealField& rho_before, const RealField& rho_after, const FourCurrent& mid, double dt) {
    const Grid& grid = *mid.rho.grid();
    std::vector<double> res(grid.size());
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = (rho_after[i] - rho_before[i]) / (2.0 * dt);
    for (int a = 0; a < grid.dims(); ++a) {
        const RealField d = derivative(mid.j[a], a);
        for (std::size_t i = 0; i < res.size(); ++i) res[i] += d[i];
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        num += res[i] * res[i];
        den += mid.rho[i] * mid.rho[i];
    }
    return std::sqrt(num / den);
}

ProcaResiduals proca_conservation_residuals(const GridPtr& grid, double mass, double charge, const Vec3& k,
                                            const FourVector& polarization) {
    const MatterState s = proca_plane_wave(grid, mass, charge, k, polarization);
    const double w = std::sqrt(dot(k, k) + mass * mass);
    const Buffers b = to_buffers(s);
    Buffers bdot = b;
    for (auto& c : bdot)
        for (auto& v : c) v *= -I * w;
    const auto p = component_ptrs(b);
    const auto pd = component_ptrs(bdot);

    const std::size_t n = grid->size();
    RealField drho(grid), dT00(grid);
    std::array<RealField, 3> j{RealField(grid), RealField(grid), RealField(grid)};
    std::array<RealField, 3> T0{RealField(grid), RealField(grid), RealField(grid)};
    for (std::size_t i = 0; i < n; ++i) {
        const ProcaSite site = proca_site(p, i);
        const ProcaSite sdot = proca_site(pd, i);
        const ProcaDensities d = proca_forms(site, site, mass, charge);
        const ProcaDensities d1 = proca_forms(sdot, site, mass, charge);
        const ProcaDensities d2 = proca_forms(site, sdot, mass, charge);
        drho[i] = (d1.j[0] + d2.j[0]).real();
        dT00[i] = (d1.T0[0] + d2.T0[0]).real();
        for (int a = 0; a < 3; ++a) {
            j[a][i] = d.j[a + 1].real();
            T0[a][i] = d.T0[a + 1].real();
        }
    }
    for (int a = 0; a < grid->dims(); ++a) {
        const RealField dj = derivative(j[a], a);
        const RealField dT = derivative(T0[a], a);
        for (std::size_t i = 0; i < n; ++i) {
            drho[i] += dj[i];
            dT00[i] += dT[i];
        }
    }
    ProcaResiduals r;
    for (std::size_t i = 0; i < n; ++i) {
        r.current = std::max(r.current, std::abs(drho[i]));
        r.energy = std::max(r.energy, std::abs(dT00[i]));
    }
    return r;
}

}  // namespace ehrlab
