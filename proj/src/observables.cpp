#include "ehrlab/observables.hpp"

#include <cmath>
#include <numbers>

#include "ehrlab/errors.hpp"

namespace ehrlab {

double minimum_image(double dx, double L) {
    dx -= L * std::floor(dx / L + 0.5);
    return dx;
}

double total_charge(const FourCurrent& cur) { return integrate(cur.rho); }

Vec3 centroid(const FourCurrent& cur, double charge_unit) {
    const Grid& g = *cur.rho.grid();
    const double Q = total_charge(cur);
    if (!(std::abs(Q) > 1e-6 * std::abs(charge_unit)))
        throw NumericalError("centroid: net charge " + std::to_string(Q) + " is too small for a centroid");

    Vec3 xi;
    for (int a = 0; a < g.dims(); ++a) {
        const double L = g.extent(a);
        const double w = 2.0 * std::numbers::pi / L;
        double cs = 0.0;
        double sn = 0.0;
        g.for_each_site([&](std::size_t i, double x, double y, double z) {
            const double r = a == 0 ? x : (a == 1 ? y : z);
            cs += cur.rho[i] * std::cos(w * r);
            sn += cur.rho[i] * std::sin(w * r);
        });
        const double sign = Q < 0.0 ? -1.0 : 1.0;
        const double c0 = std::atan2(sign * sn, sign * cs) / w;
        double m = 0.0;
        g.for_each_site([&](std::size_t i, double x, double y, double z) {
            const double r = a == 0 ? x : (a == 1 ? y : z);
            m += cur.rho[i] * minimum_image(r - c0, L);
        });
        xi[a] = minimum_image(c0 + m * g.cell_volume() / Q, L);
    }
    return xi;
}

Vec3 density_peak(const FourCurrent& cur) {
    const Grid& g = *cur.rho.grid();
    const double sign = total_charge(cur) < 0.0 ? -1.0 : 1.0;
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
        if (sign * cur.rho[i] > sign * cur.rho[best]) best = i;
    Vec3 x = g.position(best);
    const auto ijk = g.unravel(best);
    for (int a = 0; a < g.dims(); ++a) {
        auto lo = ijk;
        auto hi = ijk;
        const int n = g.points(a);
        lo[a] = (ijk[a] + n - 1) % n;
        hi[a] = (ijk[a] + 1) % n;
        const double fm = sign * cur.rho[g.ravel(lo[0], lo[1], lo[2])];
        const double f0 = sign * cur.rho[best];
        const double fp = sign * cur.rho[g.ravel(hi[0], hi[1], hi[2])];
        const double curv = fm - 2.0 * f0 + fp;
        if (curv < 0.0) x[a] += 0.5 * (fm - fp) / curv * g.spacing(a);
    }
    return x;
}

VelocityField velocity_field(const FourCurrent& cur, double mask_floor) {
    if (!(mask_floor > 0.0)) throw InvalidArgument("velocity_field: mask_floor must be positive");
    const GridPtr& grid = cur.rho.grid();
    VelocityField vf;
    for (auto& c : vf.v) c = RealField(grid);
    vf.valid.assign(grid->size(), 0);
    double peak = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) peak = std::max(peak, std::abs(cur.rho[i]));
    const double floor = mask_floor * peak;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        if (peak == 0.0 || std::abs(cur.rho[i]) < floor) continue;
        vf.valid[i] = 1;
        for (int a = 0; a < 3; ++a) vf.v[a][i] = cur.j[a][i] / cur.rho[i];
    }
    return vf;
}

Vec3 velocity_at(const VelocityField& vf, const Vec3& x) {
    const Grid& g = *vf.v[0].grid();
    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < g.dims(); ++a) {
        const double L = g.extent(a);
        const double h = g.spacing(a);
        double u = (x[a] + 0.5 * L) / h;
        u -= g.points(a) * std::floor(u / g.points(a));
        base[a] = static_cast<int>(std::floor(u));
        frac[a] = u - base[a];
    }
    Vec3 out;
    const int corners = 1 << g.dims();
    for (int c = 0; c < corners; ++c) {
        int idx[3] = {0, 0, 0};
        double w = 1.0;
        for (int a = 0; a < g.dims(); ++a) {
            const int bit = (c >> a) & 1;
            idx[a] = (base[a] + bit) % g.points(a);
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        const std::size_t i = g.ravel(idx[0], idx[1], idx[2]);
        if (w == 0.0) continue;
        if (!vf.valid[i]) throw NumericalError("velocity_at: interpolation cell at the centroid is masked");
        for (int a = 0; a < 3; ++a) out[a] += w * vf.v[a][i];
    }
    return out;
}

EnergyMomentum energy_momentum(const StressEnergySlice& se) {
    EnergyMomentum em;
    em.En = integrate(se.T00);
    for (int a = 0; a < 3; ++a) em.P[a] = integrate(se.T0i[a]);
    return em;
}

Vec3 dipole_moment(const FourCurrent& cur, const Vec3& xi) {
    const Grid& g = *cur.rho.grid();
    Vec3 d;
    g.for_each_site([&](std::size_t i, double x, double y, double z) {
        const double r[3] = {x, y, z};
        for (int a = 0; a < g.dims(); ++a) d[a] += minimum_image(r[a] - xi[a], g.extent(a)) * cur.rho[i];
    });
    return d * g.cell_volume();
}

}  // namespace ehrlab
