#include "ehrlab/ehrenfest.hpp"

#include <cmath>

#include "ehrlab/errors.hpp"

namespace ehrlab {

ExchangeRates exchange_rates_integral(const FourCurrent& cur, const EMFieldConfig& field, double t) {
    const GridPtr& grid = cur.rho.grid();
    const SampledEB eb = sample_EB(field, grid, t);
    ExchangeRates r;
    double power = 0.0;
    double f[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const Vec3 E{eb.E[0][i], eb.E[1][i], eb.E[2][i]};
        const Vec3 B{eb.B[0][i], eb.B[1][i], eb.B[2][i]};
        const Vec3 j{cur.j[0][i], cur.j[1][i], cur.j[2][i]};
        power += dot(j, E);
        const Vec3 fi = cur.rho[i] * E + cross(j, B);
        for (int a = 0; a < 3; ++a) f[a] += fi[a];
    }
    const double dv = grid->cell_volume();
    r.power = power * dv;
    r.force = Vec3{f[0], f[1], f[2]} * dv;
    return r;
}

ExchangeRates rates_point(const Vec3& xi, const Vec3& v, const EMFieldConfig& field, double t, double e, double Q) {
    if (!(std::abs(Q - e) < 0.01 * std::abs(e)))
        throw NumericalError("rates_point: total charge " + std::to_string(Q) + " deviates from e by more than 1%");
    const EBValues f = eval_EB(field, xi, t);
    ExchangeRates r;
    r.power = e * dot(v, f.E);
    r.force = e * (f.E + cross(v, f.B));
    return r;
}

Vec3 first_order_correction(const Vec3& d, const Vec3& v, const EMFieldConfig& field, const Vec3& xi, double t) {
    const FieldGradients g = eval_gradients(field, xi, t);
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        const Vec3 dE{g.dE[i][0], g.dE[i][1], g.dE[i][2]};
        const Vec3 dB{g.dB[i][0], g.dB[i][1], g.dB[i][2]};
        out += d[i] * (dE + cross(v, dB));
    }
    return out;
}

namespace {

template <typename T>
std::vector<T> differentiate(const std::vector<T>& f, double dt, int order, std::vector<bool>& one_sided) {
    if (order != 2 && order != 4) throw InvalidArgument("numeric_time_derivative: stencil order must be 2 or 4");
    if (!(dt > 0.0)) throw InvalidArgument("numeric_time_derivative: dt must be positive");
    const std::size_t n = f.size();
    if (n < static_cast<std::size_t>(order + 1))
        throw InvalidArgument("numeric_time_derivative: need at least " + std::to_string(order + 1) +
                              " samples, got " + std::to_string(n));
    std::vector<T> d(n);
    one_sided.assign(n, false);
    if (order == 2) {
        const double s = 1.0 / (2.0 * dt);
        for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) * s;
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * s;
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * s;
        one_sided[0] = one_sided[n - 1] = true;
    } else {
        const double s = 1.0 / (12.0 * dt);
        for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
        d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
        d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
        d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * s;
        d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s;
        one_sided[0] = one_sided[1] = one_sided[n - 2] = one_sided[n - 1] = true;
    }
    return d;
}

}  // namespace

DerivativeSeries numeric_time_derivative(const std::vector<double>& series, double dt, int order) {
    DerivativeSeries out;
    out.values = differentiate(series, dt, order, out.one_sided);
    return out;
}

std::vector<Vec3> numeric_time_derivative(const std::vector<Vec3>& series, double dt, int order,
                                          std::vector<bool>* one_sided) {
    std::vector<bool> flags;
    auto d = differentiate(series, dt, order, flags);
    if (one_sided) *one_sided = std::move(flags);
    return d;
}

namespace {

double max_b(const EMFieldConfig& f) {
    switch (f.kind) {
        case FieldKind::UniformB: return norm(f.B0);
        case FieldKind::PlaneWave: return std::abs(f.amplitude);
        default: return 0.0;
    }
}

struct PhaseDeriv {
    Vec3 dx;
    Vec3 dp;
};

PhaseDeriv lorentz_rhs(const Vec3& x, const Vec3& p, double t, double m, double e, const EMFieldConfig& f) {
    const Vec3 v = p / std::sqrt(dot(p, p) + m * m);
    const EBValues eb = eval_EB(f, x, t);
    return {v, e * (eb.E + cross(v, eb.B))};
}

}  // namespace

std::vector<ClassicalPoint> classical_trajectory(const Vec3& x0, const Vec3& p0, double m, double e,
                                                 const EMFieldConfig& field, double dt, double T) {
    if (!(m > 0.0)) throw InvalidArgument("classical_trajectory: mass must be positive");
    if (!(dt > 0.0) || !(T >= 0.0)) throw InvalidArgument("classical_trajectory: need dt > 0 and T >= 0");
    if (dt * std::abs(e) * max_b(field) / m >= 0.05)
        throw InvalidArgument("classical_trajectory: step too large for the cyclotron scale (dt |e| B / m >= 0.05)");
    const auto steps = static_cast<std::size_t>(std::llround(T / dt));
    std::vector<ClassicalPoint> out;
    out.reserve(steps + 1);
    Vec3 x = x0;
    Vec3 p = p0;
    auto velocity = [m](const Vec3& q) { return q / std::sqrt(dot(q, q) + m * m); };
    out.push_back({0.0, x, p, velocity(p)});
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = n * dt;
        const PhaseDeriv k1 = lorentz_rhs(x, p, t, m, e, field);
        const PhaseDeriv k2 = lorentz_rhs(x + 0.5 * dt * k1.dx, p + 0.5 * dt * k1.dp, t + 0.5 * dt, m, e, field);
        const PhaseDeriv k3 = lorentz_rhs(x + 0.5 * dt * k2.dx, p + 0.5 * dt * k2.dp, t + 0.5 * dt, m, e, field);
        const PhaseDeriv k4 = lorentz_rhs(x + dt * k3.dx, p + dt * k3.dp, t + dt, m, e, field);
        x += (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        p += (dt / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
        out.push_back({(n + 1) * dt, x, p, velocity(p)});
    }
    return out;
}

namespace {

ResidualNorm norm_of(const std::string& name, const std::vector<double>& res, const std::vector<double>& rhs,
                     double fallback, double tol) {
    ResidualNorm r;
    r.name = name;
    r.tolerance = tol;
    double scale = 0.0;
    for (double v : rhs) scale = std::max(scale, std::abs(v));
    if (!(scale > 1e-14 * fallback)) scale = fallback;
    r.scale = scale;
    double sq = 0.0;
    for (double v : res) {
        r.max_rel = std::max(r.max_rel, std::abs(v) / scale);
        sq += (v / scale) * (v / scale);
    }
    r.rms_rel = res.empty() ? 0.0 : std::sqrt(sq / res.size());
    r.pass = std::isfinite(r.max_rel) && r.max_rel <= tol;
    return r;
}

}  // namespace

EhrenfestReport build_report(const std::vector<BalanceSample>& samples, const Tolerances& tol, double fallback_scale) {
    if (samples.size() < 5) throw InvalidArgument("build_report: need at least 5 samples");
    std::vector<double> rE, rP, rPp, rPc, sE, sP, sPp, sPc;
    for (const auto& s : samples) {
        if (s.endpoint) continue;
        rE.push_back(s.dEn_dt_numeric - s.power_integral);
        rP.push_back(norm(s.dP_dt_numeric - s.force_integral));
        rPp.push_back(norm(s.dP_dt_numeric - s.force_point));
        rPc.push_back(norm(s.dP_dt_numeric - s.force_corrected));
        sE.push_back(s.power_integral);
        sP.push_back(norm(s.force_integral));
        sPp.push_back(norm(s.force_point));
        sPc.push_back(norm(s.force_corrected));
    }
    EhrenfestReport r;
    r.energy_integral = norm_of("energy_integral", rE, sE, fallback_scale, tol.energy_integral);
    r.momentum_integral = norm_of("momentum_integral", rP, sP, fallback_scale, tol.momentum_integral);
    r.momentum_point = norm_of("momentum_point", rPp, sPp, fallback_scale, tol.momentum_point);
    r.momentum_corrected = norm_of("momentum_corrected", rPc, sPc, fallback_scale, tol.momentum_corrected);
    r.all_pass = r.energy_integral.pass && r.momentum_integral.pass && r.momentum_point.pass &&
                 r.momentum_corrected.pass;
    return r;
}

double fitted_order(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("fitted_order: need at least two matching points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("fitted_order: values must be positive");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace ehrlab
