#pragma once

// Both sides of the packet energy/momentum balance: numerical time
// derivatives of the integrated energy and momentum against the exchange
// rates with the external field, in integral, point-particle and
// dipole-corrected form. Also a classical relativistic comparator.

#include <string>
#include <vector>

#include "ehrlab/em_fields.hpp"
#include "ehrlab/matter.hpp"

namespace ehrlab {

struct ExchangeRates {
    double power = 0.0;
    Vec3 force;
};

/// power = integral of j.E, force = integral of (rho E + j x B).
ExchangeRates exchange_rates_integral(const FourCurrent& cur, const EMFieldConfig& field, double t);

/// power = e v.E(xi), force = e (E(xi) + v x B(xi)). Requires |Q - e| < 0.01 |e|.
ExchangeRates rates_point(const Vec3& xi, const Vec3& v, const EMFieldConfig& field, double t, double e, double Q);

/// d^i d_i (E + v x B) at xi with closed-form field gradients. d is the
/// charge-weighted moment, so no further factor of e is applied.
Vec3 first_order_correction(const Vec3& d, const Vec3& v, const EMFieldConfig& field, const Vec3& xi, double t);

struct DerivativeSeries {
    std::vector<double> values;
    std::vector<bool> one_sided;  // true at endpoints
};

/// Central differences of order 2 or 4 on a uniformly spaced series; the
/// endpoints use one-sided stencils of the same order.
DerivativeSeries numeric_time_derivative(const std::vector<double>& series, double dt, int order);
std::vector<Vec3> numeric_time_derivative(const std::vector<Vec3>& series, double dt, int order,
                                          std::vector<bool>* one_sided = nullptr);

struct ClassicalPoint {
    double t = 0.0;
    Vec3 x;
    Vec3 p;
    Vec3 v;
};

/// RK4 integration of dp/dt = e(E + v x B), dx/dt = v = p / sqrt(p^2 + m^2).
/// Requires dt |e| |B|max / m < 0.05.
std::vector<ClassicalPoint> classical_trajectory(const Vec3& x0, const Vec3& p0, double m, double e,
                                                 const EMFieldConfig& field, double dt, double T);

struct BalanceSample {
    double t = 0.0;
    Vec3 dP_dt_numeric;
    double dEn_dt_numeric = 0.0;
    Vec3 force_integral;
    double power_integral = 0.0;
    Vec3 force_point;
    double power_point = 0.0;
    Vec3 force_corrected;
    bool endpoint = false;
};

struct Tolerances {
    double energy_integral = 1e-3;
    double momentum_integral = 1e-3;
    double momentum_point = 1e-3;
    double momentum_corrected = 1e-3;
};

struct ResidualNorm {
    std::string name;
    double max_rel = 0.0;
    double rms_rel = 0.0;
    double scale = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ConvergenceRow {
    double parameter = 0.0;  // width or dt
    double res_integral = 0.0;
    double res_point = 0.0;
    double res_corrected = 0.0;
};

struct EhrenfestReport {
    ResidualNorm energy_integral;
    ResidualNorm momentum_integral;
    ResidualNorm momentum_point;
    ResidualNorm momentum_corrected;
    std::string sweep_parameter;
    std::vector<ConvergenceRow> convergence;
    double fitted_order_corrected = 0.0;
    double fitted_order_integral = 0.0;
    bool all_pass = false;
};

/// Residual |lhs - rhs| per sample, scaled by max |rhs| over the run (or by
/// fallback_scale when every rhs vanishes). Endpoint samples are excluded.
EhrenfestReport build_report(const std::vector<BalanceSample>& samples, const Tolerances& tol,
                             double fallback_scale);

/// Least-squares slope of log(y) against log(x).
double fitted_order(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace ehrlab
