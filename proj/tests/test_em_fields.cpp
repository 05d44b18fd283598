#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ehrlab/em_fields.hpp"
#include "ehrlab/errors.hpp"

using namespace ehrlab;
using std::numbers::pi;

namespace {

// Independent oracle: E = -grad A0 - dA/dt, B = curl A by central differences.
EBValues fields_from_potential(const EMFieldConfig& f, const Vec3& x, double t) {
    const double h = 1e-5;
    const double ht = 1e-4;
    EBValues r;
    auto A = [&](const Vec3& y, double s) { return eval_potential(f, y, s); };
    Vec3 dA0;
    Mat3 dA;  // dA[i][j] = d_i A_j
    for (int i = 0; i < 3; ++i) {
        Vec3 p = x, m = x;
        p[i] += h;
        m[i] -= h;
        const auto ap = A(p, t);
        const auto am = A(m, t);
        dA0[i] = (ap.a0 - am.a0) / (2 * h);
        for (int j = 0; j < 3; ++j) dA[i][j] = (ap.a[j] - am.a[j]) / (2 * h);
    }
    const Vec3 dAdt = (A(x, t + ht).a - A(x, t - ht).a) / (2 * ht);
    r.E = -dA0 - dAdt;
    r.B = {dA[1][2] - dA[2][1], dA[2][0] - dA[0][2], dA[0][1] - dA[1][0]};
    return r;
}

void expect_vec_near(const Vec3& a, const Vec3& b, double tol) {
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

std::vector<EMFieldConfig> all_kinds() {
    return {EMFieldConfig::zero(), EMFieldConfig::uniform_e({0.3, -0.2, 0.1}),
            EMFieldConfig::uniform_b({0.1, 0.4, -0.25}),
            EMFieldConfig::linear_gradient_e({0.02, 0.0, 0.01}, [] {
                Mat3 G;
                G[0] = {0.004, 0.001, 0.0};
                G[1] = {0.001, -0.003, 0.002};
                G[2] = {0.0, 0.002, -0.001};
                return G;
            }()),
            EMFieldConfig::plane_wave(0.7, {0.0, 2 * pi / 4, 2 * pi / 8}, Vec3{1.0, 0.0, 0.0})};
}

}  // namespace

TEST(EMFields, ZeroPotential) {
    const auto A = eval_potential(EMFieldConfig::zero(), {1, 2, 3}, 4.0);
    EXPECT_EQ(A.a0, 0.0);
    EXPECT_EQ(A.a, Vec3{});
}

TEST(EMFields, UniformBSymmetricGauge) {
    const double B = 0.3;
    const auto f = EMFieldConfig::uniform_b({0, 0, B});
    const Vec3 x{1.5, -0.5, 2.0};
    const auto A = eval_potential(f, x, 0.0);
    expect_vec_near(A.a, Vec3{-0.5 * B * x[1], 0.5 * B * x[0], 0.0}, 1e-15);
    expect_vec_near(fields_from_potential(f, x, 0.0).B, Vec3{0, 0, B}, 1e-9);
}

TEST(EMFields, UniformEStaticGauge) {
    const auto f = EMFieldConfig::uniform_e({0.2, 0, 0});
    expect_vec_near(fields_from_potential(f, {0.3, 1, -2}, 0.5).E, Vec3{0.2, 0, 0}, 1e-9);
    const auto eb = eval_EB(f, {5, 6, 7}, 100.0);
    expect_vec_near(eb.E, Vec3{0.2, 0, 0}, 0.0);
    expect_vec_near(eb.B, Vec3{}, 0.0);
}

TEST(EMFields, PlaneWaveOrigin) {
    const double a = 0.4;
    const auto f = EMFieldConfig::plane_wave(a, {0, 0, 1.3}, {1, 0, 0});
    const auto eb = eval_EB(f, {0, 0, 0}, 0.0);
    expect_vec_near(eb.E, Vec3{a, 0, 0}, 1e-15);
    expect_vec_near(eb.B, Vec3{0, a, 0}, 1e-15);
}

TEST(EMFields, LinearGradientAffine) {
    const double E = 0.02, g = 0.004;
    const auto f = EMFieldConfig::linear_gradient_e({E, 0, 0}, Mat3::diag(g, -g, 0));
    const double x = 1.7, y = -2.3;
    expect_vec_near(eval_EB(f, {x, y, 0}, 0).E, Vec3{E + g * x, -g * y, 0}, 1e-15);
}

TEST(EMFields, FieldsConsistentWithPotentials) {
    for (const auto& f : all_kinds()) {
        for (const Vec3& x : {Vec3{0.1, 0.2, 0.3}, Vec3{-1.1, 0.7, 2.2}}) {
            const double t = 0.37;
            const auto exact = eval_EB(f, x, t);
            const auto numeric = fields_from_potential(f, x, t);
            const double scale = std::max({1.0, norm(exact.E), norm(exact.B)});
            for (int i = 0; i < 3; ++i) {
                EXPECT_NEAR(numeric.E[i], exact.E[i], 1e-8 * scale) << to_string(f.kind);
                EXPECT_NEAR(numeric.B[i], exact.B[i], 1e-8 * scale) << to_string(f.kind);
            }
        }
    }
}

TEST(EMFields, GradientsMatchFiniteDifferences) {
    for (const auto& f : all_kinds()) {
        const Vec3 x{0.4, -0.3, 0.9};
        const double t = 0.2;
        const auto g = eval_gradients(f, x, t);
        const double h = 1e-5;
        for (int i = 0; i < 3; ++i) {
            Vec3 p = x, m = x;
            p[i] += h;
            m[i] -= h;
            const auto ep = eval_EB(f, p, t);
            const auto em = eval_EB(f, m, t);
            for (int j = 0; j < 3; ++j) {
                EXPECT_NEAR(g.dE[i][j], (ep.E[j] - em.E[j]) / (2 * h), 1e-8) << to_string(f.kind);
                EXPECT_NEAR(g.dB[i][j], (ep.B[j] - em.B[j]) / (2 * h), 1e-8) << to_string(f.kind);
            }
        }
    }
}

TEST(EMFields, PlaneWaveSourceFreeMaxwell) {
    const auto f = EMFieldConfig::plane_wave(0.5, {2 * pi / 3, 2 * pi / 3, 0}, Vec3{1, -1, 0} / std::sqrt(2.0));
    const Vec3 x{0.3, 0.1, -0.4};
    const double t = 0.8;
    const auto g = eval_gradients(f, x, t);
    EXPECT_NEAR(g.dE[0][0] + g.dE[1][1] + g.dE[2][2], 0.0, 1e-12);
    EXPECT_NEAR(g.dB[0][0] + g.dB[1][1] + g.dB[2][2], 0.0, 1e-12);
    const double ht = 1e-5;
    const Vec3 dBdt = (eval_EB(f, x, t + ht).B - eval_EB(f, x, t - ht).B) / (2 * ht);
    const Vec3 curlE{g.dE[1][2] - g.dE[2][1], g.dE[2][0] - g.dE[0][2], g.dE[0][1] - g.dE[1][0]};
    expect_vec_near(dBdt + curlE, Vec3{}, 1e-8);
}

TEST(EMFields, FactoryValidation) {
    EXPECT_THROW(EMFieldConfig::linear_gradient_e({}, Mat3::diag(1, 1, 0)), InvalidArgument);
    Mat3 asym = Mat3::diag(1, -1, 0);
    asym[0][1] = 0.5;
    EXPECT_THROW(EMFieldConfig::linear_gradient_e({}, asym), InvalidArgument);
    EXPECT_THROW(EMFieldConfig::plane_wave(1, {0, 0, 1}, {0, 0, 1}), InvalidArgument);
    EXPECT_THROW(EMFieldConfig::plane_wave(1, {0, 0, 1}, {2, 0, 0}), InvalidArgument);
    EXPECT_THROW(EMFieldConfig::plane_wave(1, {0, 0, 0}, {1, 0, 0}), InvalidArgument);
    EXPECT_THROW(EMFieldConfig::uniform_e({NAN, 0, 0}), InvalidArgument);
}

TEST(EMFields, Commensurability) {
    const auto g = make_grid({3, {8, 8, 8}, {1, 1, 1}});
    EXPECT_NO_THROW(check_commensurate(EMFieldConfig::plane_wave(1, {0, 0, 2 * pi}, {1, 0, 0}), *g));
    EXPECT_THROW(check_commensurate(EMFieldConfig::plane_wave(1, {0, 0, 6.2831853}, {1, 0, 0}), *g), InvalidArgument);
    const auto g1 = make_grid({1, {16, 1, 1}, {1, 1, 1}});
    EXPECT_THROW(check_commensurate(EMFieldConfig::plane_wave(1, {0, 0, 2 * pi}, {1, 0, 0}), *g1), InvalidArgument);
}

TEST(EMFields, StressEnergyUniformE) {
    const auto g = make_grid({1, {8, 1, 1}, {1, 1, 1}});
    const double E0 = 0.3;
    const auto eb = sample_EB(EMFieldConfig::uniform_e({E0, 0, 0}), g, 0.0);
    const auto se = field_stress_energy(eb.E, eb.B);
    for (std::size_t i = 0; i < g->size(); ++i) {
        EXPECT_NEAR(se.energy_density[i], 0.5 * E0 * E0, 1e-16);
        EXPECT_NEAR(se.stress_component(0, 0)[i], -0.5 * E0 * E0, 1e-16);
        EXPECT_NEAR(se.stress_component(1, 1)[i], 0.5 * E0 * E0, 1e-16);
        for (int c = 0; c < 3; ++c) EXPECT_EQ(se.momentum_density[c][i], 0.0);
    }
}

TEST(EMFields, StressEnergyOrthogonalEqualFields) {
    const auto g = make_grid({1, {8, 1, 1}, {1, 1, 1}});
    const double a = 0.6;
    std::array<RealField, 3> E{RealField(g), RealField(g), RealField(g)};
    std::array<RealField, 3> B{RealField(g), RealField(g), RealField(g)};
    for (std::size_t i = 0; i < g->size(); ++i) {
        E[0][i] = a;
        B[1][i] = a;
    }
    const auto se = field_stress_energy(E, B);
    for (std::size_t i = 0; i < g->size(); ++i) {
        EXPECT_NEAR(se.energy_density[i], a * a, 1e-15);
        const Vec3 p{se.momentum_density[0][i], se.momentum_density[1][i], se.momentum_density[2][i]};
        EXPECT_NEAR(norm(p), a * a, 1e-15);
    }
}

TEST(EMFields, StressTraceEqualsEnergyAndQuadraticScaling) {
    const auto g = make_grid({2, {16, 16, 1}, {2, 3, 1}});
    std::array<RealField, 3> E{RealField(g), RealField(g), RealField(g)};
    std::array<RealField, 3> B{RealField(g), RealField(g), RealField(g)};
    g->for_each_site([&](std::size_t i, double x, double y, double) {
        for (int c = 0; c < 3; ++c) {
            E[c][i] = std::sin(pi * x + c) * std::cos(2 * pi * y / 3 - c);
            B[c][i] = std::cos(pi * x * (c + 1)) + 0.3 * std::sin(2 * pi * y / 3);
        }
    });
    const auto se = field_stress_energy(E, B);
    auto E2 = E;
    auto B2 = B;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < g->size(); ++i) {
            E2[c][i] *= 3.0;
            B2[c][i] *= 3.0;
        }
    const auto se2 = field_stress_energy(E2, B2);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const double tr = se.stress_component(0, 0)[i] + se.stress_component(1, 1)[i] + se.stress_component(2, 2)[i];
        EXPECT_NEAR(tr, se.energy_density[i], 1e-14);
        EXPECT_GE(se.energy_density[i], 0.0);
        EXPECT_NEAR(se2.energy_density[i], 9 * se.energy_density[i], 1e-13);
        for (int k = 0; k < 6; ++k) EXPECT_NEAR(se2.stress[k][i], 9 * se.stress[k][i], 1e-13);
    }
}

TEST(EMFields, StressEnergyGridMismatch) {
    const auto g1 = make_grid({1, {8, 1, 1}, {1, 1, 1}});
    const auto g2 = make_grid({1, {16, 1, 1}, {1, 1, 1}});
    std::array<RealField, 3> E{RealField(g1), RealField(g1), RealField(g1)};
    std::array<RealField, 3> B{RealField(g2), RealField(g2), RealField(g2)};
    EXPECT_THROW(field_stress_energy(E, B), InvalidArgument);
}

TEST(EMFields, PlaneWaveMomentumEqualsEnergyDensity) {
    const auto g = make_grid({3, {8, 8, 8}, {1, 1, 1}});
    const auto f = EMFieldConfig::plane_wave(0.9, {0, 2 * pi, 2 * pi}, {1, 0, 0});
    const auto eb = sample_EB(f, g, 0.3);
    const auto se = field_stress_energy(eb.E, eb.B);
    for (std::size_t i = 0; i < g->size(); ++i) {
        const Vec3 p{se.momentum_density[0][i], se.momentum_density[1][i], se.momentum_density[2][i]};
        EXPECT_NEAR(norm(p), se.energy_density[i], 1e-12);
    }
}

TEST(EMFields, PoyntingResiduals) {
    const auto g = make_grid({3, {16, 16, 16}, {2, 2, 2}});
    const auto z = poynting_residual(EMFieldConfig::zero(), g, 0.0, 0.01);
    EXPECT_EQ(z.energy, 0.0);
    const auto b = poynting_residual(EMFieldConfig::uniform_b({0, 0, 1}), g, 0.0, 0.01);
    EXPECT_EQ(b.energy, 0.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(b.momentum[i], 0.0);
    const double a = 0.8;
    const auto pw = poynting_residual(EMFieldConfig::plane_wave(a, {pi, 2 * pi, 0}, Vec3{2, -1, 0} / std::sqrt(5.0)), g,
                                      0.4, 0.01);
    EXPECT_LT(std::abs(pw.energy), 1e-10 * a * a * g->volume());
    EXPECT_LT(norm(pw.momentum), 1e-10 * a * a * g->volume());
    EXPECT_THROW(poynting_residual(EMFieldConfig::linear_gradient_e({}, Mat3::diag(1, -1, 0)), g, 0, 0.1),
                 InvalidArgument);
}
