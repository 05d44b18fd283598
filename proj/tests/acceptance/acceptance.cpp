// Acceptance suite: one line per criterion, exit status 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "ehrlab/config.hpp"
#include "ehrlab/scenario.hpp"

using namespace ehrlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1D Dirac packet on the criterion lattice (N = 256, extent 40, width 0.5).
std::string line_config(const std::string& model, const std::string& field_block, double width, double skew,
                        const std::string& check_block = "") {
    return "[grid]\ndims = 1\npoints = 256\nextent = 40\n\n[field]\n" + field_block +
           "\n[matter]\nmodel = " + model + "\nm = 1\ne = 1\nwidth = " + exact_decimal(width) +
           "\nmomentum = 0.5, 0, 0\nskew = " + exact_decimal(skew) +
           "\n\n[evolution]\ndt = 0.001\nsteps = 10000\ndump_every = 100\n\n[check]\nstencil_order = 4\n" + check_block;
}

const std::string kZero = "kind = zero\n";
const std::string kUniformE = "kind = uniform_e\nE0 = 0.02, 0, 0\n";
const std::string kGradientE = "kind = linear_gradient_e\nE0 = 0.02, 0, 0\nG = 0.004, 0, 0, 0, -0.004, 0, 0, 0, 0\n";

constexpr double kB = 0.05;
constexpr double kP = 0.5;

ScenarioConfig magnetic_config(double width) {
    // One cyclotron period T = 2 pi E / (e B) with E = sqrt(p^2 + m^2).
    const double dt = 0.08;
    const double period = 2 * std::numbers::pi * std::sqrt(kP * kP + 1.0) / kB;
    const long steps = std::lround(period / dt);
    return parse_config("[grid]\ndims = 2\npoints = 64, 64\nextent = 128, 128\n\n[field]\nkind = uniform_b\nB0 = 0, 0, " +
                        exact_decimal(kB) + "\n\n[matter]\nmodel = dirac\nm = 1\ne = 1\nwidth = " + exact_decimal(width) +
                        "\nmomentum = " + exact_decimal(kP) + ", 0, 0\n\n[evolution]\ndt = " + exact_decimal(dt) +
                        "\nsteps = " + std::to_string(steps) + "\ndump_every = 6\npropagator = chebyshev\n");
}

RunOptions quiet() {
    RunOptions o;
    o.write_outputs = false;
    return o;
}

// Largest |dEn/dt| over all samples of a run.
double max_energy_rate(const RunResult& r) {
    double m = 0.0;
    for (const auto& s : r.samples) m = std::max(m, std::abs(s.dEn_dt_numeric));
    return m;
}

double noise_floor = 0.0;  // from criterion 1, used by criterion 3
RunResult magnetic_run;     // shared by criteria 3 and 4

Outcome criterion1() {
    const auto r = run_scenario(parse_config(line_config("dirac", kZero, 0.5, 0.0)), quiet());
    if (r.aborted) return {false, r.abort_message};
    const auto& r0 = r.records.front();
    double dq = 0.0, dp = 0.0;
    for (const auto& rec : r.records) {
        dq = std::max(dq, std::abs(rec.Q - 1.0));
        dp = std::max(dp, norm(rec.P - r0.P));
    }
    dp /= norm(r0.P) + r0.En;
    noise_floor = max_energy_rate(r);
    return {dq < 1e-8 && dp < 1e-8, "max|Q-e|/|e| = " + fmt("%.2e", dq) + ", max|P-P0|/(|P0|+E0) = " + fmt("%.2e", dp) +
                                        ", dE/dt noise floor = " + fmt("%.2e", noise_floor)};
}

Outcome criterion2() {
    const auto r = run_scenario(parse_config(line_config("dirac", kUniformE, 0.5, 0.0)), quiet());
    if (r.aborted || r.samples.empty()) return {false, "run incomplete: " + r.abort_message};
    const double eE = 0.02;
    double res = 0.0, gap = 0.0;
    for (const auto& s : r.samples) {
        res = std::max(res, std::abs(s.dP_dt_numeric[0] - eE) / eE);
        gap = std::max(gap, norm(s.force_point - s.force_integral));
    }
    return {res < 1e-3 && gap < 1e-12 * eE,
            "max|dPx/dt - eE0|/(eE0) = " + fmt("%.2e", res) + ", max|F_point - F_integral| = " + fmt("%.2e", gap)};
}

Outcome criterion3() {
    magnetic_run = run_scenario(magnetic_config(1.0 / std::sqrt(kB)), quiet());
    const auto& r = magnetic_run;
    if (r.aborted) return {false, r.abort_message};
    const double rate = max_energy_rate(r);
    const double p0 = norm(r.records.front().P);
    double dp = 0.0;
    for (const auto& rec : r.records) dp = std::max(dp, std::abs(norm(rec.P) - p0) / p0);
    return {rate < 10 * noise_floor && dp < 1e-3,
            "max|dE/dt| = " + fmt("%.2e", rate) + " (limit " + fmt("%.2e", 10 * noise_floor) +
                "), max||P|-|P0||/|P0| = " + fmt("%.2e", dp) + " (limit 1e-3)"};
}

Outcome criterion4() {
    const auto& full = magnetic_run;
    if (full.aborted || full.max_classical_deviation < 0) return {false, "full-width run unusable"};
    const double R = full.orbit_radius;
    const auto half = run_scenario(magnetic_config(0.5 / std::sqrt(kB)), quiet());
    if (half.aborted || half.max_classical_deviation < 0) return {false, "half-width run unusable"};
    const double ratio = full.max_classical_deviation / half.max_classical_deviation;
    const bool ok = full.max_classical_deviation < 0.02 * R && ratio >= 3.0;
    return {ok, "max|xi - x_cl| = " + fmt("%.3g", full.max_classical_deviation) + " (limit 0.02 R = " +
                    fmt("%.3g", 0.02 * R) + "), half-width deviation = " + fmt("%.3g", half.max_classical_deviation) +
                    ", reduction ratio = " + fmt("%.3g", ratio) + " (need >= 3)"};
}

Outcome criterion5() {
    auto cfg = parse_config(line_config("dirac", kGradientE, 1.0, 4.0,
                                        "expansion_point = peak\nsweep = width-halving(3)\n"));
    // Finer sampling keeps the stencil error below the balance residual for the narrowest packet.
    cfg.dump_every = 10;
    const auto r = run_scenario(cfg, quiet());
    if (!r.report) return {false, "no balance report: " + r.abort_message};
    const double point = r.report->momentum_point.rms_rel;
    const double corrected = r.report->momentum_corrected.rms_rel;
    const auto sweep = run_sweep(cfg, quiet());
    const double ratio = point / corrected;
    std::string rows;
    for (const auto& row : sweep.rows) rows += " " + fmt("%.2e", row.res_corrected);
    return {ratio >= 5.0 && sweep.order_corrected >= 1.8,
            "RMS point/corrected = " + fmt("%.3g", ratio) + " (need >= 5), corrected residuals by width:" + rows +
                ", fitted order = " + fmt("%.3f", sweep.order_corrected) + " (need >= 1.8)"};
}

Outcome criterion6() {
    std::string detail;
    bool ok = true;
    for (const char* model : {"kg", "dirac"}) {
        const auto cfg = parse_config(line_config(model, kUniformE, 0.5, 0.0, "sweep = dt-halving(3)\n"));
        const auto s = run_sweep(cfg, quiet());
        bool aborted = false;
        for (const auto& row : s.rows) aborted = aborted || row.aborted;
        ok = ok && !aborted && s.order_continuity >= 2.0;
        detail += std::string(detail.empty() ? "" : ", ") + model + " slope = " + fmt("%.6f", s.order_continuity) +
                  " (max residual " + fmt("%.2e", s.rows.front().max_continuity) + " -> " +
                  fmt("%.2e", s.rows.back().max_continuity) + ")";
    }
    return {ok, detail + " (need >= 2)"};
}

Outcome criterion7() {
    double worst = 0.0;
    const std::vector<std::pair<GridSpec, EMFieldConfig>> cases = {
        {{1, {256, 1, 1}, {40, 1, 1}}, EMFieldConfig::uniform_e({0.02, 0, 0})},
        {{2, {64, 64, 1}, {24, 24, 1}}, EMFieldConfig::uniform_b({0, 0, 0.1})},
        {{3, {64, 64, 64}, {20, 20, 20}}, EMFieldConfig::plane_wave(0.1, {0, 0, 2 * std::numbers::pi / 20}, {1, 0, 0})},
    };
    unsigned seed = 1;
    for (const auto& [spec, field] : cases) {
        const auto g = make_grid(spec);
        const auto pots = sample_potentials(field, g, 0.3);
        // |e chi| stays near 1 so exp(-i e chi) psi remains resolved on the lattice.
        const auto chi = smooth_periodic_function(g, seed++, 4, 0.5);
        for (Model m : {Model::KG, Model::Dirac}) {
            const auto s = init_gaussian(m, g, 1.0, -1.0, {{0.3, -0.2, 0.1}, {1, 1, 1}, {0.4, 0.2, -0.1}, 0.0});
            const auto a = four_current(s, pots);
            const auto b = four_current(gauge_transform(s, chi), gauge_shift(pots, chi));
            for (std::size_t i = 0; i < g->size(); ++i) {
                worst = std::max(worst, std::abs(a.rho[i] - b.rho[i]));
                for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(a.j[k][i] - b.j[k][i]));
            }
        }
    }
    return {worst < 1e-10, "max-norm current change = " + fmt("%.2e", worst) + " over KG and Dirac, 1D/2D/3D"};
}

Outcome criterion8() {
    double cur = 0.0, en = 0.0;
    {
        const auto g = make_grid({1, {1024, 1, 1}, {20, 1, 1}});
        const Vec3 k{2 * std::numbers::pi * 7 / 20, 0, 0};
        const double w = std::sqrt(dot(k, k) + 1.0);
        const auto r = proca_conservation_residuals(g, 1.0, 1.0, k, {k[0] * 0.6 / w, {0.6, 1.0, -0.4}});
        cur = std::max(cur, r.current);
        en = std::max(en, r.energy);
    }
    {
        const double L = 10;
        const auto g = make_grid({3, {64, 64, 64}, {L, L, L}});
        const Vec3 k{2 * std::numbers::pi * 2 / L, -2 * std::numbers::pi / L, 2 * std::numbers::pi * 3 / L};
        const double m = 0.8;
        const double w = std::sqrt(dot(k, k) + m * m);
        const Vec3 s{0.2, 0.9, -0.5};
        const auto r = proca_conservation_residuals(g, m, -1.0, k, {dot(k, s) / w, s});
        cur = std::max(cur, r.current);
        en = std::max(en, r.energy);
    }
    return {cur < 1e-8 && en < 1e-8,
            "max|d_mu j^mu| = " + fmt("%.2e", cur) + ", max|d_t T00 + d_i Ti0| = " + fmt("%.2e", en) + " (1D N=1024, 64^3)"};
}

Outcome criterion9() {
    const double L = 4.0, a = 0.3;
    const auto g = make_grid({3, {16, 16, 16}, {L, L, L}});
    const Vec3 k{2 * std::numbers::pi / L, 2 * std::numbers::pi * 2 / L, 0};
    const Vec3 pol = Vec3{-k[1], k[0], 0} / norm(k);
    const auto f = EMFieldConfig::plane_wave(a, k, pol);
    double worst = 0.0;
    for (double t : {0.0, 0.37, 1.9}) worst = std::max(worst, std::abs(poynting_residual(f, g, t, 1e-3).energy));
    const double limit = 1e-10 * a * a * g->volume();
    return {worst < limit, "energy-rate residual = " + fmt("%.2e", worst) + " (limit " + fmt("%.2e", limit) + ")"};
}

Outcome criterion10() {
    bool ok = true;
    double resume_err = 0.0;
    std::string why;
    for (const char* model : {"kg", "dirac"}) {
        auto cfg = parse_config(line_config(model, kUniformE, 0.5, 0.0));
        cfg.steps = 2000;
        const auto a = run_scenario(cfg, quiet());
        const auto b = run_scenario(cfg, quiet());
        if (trajectory_csv(a.records) != trajectory_csv(b.records) ||
            encode_snapshot(a.final_state) != encode_snapshot(b.final_state)) {
            ok = false;
            why += std::string(" rerun differs (") + model + ")";
        }
        const std::string bytes = encode_snapshot(a.final_state, {{"neg_freq_fraction", "0"}});
        const auto back = decode_snapshot(bytes);
        bool exact = encode_snapshot(back.state, back.extra) == bytes && back.state.t == a.final_state.t;
        for (std::size_t c = 0; c < back.state.components.size(); ++c)
            exact = exact && std::memcmp(back.state.components[c].values().data(),
                                         a.final_state.components[c].values().data(),
                                         a.final_state.components[c].size() * sizeof(cplx)) == 0;
        if (!exact) {
            ok = false;
            why += std::string(" snapshot not bit-exact (") + model + ")";
        }
        cfg.steps = 1000;
        const auto first = run_scenario(cfg, quiet());
        RunOptions o = quiet();
        o.resume = decode_snapshot(encode_snapshot(first.final_state));
        const auto second = run_scenario(cfg, o);
        double diff = 0.0, scale = 0.0;
        for (std::size_t c = 0; c < a.final_state.components.size(); ++c)
            for (std::size_t i = 0; i < a.final_state.components[c].size(); ++i) {
                diff = std::max(diff, std::abs(second.final_state.components[c][i] - a.final_state.components[c][i]));
                scale = std::max(scale, std::abs(a.final_state.components[c][i]));
            }
        resume_err = std::max(resume_err, diff / scale);
    }
    ok = ok && resume_err < 1e-13;
    return {ok, "reruns bit-identical, snapshot bit-exact, resume rel. diff = " + fmt("%.2e", resume_err) + why};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"free-packet conservation", criterion1},
        {"uniform-E exact force", criterion2},
        {"magnetic field does no work", criterion3},
        {"centroid follows classical orbit", criterion4},
        {"first-order gradient correction", criterion5},
        {"current continuity convergence", criterion6},
        {"gauge invariance of currents", criterion7},
        {"Proca free-mode conservation", criterion8},
        {"Maxwell-side energy balance", criterion9},
        {"determinism, snapshot, resume", criterion10},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("[%s] criterion %2zu  %-34s %s  (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
