#include "ehrlab/scenario.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "ehrlab/errors.hpp"

namespace ehrlab {

namespace fs = std::filesystem;

namespace {

struct Sample {
    TrajectoryRecord record;
    ExchangeRates integral;
    ExchangeRates point;
    Vec3 corrected;
};

Sample sample_state(const MatterState& s, const ScenarioConfig& cfg, const SampledPotentials& pots, double negfrac) {
    const FourCurrent cur = four_current(s, pots);
    const StressEnergySlice se = stress_energy(s, pots, cfg.tensor);
    const EnergyMomentum em = energy_momentum(se);
    Sample out;
    TrajectoryRecord& r = out.record;
    r.t = s.t;
    r.Q = total_charge(cur);
    r.xi = centroid(cur, s.charge);
    r.En = em.En;
    r.P = em.P;
    r.neg_freq_fraction = negfrac;
    const Vec3 x0 = cfg.expansion_point == ExpansionPoint::Peak ? density_peak(cur) : r.xi;
    const VelocityField vf = velocity_field(cur, cfg.mask_floor);
    r.v = velocity_at(vf, r.xi);
    const Vec3 v0 = cfg.expansion_point == ExpansionPoint::Peak ? velocity_at(vf, x0) : r.v;
    r.d = dipole_moment(cur, x0);
    out.integral = exchange_rates_integral(cur, cfg.field, s.t);
    out.point = rates_point(x0, v0, cfg.field, s.t, s.charge, r.Q);
    out.corrected = out.point.force + first_order_correction(r.d, v0, cfg.field, x0, s.t);
    return out;
}

double field_b_max(const EMFieldConfig& f) {
    if (f.kind == FieldKind::UniformB) return norm(f.B0);
    if (f.kind == FieldKind::PlaneWave) return std::abs(f.amplitude);
    return 0.0;
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

RealField smooth_periodic_function(const GridPtr& grid, unsigned seed, int modes, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> wave(-3, 3);
    RealField chi(grid);
    for (int m = 0; m < modes; ++m) {
        Vec3 k;
        for (int a = 0; a < grid->dims(); ++a) k[a] = 2.0 * std::numbers::pi * wave(rng) / grid->extent(a);
        const double amp = amplitude * unit(rng);
        const double phase = std::numbers::pi * unit(rng);
        grid->for_each_site([&](std::size_t i, double x, double y, double z) {
            chi[i] += amp * std::cos(k[0] * x + k[1] * y + k[2] * z + phase);
        });
    }
    return chi;
}

unsigned worker_count() {
    unsigned n = 0;
    if (const char* env = std::getenv("EHRLAB_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
    if (cfg.model == Model::Proca)
        throw InvalidArgument("run: Proca states are free plane-wave snapshots without time evolution; use `check`");
    const GridPtr grid = make_grid(cfg.grid);
    check_commensurate(cfg.field, *grid);
    const double dt_max = max_stable_dt(*grid, cfg.field, cfg.mass, cfg.charge);
    if (!(cfg.dt < dt_max))
        throw InvalidArgument("run: dt = " + num(cfg.dt) + " exceeds the stability bound " + num(dt_max));
    const long dump_every = opt.dump_every > 0 ? opt.dump_every : cfg.dump_every;
    const fs::path out_dir = opt.out_dir ? *opt.out_dir : cfg.output_dir;

    MatterState state;
    double negfrac = 0.0;
    if (opt.resume) {
        state = opt.resume->state;
        state.validate();
        if (!(state.grid()->spec() == cfg.grid) || state.model != cfg.model || state.mass != cfg.mass ||
            state.charge != cfg.charge)
            throw InvalidArgument("run: resume snapshot does not match the config (grid, model, m or e)");
        auto it = opt.resume->extra.find("neg_freq_fraction");
        negfrac = it != opt.resume->extra.end() ? std::stod(it->second) : negative_frequency_fraction(state);
        // Reattach to this run's grid object so plans are shared.
        for (auto& c : state.components) c = ComplexField(grid, std::vector<cplx>(c.values().begin(), c.values().end()));
    } else {
        state = init_gaussian(cfg.model, grid, cfg.mass, cfg.charge, cfg.packet);
        negfrac = negative_frequency_fraction(state);
    }

    RunResult res;
    if (negfrac > 0.01)
        res.warnings.push_back("negative-frequency fraction " + num(negfrac) +
                               " exceeds 1%; single-particle reading is ambiguous");

    const Evolver evolver(cfg.field, grid, StepperOptions{cfg.propagator});
    std::vector<Sample> samples;
    MatterState last_good = state;
    const std::map<std::string, std::string> extra = {{"neg_freq_fraction", exact_decimal(negfrac)}};

    std::optional<RealField> rho_before;
    std::optional<std::pair<RealField, FourCurrent>> pending;  // (rho at n-1, current at n)
    Vec3 xi0;

    auto abort_run = [&](long n, const std::string& why) {
        res.aborted = true;
        std::ostringstream os;
        os << "aborted at step " << n << " (t = " << num(state.t) << "): " << why;
        res.abort_message = os.str();
    };

    for (long n = 0;; ++n) {
        if (n % dump_every == 0) {
            try {
                const auto pots = evolver.potentials(state.t);
                Sample smp = sample_state(state, cfg, *pots, negfrac);
                if (samples.empty()) xi0 = smp.record.xi;
                for (int a = 0; a < grid->dims(); ++a) {
                    const double L = grid->extent(a);
                    if (std::abs(minimum_image(smp.record.xi[a] - xi0[a], L)) > 0.25 * L)
                        throw NumericalError("wrap guard: centroid moved more than extent/4 on axis " +
                                             std::to_string(a));
                }
                if (rho_before) pending.emplace(*rho_before, four_current(state, *pots));
                samples.push_back(std::move(smp));
            } catch (const NumericalError& e) {
                last_good = state;
                abort_run(n, e.what());
                break;
            }
        }
        rho_before.reset();
        if (n == cfg.steps) break;
        if ((n + 1) % dump_every == 0) rho_before = four_current(state, *evolver.potentials(state.t)).rho;
        try {
            last_good = state;
            state = evolver.step(state, cfg.dt);
            res.steps_done = n + 1;
        } catch (const NumericalError& e) {
            abort_run(n, e.what());
            state = last_good;
            break;
        }
        if (pending) {
            const FourCurrent after = four_current(state, *evolver.potentials(state.t));
            res.continuity.push_back(continuity_residual(pending->first, after.rho, pending->second, cfg.dt));
            pending.reset();
        }
    }
    res.final_state = state;

    for (const auto& s : samples) res.records.push_back(s.record);

    const std::size_t need = static_cast<std::size_t>(std::max(cfg.stencil_order + 1, 5));
    if (samples.size() >= need) {
        const double h = dump_every * cfg.dt;
        std::vector<Vec3> P;
        std::vector<double> En;
        for (const auto& s : samples) {
            P.push_back(s.record.P);
            En.push_back(s.record.En);
        }
        std::vector<bool> flags;
        const auto dP = numeric_time_derivative(P, h, cfg.stencil_order, &flags);
        const auto dE = numeric_time_derivative(En, h, cfg.stencil_order);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            BalanceSample b;
            b.t = samples[i].record.t;
            b.dP_dt_numeric = dP[i];
            b.dEn_dt_numeric = dE.values[i];
            b.force_integral = samples[i].integral.force;
            b.power_integral = samples[i].integral.power;
            b.force_point = samples[i].point.force;
            b.power_point = samples[i].point.power;
            b.force_corrected = samples[i].corrected;
            b.endpoint = flags[i];
            res.samples.push_back(b);
        }
        const double fallback = norm(samples[0].record.P) + std::abs(samples[0].record.En);
        res.report = build_report(res.samples, cfg.tolerances, fallback);
    } else {
        res.warnings.push_back("too few samples (" + std::to_string(samples.size()) +
                               ") for the balance report; need " + std::to_string(need));
    }

    // Classical comparator from (xi(0), P(0)) or from the packet's centre and wavenumber.
    if (!res.records.empty()) {
        const double bmax = field_b_max(cfg.field);
        const Vec3 x0 = cfg.classical_init == ClassicalInit::Moments ? res.records[0].xi : cfg.packet.center;
        const Vec3 p0 = cfg.classical_init == ClassicalInit::Moments ? res.records[0].P : cfg.packet.momentum;
        if (cfg.field.kind == FieldKind::UniformB && bmax > 0.0) res.orbit_radius = norm(p0) / (std::abs(cfg.charge) * bmax);
        if (cfg.dt * std::abs(cfg.charge) * bmax / cfg.mass < 0.05) {
            const auto traj = classical_trajectory(x0, p0, cfg.mass, cfg.charge, cfg.field, cfg.dt,
                                                   cfg.dt * (res.records.size() - 1) * dump_every);
            res.max_classical_deviation = 0.0;
            for (std::size_t i = 0; i < res.records.size(); ++i) {
                const Vec3 xc = traj[i * dump_every].x;
                Vec3 diff;
                for (int a = 0; a < grid->dims(); ++a)
                    diff[a] = minimum_image(res.records[i].xi[a] - xc[a], grid->extent(a));
                res.classical.push_back(xc);
                res.max_classical_deviation = std::max(res.max_classical_deviation, norm(diff));
            }
        } else {
            res.warnings.push_back("classical comparator skipped: dt too large for the cyclotron scale");
        }
    }

    if (opt.write_outputs) {
        if (cfg.formats.csv) {
            if (!res.records.empty()) write_timeseries(out_dir / "trajectory.csv", res.records);
            if (!res.samples.empty()) write_file_atomic(out_dir / "residuals.csv", residuals_csv(res.samples));
        }
        if (cfg.formats.report) {
            write_file_atomic(out_dir / "report.txt", report_text(cfg, res));
            write_file_atomic(out_dir / "defaults.txt", defaults_text());
            write_file_atomic(out_dir / "config.ini", to_config_text(cfg));
        }
        if (cfg.formats.snapshot || res.aborted) write_snapshot(out_dir / "final.snap", res.final_state, extra);
        if (res.aborted) write_snapshot(out_dir / "last_good.snap", last_good, extra);
    }
    return res;
}

std::string report_text(const ScenarioConfig& cfg, const RunResult& r) {
    std::ostringstream o;
    o.precision(6);
    o << "model: " << to_string(cfg.model) << "  m = " << cfg.mass << "  e = " << cfg.charge << "\n";
    o << "field: " << to_string(cfg.field.kind) << "\n";
    o << "grid: " << cfg.grid.dims << "D, points";
    for (int a = 0; a < cfg.grid.dims; ++a) o << " " << cfg.grid.points[a];
    o << ", extent";
    for (int a = 0; a < cfg.grid.dims; ++a) o << " " << cfg.grid.extent[a];
    o << "\n";
    o << "dt = " << cfg.dt << "  steps done = " << r.steps_done << "  samples = " << r.records.size()
      << "  propagator = " << to_string(cfg.propagator) << "\n";
    o << "expansion point: " << to_string(cfg.expansion_point) << "  stencil order: " << cfg.stencil_order << "\n\n";
    if (r.aborted) o << "ABORTED: " << r.abort_message << "\n\n";
    if (!r.records.empty()) {
        const auto& a = r.records.front();
        const auto& b = r.records.back();
        o << "charge drift: " << std::abs(b.Q - a.Q) / std::abs(cfg.charge) << " (relative)\n";
        o << "negative-frequency fraction at start: " << a.neg_freq_fraction << "\n";
    }
    if (!r.continuity.empty()) {
        double mx = 0.0;
        for (double c : r.continuity) mx = std::max(mx, c);
        o << "continuity residual (max over dumps): " << mx << "\n";
    }
    if (r.max_classical_deviation >= 0.0) {
        o << "classical comparator: max |xi - x_cl| = " << r.max_classical_deviation;
        if (r.orbit_radius > 0.0) o << "  (orbit radius " << r.orbit_radius << ")";
        o << "\n";
    }
    if (r.report) {
        o << "\nbalance residuals (relative to max |rhs|; endpoints excluded)\n";
        o << "  name                 max          rms          tolerance    result\n";
        for (const ResidualNorm* n : {&r.report->energy_integral, &r.report->momentum_integral,
                                      &r.report->momentum_point, &r.report->momentum_corrected}) {
            char line[160];
            std::snprintf(line, sizeof line, "  %-20s %-12.4e %-12.4e %-12.4e %s\n", n->name.c_str(), n->max_rel,
                          n->rms_rel, n->tolerance, n->pass ? "pass" : "FAIL");
            o << line;
        }
        o << "overall: " << (r.report->all_pass ? "pass" : "FAIL") << "\n";
    }
    for (const auto& w : r.warnings) o << "warning: " << w << "\n";
    return o.str();
}

std::vector<ScenarioConfig> sweep_members(const ScenarioConfig& cfg) {
    if (cfg.sweep == SweepKind::None || cfg.sweep_levels < 2)
        throw InvalidArgument("sweep: config has no sweep (set [check] sweep = width-halving(N) or dt-halving(N))");
    std::vector<ScenarioConfig> out;
    for (int i = 0; i < cfg.sweep_levels; ++i) {
        ScenarioConfig c = cfg;
        c.sweep = SweepKind::None;
        c.sweep_levels = 0;
        const double f = std::ldexp(1.0, -i);
        if (cfg.sweep == SweepKind::WidthHalving) {
            c.packet.width = cfg.packet.width * f;
        } else {
            c.dt = cfg.dt * f;
            c.steps = cfg.steps << i;
            c.dump_every = cfg.dump_every << i;
        }
        out.push_back(c);
    }
    return out;
}

SweepResult run_sweep(const ScenarioConfig& cfg, const RunOptions& opt) {
    const auto members = sweep_members(cfg);
    const fs::path base = opt.out_dir ? *opt.out_dir : cfg.output_dir;
    std::vector<RunResult> results(members.size());
    std::vector<std::string> errors(members.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < members.size(); i = next++) {
            RunOptions o = opt;
            o.out_dir = base / ("level_" + std::to_string(i));
            o.resume.reset();
            if (opt.dump_every > 0 && cfg.sweep == SweepKind::DtHalving) o.dump_every = opt.dump_every << i;
            try {
                results[i] = run_scenario(members[i], o);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const unsigned n = std::min<unsigned>(worker_count(), static_cast<unsigned>(members.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw Error("sweep level " + std::to_string(i) + ": " + errors[i]);

    SweepResult s;
    s.kind = cfg.sweep;
    std::vector<double> x, ri, rc, rq;
    for (std::size_t i = 0; i < members.size(); ++i) {
        SweepRow row;
        row.parameter = cfg.sweep == SweepKind::WidthHalving ? members[i].packet.width[0] : members[i].dt;
        const RunResult& r = results[i];
        row.aborted = r.aborted;
        if (r.report) {
            row.res_integral = r.report->momentum_integral.max_rel;
            row.res_point = r.report->momentum_point.rms_rel;
            row.res_corrected = r.report->momentum_corrected.rms_rel;
        }
        for (double c : r.continuity) row.max_continuity = std::max(row.max_continuity, c);
        row.max_classical_deviation = r.max_classical_deviation;
        s.rows.push_back(row);
        x.push_back(row.parameter);
        ri.push_back(row.res_integral);
        rc.push_back(row.res_corrected);
        rq.push_back(row.max_continuity);
    }
    auto order = [&](const std::vector<double>& y) {
        for (double v : y)
            if (!(v > 0.0)) return std::nan("");
        return fitted_order(x, y);
    };
    s.order_corrected = order(rc);
    s.order_integral = order(ri);
    s.order_continuity = order(rq);

    if (opt.write_outputs) {
        std::ostringstream o;
        o << "sweep: " << to_string(cfg.sweep) << "(" << cfg.sweep_levels << ")\n";
        o << (cfg.sweep == SweepKind::WidthHalving ? "width" : "dt")
          << ",res_integral_max,res_point_rms,res_corrected_rms,continuity_max,classical_dev_max,aborted\n";
        for (const auto& r : s.rows)
            o << exact_decimal(r.parameter) << "," << exact_decimal(r.res_integral) << "," << exact_decimal(r.res_point)
              << "," << exact_decimal(r.res_corrected) << "," << exact_decimal(r.max_continuity) << ","
              << exact_decimal(r.max_classical_deviation) << "," << (r.aborted ? 1 : 0) << "\n";
        o << "fitted order (corrected residual): " << s.order_corrected << "\n";
        o << "fitted order (integral residual): " << s.order_integral << "\n";
        o << "fitted order (continuity residual): " << s.order_continuity << "\n";
        write_file_atomic(base / "sweep_report.txt", o.str());
    }
    return s;
}

std::vector<CheckLine> run_checks(const ScenarioConfig& cfg) {
    std::vector<CheckLine> out;
    auto add = [&](std::string name, bool pass, std::string detail) {
        out.push_back({std::move(name), pass, std::move(detail)});
    };
    const GridPtr grid = make_grid(cfg.grid);

    if (cfg.field.kind != FieldKind::LinearGradientE) {
        const PoyntingResidual pr = poynting_residual(cfg.field, grid, 0.0, 1e-3);
        const double a2v = std::max(cfg.field.amplitude * cfg.field.amplitude, 1.0) * grid->volume();
        add("maxwell_energy_balance", std::abs(pr.energy) < 1e-10 * a2v, "residual " + num(pr.energy));
    }

    if (cfg.model == Model::Proca) {
        const double w = std::sqrt(dot(cfg.packet.momentum, cfg.packet.momentum) + cfg.mass * cfg.mass);
        // Transverse spatial polarisation orthogonal to k, eps^0 = 0.
        Vec3 pol{0.0, 0.0, 1.0};
        const Vec3 k = cfg.packet.momentum;
        if (norm(k) > 0.0 && std::abs(dot(k, pol)) > 1e-12 * norm(k)) pol = Vec3{0.0, 1.0, 0.0};
        if (norm(k) > 0.0 && std::abs(dot(k, pol)) > 1e-12 * norm(k)) pol = cross(k, Vec3{1.0, 0.0, 0.0}) / norm(k);
        const ProcaResiduals pr = proca_conservation_residuals(grid, cfg.mass, cfg.charge, k, {0.0, pol});
        add("proca_current_conservation", pr.current < 1e-8, "max residual " + num(pr.current) + " (w = " + num(w) + ")");
        add("proca_energy_conservation", pr.energy < 1e-8, "max residual " + num(pr.energy));
        return out;
    }

    const double dt_max = max_stable_dt(*grid, cfg.field, cfg.mass, cfg.charge);
    add("dt_stability_bound", cfg.dt < dt_max, "dt " + num(cfg.dt) + " vs bound " + num(dt_max));

    const MatterState s0 = init_gaussian(cfg.model, grid, cfg.mass, cfg.charge, cfg.packet);
    const SampledPotentials pots = sample_potentials(cfg.field, grid, 0.0);
    const FourCurrent cur = four_current(s0, pots);
    const double Q = total_charge(cur);
    add("charge_normalisation", std::abs(Q - cfg.charge) < 1e-10 * std::abs(cfg.charge), "Q = " + num(Q));

    const double nf = negative_frequency_fraction(s0);
    add("negative_frequency_fraction", nf <= 0.01, num(nf));

    try {
        const Vec3 xi = centroid(cur, cfg.charge);
        const Vec3 v = velocity_at(velocity_field(cur, cfg.mask_floor), xi);
        add("centroid_velocity", std::isfinite(norm(v)) && norm(v) < 1.0, "|v(xi)| = " + num(norm(v)));
    } catch (const NumericalError& e) {
        add("centroid_velocity", false, e.what());
    }

    // Amplitude 0.5/|e| keeps exp(-i e chi) psi resolved on the lattice.
    const RealField chi = smooth_periodic_function(grid, 12345u, 4, 0.5 / std::abs(cfg.charge));
    const FourCurrent cur2 = four_current(gauge_transform(s0, chi), gauge_shift(pots, chi));
    double diff = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
        diff = std::max(diff, std::abs(cur2.rho[i] - cur.rho[i]));
        for (int a = 0; a < 3; ++a) diff = std::max(diff, std::abs(cur2.j[a][i] - cur.j[a][i]));
    }
    add("gauge_invariance_of_current", diff < 1e-10, "max |delta j^mu| = " + num(diff));

    if (dt_max > cfg.dt) {
        const Evolver ev(cfg.field, grid, StepperOptions{cfg.propagator});
        const MatterState s1 = ev.step(s0, cfg.dt);
        const MatterState s2 = ev.step(s1, cfg.dt);
        const double c = continuity_residual(cur.rho, four_current(s2, *ev.potentials(s2.t)).rho,
                                             four_current(s1, *ev.potentials(s1.t)), cfg.dt);
        add("continuity_one_step", c < cfg.tolerances.momentum_integral, "relative residual " + num(c));
    }

    if (cfg.field.kind == FieldKind::UniformE || cfg.field.kind == FieldKind::UniformB || cfg.field.kind == FieldKind::Zero) {
        const ExchangeRates ri = exchange_rates_integral(cur, cfg.field, 0.0);
        const Vec3 xi = centroid(cur, cfg.charge);
        const Vec3 v = velocity_at(velocity_field(cur, cfg.mask_floor), xi);
        // Point form with the integral's own mean velocity, so only field uniformity is tested.
        const Vec3 vbar = Vec3{integrate(cur.j[0]), integrate(cur.j[1]), integrate(cur.j[2])} / Q;
        const ExchangeRates rp = rates_point(xi, vbar, cfg.field, 0.0, cfg.charge, Q);
        const double d = norm(ri.force - rp.force);
        const double scale = std::max(norm(ri.force), 1e-300);
        add("uniform_field_point_equals_integral", d <= 1e-12 * std::max(scale, std::abs(cfg.charge)),
            "|force_point - force_integral| = " + num(d) + ", |v(xi)| = " + num(norm(v)));
    }
    return out;
}

}  // namespace ehrlab
