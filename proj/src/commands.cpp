#include "iontrap/commands.hpp"

#include "iontrap/constants.hpp"
#include "iontrap/dataset_io.hpp"
#include "iontrap/errors.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

namespace iontrap::cli {

namespace c = constants;
using nlohmann::json;

namespace {

std::string display(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void line(std::ostringstream& out, const std::string& key, const std::string& value) {
    out << key << " = " << value << '\n';
}

}  // namespace

std::string derive_report(const ExperimentConfig& config) {
    const auto& s = config.scenario;
    const auto d = derive_dipole_trap(s.beam, s.species);
    const auto mathieu = mathieu_params(s.trap, 1.0);
    std::ostringstream out;
    line(out, "species", s.species.label);
    line(out, "power_w", display(s.beam.power));
    line(out, "waist_um", display(s.beam.waist * 1e6));
    line(out, "detuning_2pi_ghz", display(s.beam.detuning / c::two_pi / 1e9));
    line(out, "saturation_intensity_w_m2", display(d.saturation_intensity));
    line(out, "peak_intensity_w_m2", display(d.peak_intensity));
    line(out, "depth_j", display(d.depth));
    line(out, "depth_kb_mk", display(d.depth / c::boltzmann * 1e3));
    if (s.beam.power > 0.0) {
        line(out, "omega_radial_2pi_khz", display(d.omega_radial / c::two_pi / 1e3));
        line(out, "omega_axial_2pi_khz", display(d.omega_axial / c::two_pi / 1e3));
    } else {
        line(out, "omega_radial_2pi_khz", "undefined");
        line(out, "omega_axial_2pi_khz", "undefined");
    }
    line(out, "scattering_rate_per_ms", display(d.scattering_rate / 1e3));
    line(out, "recoil_energy_kb_uk", display(d.recoil_energy / c::boltzmann * 1e6));
    line(out, "two_recoil_kb_uk", display(2.0 * d.recoil_energy / c::boltzmann * 1e6));
    line(out, "max_force_2u0_over_w0_n", display(d.max_force.two_depth_over_waist));
    line(out, "max_force_exact_n", display(d.max_force.exact));
    line(out, "recoil_lifetime_ms", d.recoil_lifetime ? display(*d.recoil_lifetime * 1e3) : "undefined");
    line(out, "rf_depth_kb_k", display(rf_trap_depth_estimate(s.trap, s.species) / c::boltzmann));
    line(out, "mathieu_q_x", display(mathieu[0].q));
    line(out, "mathieu_a_z", display(mathieu[2].a));
    if (s.dc_barrier_distance) {
        const DCField dc(s.trap.omega_z, s.species.mass, s.dc_barrier_distance);
        line(out, "dc_well_depth_kb_k", display(dc.well_depth() / c::boltzmann));
    }
    return out.str();
}

std::string derive_summary(const ExperimentConfig& config) {
    const auto& s = config.scenario;
    const auto d = derive_dipole_trap(s.beam, s.species);
    json j;
    j["species"] = s.species.label;
    j["power_w"] = s.beam.power;
    j["saturation_intensity_w_m2"] = d.saturation_intensity;
    j["peak_intensity_w_m2"] = d.peak_intensity;
    j["depth_j"] = d.depth;
    j["omega_radial_rad_s"] = d.omega_radial;
    j["omega_axial_rad_s"] = d.omega_axial;
    j["scattering_rate_per_s"] = d.scattering_rate;
    j["recoil_energy_j"] = d.recoil_energy;
    j["max_force_2u0_over_w0_n"] = d.max_force.two_depth_over_waist;
    j["max_force_exact_n"] = d.max_force.exact;
    j["recoil_lifetime_s"] = d.recoil_lifetime ? json(*d.recoil_lifetime) : json(nullptr);
    j["rf_depth_j"] = rf_trap_depth_estimate(s.trap, s.species);
    return j.dump(2) + "\n";
}

std::vector<double> default_sweep_values(Sweep sweep) {
    if (sweep == Sweep::t_dipole) {
        return {0.1e-3, 0.25e-3, 0.5e-3, 0.75e-3, 1e-3, 1.5e-3, 2e-3, 3e-3};
    }
    return {0.0, 0.025, 0.05, 0.1, 0.15, 0.19, 0.23, 0.275};
}

SurvivalDataset simulate_sweep(const ExperimentConfig& config, Sweep sweep, const std::vector<double>& values,
                               std::ostream* progress) {
    if (values.empty()) {
        throw InputError("sweep needs at least one value");
    }
    SurvivalDataset ds;
    ds.label = sweep == Sweep::t_dipole ? "t_dipole_sweep" : "p_trap_sweep";
    for (std::size_t i = 0; i < values.size(); ++i) {
        Scenario scenario = config.scenario;
        if (sweep == Sweep::t_dipole) {
            scenario.timeline.hold = values[i];
        } else {
            scenario.beam.power = values[i];
        }
        scenario.sim.seed = config.scenario.sim.seed + 0x9E3779B97F4A7C15ULL * i;
        const auto est = run_ensemble(config.n_trajectories, scenario);
        ds.rows.push_back({scenario.timeline.hold, scenario.beam.power, est.n_success, est.n_total});
        if (progress != nullptr) {
            *progress << "point " << i + 1 << "/" << values.size() << ": t_dipole_s=" << display(scenario.timeline.hold)
                      << " p_trap_w=" << display(scenario.beam.power) << " p_hat=" << display(est.p_hat) << " ["
                      << display(est.lower) << ", " << display(est.upper) << "]\n";
        }
    }
    return ds;
}

std::string format_trajectory(const std::vector<IonState>& samples) {
    std::string out = "t_s,x_m,y_m,z_m,vx_m_s,vy_m_s,vz_m_s\n";
    for (const auto& s : samples) {
        out += format_double(s.time) + ',' + format_double(s.position.x) + ',' + format_double(s.position.y) + ',' +
               format_double(s.position.z) + ',' + format_double(s.velocity.x) + ',' + format_double(s.velocity.y) +
               ',' + format_double(s.velocity.z) + '\n';
    }
    return out;
}

std::string fit_report(const FitResult& fit) {
    std::ostringstream out;
    const auto& p = fit.params;
    const auto& u = fit.uncertainty;
    line(out, "converged", fit.converged ? "true" : "false");
    line(out, "degenerate_flat", fit.degenerate_flat ? "true" : "false");
    line(out, "design_points", std::to_string(fit.design_points));
    line(out, "residual", display(fit.residual));
    line(out, "eps_over_gamma_s", display(p.eps_over_gamma) + " +- " + display(u.eps_over_gamma));
    line(out, "T0_over_gamma_w_s", display(p.T0_over_gamma) + " +- " + display(u.T0_over_gamma));
    line(out, "omega_per_sqrtP", display(p.omega_per_sqrtP) + " +- " + display(u.omega_per_sqrtP));
    line(out, "C0", display(p.C0) + " +- " + display(u.C0));
    line(out, "lifetime_power_w", display(fit.lifetime_power));
    line(out, "lifetime_ms", fit.lifetime ? display(*fit.lifetime * 1e3) : "undefined");
    return out.str();
}

std::string fit_summary(const FitResult& fit) {
    const auto& p = fit.params;
    const auto& u = fit.uncertainty;
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j;
    j["converged"] = fit.converged;
    j["degenerate_flat"] = fit.degenerate_flat;
    j["design_points"] = fit.design_points;
    j["residual"] = num(fit.residual);
    j["params"] = {{"eps_over_gamma_s", p.eps_over_gamma},
                   {"T0_over_gamma_w_s", p.T0_over_gamma},
                   {"omega_per_sqrtP", p.omega_per_sqrtP},
                   {"C0", p.C0}};
    j["uncertainty"] = {{"eps_over_gamma_s", num(u.eps_over_gamma)},
                        {"T0_over_gamma_w_s", num(u.T0_over_gamma)},
                        {"omega_per_sqrtP", num(u.omega_per_sqrtP)},
                        {"C0", num(u.C0)}};
    j["lifetime_power_w"] = fit.lifetime_power;
    j["lifetime_s"] = fit.lifetime ? json(*fit.lifetime) : json(nullptr);
    return j.dump(2) + "\n";
}

std::string fit_curve(const FitResult& fit, std::span<const SurvivalDataset> datasets, int points) {
    std::set<double> powers_of_time_sweeps;
    std::set<double> times_of_power_sweeps;
    std::map<double, std::set<double>> times_by_power;
    std::map<double, std::set<double>> powers_by_time;
    double max_t = 0.0;
    double max_p = 0.0;
    for (const auto& ds : datasets) {
        for (const auto& r : ds.rows) {
            times_by_power[r.p_trap].insert(r.t_dipole);
            powers_by_time[r.t_dipole].insert(r.p_trap);
            max_t = std::max(max_t, r.t_dipole);
            max_p = std::max(max_p, r.p_trap);
        }
    }
    for (const auto& [p, ts] : times_by_power) {
        if (ts.size() >= 2) {
            powers_of_time_sweeps.insert(p);
        }
    }
    for (const auto& [t, ps] : powers_by_time) {
        if (ps.size() >= 2) {
            times_of_power_sweeps.insert(t);
        }
    }
    std::string out = "t_dipole_s,p_trap_w,p_model\n";
    for (double p : powers_of_time_sweeps) {
        for (int i = 0; i <= points; ++i) {
            const double t = 1.2 * max_t * i / points;
            out += format_double(t) + ',' + format_double(p) + ',' +
                   format_double(survival_probability(t, p, fit.params)) + '\n';
        }
    }
    for (double t : times_of_power_sweeps) {
        for (int i = 0; i <= points; ++i) {
            const double p = 1.2 * max_p * i / points;
            out += format_double(t) + ',' + format_double(p) + ',' +
                   format_double(survival_probability(t, p, fit.params)) + '\n';
        }
    }
    return out;
}

std::vector<RampRecord> ramp_records(const TrapConfiguration& trap, int fractions) {
    if (fractions < 2) {
        throw InputError("ramp scan needs at least two fractions");
    }
    std::vector<RampRecord> out;
    for (int i = 0; i < fractions; ++i) {
        const double f = 1.0 - static_cast<double>(i) / (fractions - 1);
        for (const auto& point : mathieu_params(trap, f)) {
            out.push_back({f, point, is_stable(point)});
        }
    }
    return out;
}

std::string format_ramp_records(const std::vector<RampRecord>& records) {
    std::string out = "fraction,axis,a,q,stable,margin\n";
    for (const auto& r : records) {
        out += format_double(r.fraction) + ',' + std::string(axis_name(r.point.axis)) + ',' +
               format_double(r.point.a) + ',' + format_double(r.point.q) + ',' + (r.floquet.stable ? "1" : "0") + ',' +
               format_double(r.floquet.margin) + '\n';
    }
    return out;
}

std::string format_raster(const std::vector<StabilityRecord>& records) {
    std::string out = "a,q,stable,margin\n";
    for (const auto& r : records) {
        out += format_double(r.a) + ',' + format_double(r.q) + ',' + (r.stable ? "1" : "0") + ',' +
               format_double(r.margin) + '\n';
    }
    return out;
}

MarkovModelParams reference_params() {
    return {.eps_over_gamma = 5e-3, .T0_over_gamma = 1e-4, .omega_per_sqrtP = 2.2e4, .C0 = 0.9};
}

std::vector<DesignPoint> reference_design(std::int64_t n_total) {
    return {
        {0.1e-3, 0.19, n_total}, {0.5e-3, 0.19, n_total}, {1e-3, 0.19, n_total},  {2e-3, 0.19, n_total},
        {3e-3, 0.19, n_total},   {0.5e-3, 0.05, n_total}, {0.5e-3, 0.1, n_total}, {0.5e-3, 0.275, n_total},
    };
}

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    int jobs = 0;
};

ExperimentConfig resolve_config(const GlobalOptions& g) {
    ExperimentConfig cfg = g.config_path.empty() ? ExperimentConfig::defaults() : load_config(g.config_path);
    if (g.seed) {
        cfg.scenario.sim.seed = *g.seed;
    }
    return cfg;
}

void emit(const GlobalOptions& g, const std::string& data) {
    if (g.out.empty()) {
        std::cout << data;
    } else {
        write_text_file(g.out, data);
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) {
                throw InputError("");
            }
        } catch (const std::exception&) {
            throw InputError("cannot parse value '" + item + "' in list");
        }
    }
    return out;
}

std::vector<DesignPoint> parse_design(const std::string& text) {
    std::vector<DesignPoint> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        std::replace(item.begin(), item.end(), ':', ',');
        const auto v = parse_list(item);
        if (v.size() != 3) {
            throw InputError("design point '" + item + "' must be t_dipole:p_trap:n_total");
        }
        out.push_back({v[0], v[1], static_cast<std::int64_t>(v[2])});
    }
    return out;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Optical ion trap handoff simulation and heating-model fitting"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--config", g.config_path, "Experiment config file (INI)");
    app.add_option("--seed", g.seed, "Master RNG seed (overrides sim.seed)");
    app.add_option("--out", g.out, "Output file (or prefix for fit); default stdout");
    app.add_option("--jobs", g.jobs, "OpenMP threads (0 = runtime default)");

    auto* derive = app.add_subcommand("derive", "Closed-form dipole and RF trap quantities");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo survival sweep");
    std::string sweep_name = "t_dipole";
    std::string sweep_values;
    std::optional<std::int64_t> n_override;
    simulate->add_option("--sweep", sweep_name, "t_dipole or p_trap")->check(CLI::IsMember({"t_dipole", "p_trap"}));
    simulate->add_option("--values", sweep_values, "Comma-separated grid in SI units");
    simulate->add_option("--trajectories", n_override, "Trajectories per grid point");
    std::string dump_path;
    int dump_stride = 20;
    simulate->add_option("--dump", dump_path, "Write trajectory 0 of the first grid point to this file");
    simulate->add_option("--dump-stride", dump_stride, "Integration steps between dumped states");
    bool write_effective = false;
    simulate->add_flag("--print-config", write_effective, "Print the effective config to stderr");

    auto* fit = app.add_subcommand("fit", "Joint fit of the Markovian heating model");
    std::vector<std::string> fit_files;
    int restarts = 12;
    fit->add_option("datasets", fit_files, "Dataset CSV files")->required();
    fit->add_option("--restarts", restarts, "Simplex restarts");

    auto* stability = app.add_subcommand("stability", "Mathieu stability of the RF ramp-down");
    std::string mode = "ramp";
    int fractions = 101;
    double a_min = 0.0, a_max = 0.0, q_min = 0.0, q_max = 1.0;
    int a_n = 1, q_n = 101;
    stability->add_option("--mode", mode, "ramp or raster")->check(CLI::IsMember({"ramp", "raster"}));
    stability->add_option("--fractions", fractions, "Ramp grid points from 1 down to 0");
    stability->add_option("--a-min", a_min);
    stability->add_option("--a-max", a_max);
    stability->add_option("--a-n", a_n);
    stability->add_option("--q-min", q_min);
    stability->add_option("--q-max", q_max);
    stability->add_option("--q-n", q_n);

    auto* synth = app.add_subcommand("synth", "Synthetic survival data from the heating model");
    MarkovModelParams params = reference_params();
    std::string design_text;
    std::int64_t n_total = 200;
    synth->add_option("--eps", params.eps_over_gamma, "eps/gamma in s");
    synth->add_option("--t0", params.T0_over_gamma, "T0/gamma in W s");
    synth->add_option("--omega", params.omega_per_sqrtP, "Omega_M/sqrt(P) in 1/(s sqrt(W))");
    synth->add_option("--c0", params.C0, "Initialization pre-factor");
    synth->add_option("--design", design_text, "t:p:n;t:p:n;... (default: 8-point reference design)");
    synth->add_option("--n-total", n_total, "Attempts per point for the reference design");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : input_error;
    }

    try {
        if (g.jobs > 0) {
            omp_set_num_threads(g.jobs);
        }
        if (*derive) {
            const auto cfg = resolve_config(g);
            std::cout << derive_report(cfg);
            if (!g.out.empty()) {
                write_text_file(g.out, derive_summary(cfg));
            }
        } else if (*simulate) {
            auto cfg = resolve_config(g);
            if (n_override) {
                cfg.n_trajectories = *n_override;
                cfg.finalize();
            }
            if (write_effective) {
                std::cerr << write_config(cfg);
            }
            const Sweep sweep = sweep_name == "t_dipole" ? Sweep::t_dipole : Sweep::p_trap;
            const auto values = sweep_values.empty() ? default_sweep_values(sweep) : parse_list(sweep_values);
            const auto ds = simulate_sweep(cfg, sweep, values, &std::cerr);
            emit(g, format_dataset(ds));
            if (!dump_path.empty()) {
                Scenario first = cfg.scenario;
                (sweep == Sweep::t_dipole ? first.timeline.hold : first.beam.power) = values.front();
                write_text_file(dump_path, format_trajectory(trace_trajectory(0, first, dump_stride).samples));
            }
        } else if (*fit) {
            std::vector<SurvivalDataset> datasets;
            for (const auto& f : fit_files) {
                datasets.push_back(read_dataset(f));
            }
            FitOptions options;
            options.restarts = restarts;
            options.seed = g.seed.value_or(1);
            const auto result = fit_joint(datasets, options);
            std::cout << fit_report(result);
            if (!g.out.empty()) {
                write_text_file(g.out + ".report.txt", fit_report(result));
                write_text_file(g.out + ".summary.json", fit_summary(result));
                write_text_file(g.out + ".curve.csv", fit_curve(result, datasets));
            }
            if (!result.converged) {
                std::cerr << "fit did not converge\n";
                return not_converged;
            }
        } else if (*stability) {
            const auto cfg = resolve_config(g);
            if (mode == "ramp") {
                const auto scan = ramp_scan(cfg.scenario.trap);
                emit(g, format_ramp_records(ramp_records(cfg.scenario.trap, fractions)));
                std::cout << "first_unstable_fraction = "
                          << (scan.first_unstable_fraction ? format_double(*scan.first_unstable_fraction) : "none")
                          << '\n'
                          << "pseudopotential_fraction = "
                          << (scan.pseudopotential_fraction ? format_double(*scan.pseudopotential_fraction) : "none")
                          << '\n';
            } else {
                if (a_n < 1 || q_n < 1) {
                    throw InputError("raster needs at least one a and one q value");
                }
                auto grid = [](double lo, double hi, int n) {
                    std::vector<double> v(n);
                    for (int i = 0; i < n; ++i) {
                        v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
                    }
                    return v;
                };
                emit(g, format_raster(stability_raster(grid(a_min, a_max, a_n), grid(q_min, q_max, q_n))));
            }
        } else if (*synth) {
            const auto design = design_text.empty() ? reference_design(n_total) : parse_design(design_text);
            Rng rng = make_stream(g.seed.value_or(1), 0);
            emit(g, format_dataset(generate_synthetic(params, design, rng)));
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return input_error;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return input_error;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return io_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return not_converged;
    }
    return ok;
}

}  // namespace iontrap::cli
