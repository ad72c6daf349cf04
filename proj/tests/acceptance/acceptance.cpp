// Acceptance run: one PASS/FAIL line per criterion, details indented underneath.
// Exit status is the number of failed criteria.

#include "iontrap/commands.hpp"
#include "iontrap/config.hpp"
#include "iontrap/constants.hpp"
#include "iontrap/core_physics.hpp"
#include "iontrap/dataset_io.hpp"
#include "iontrap/dynamics.hpp"
#include "iontrap/heating_model.hpp"
#include "iontrap/potentials.hpp"
#include "iontrap/stability.hpp"

#include "json.hpp"
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

using namespace iontrap;
namespace fs = std::filesystem;

namespace {

constexpr double kB = constants::boltzmann;
constexpr double two_pi = constants::two_pi;
const fs::path kSource = IONTRAP_SOURCE_DIR;

class Criterion {
public:
    explicit Criterion(std::string title) : title_(std::move(title)) {}

    void check(const std::string& what, bool ok, const std::string& detail = {}) {
        detail_ += std::string("    ") + (ok ? "ok   " : "FAIL ") + what;
        if (!detail.empty()) {
            detail_ += ": " + detail;
        }
        detail_ += "\n";
        passed_ = passed_ && ok;
    }

    // |value / target - 1| <= rel
    void relative(const std::string& what, double value, double target, double rel, const std::string& unit) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%.4g %s vs %.4g %s +-%.0f%%", value, unit.c_str(), target, unit.c_str(),
                      rel * 100);
        check(what, std::abs(value - target) <= rel * std::abs(target), buf);
    }

    bool report(double seconds) const {
        std::printf("%s  %s (%.1f s)\n%s", passed_ ? "PASS" : "FAIL", title_.c_str(), seconds, detail_.c_str());
        std::fflush(stdout);
        return passed_;
    }

private:
    std::string title_;
    std::string detail_;
    bool passed_ = true;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[200];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("iontrap_acceptance_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(IONTRAP_CLI) + " " + args + " > /dev/null 2> " + (scratch() / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void criterion_derived(Criterion& c) {
    const auto setup = load_config(kSource / "configs/fig1.cfg").scenario;
    const auto d1 = derive_dipole_trap(setup.beam, setup.species);
    c.relative("setup U0", d1.depth / kB * 1e3, 51.0, 0.10, "mK");
    c.relative("setup radial trap frequency", d1.omega_radial / two_pi * 1e-3, 192.0, 0.10, "kHz");
    c.relative("setup axial trap frequency", d1.omega_axial / two_pi * 1e-3, 2.0, 0.25, "kHz");
    c.relative("setup F_rad (2 U0 / w0)", d1.max_force.two_depth_over_waist, 2e-19, 0.15, "N");

    const auto scan = load_config(kSource / "configs/fig2.cfg").scenario;
    const auto d2 = derive_dipole_trap(scan.beam, scan.species);
    c.relative("lifetime-scan U0", d2.depth / kB * 1e3, 38.0, 0.10, "mK");
    c.relative("lifetime-scan radial trap frequency", d2.omega_radial / two_pi * 1e-3, 165.0, 0.10, "kHz");
    c.relative("lifetime-scan scattering rate", d2.scattering_rate * 1e-3, 860.0, 0.20, "1/ms");
    c.relative("two recoil energies", 2 * d2.recoil_energy / kB * 1e6, 10.0, 0.10, "uK");
    c.check("recoil lifetime defined", d2.recoil_lifetime.has_value());
    if (d2.recoil_lifetime) {
        c.relative("recoil lifetime U0 / (Gamma_s 2 E_r)", *d2.recoil_lifetime * 1e3, 4.0, 0.25, "ms");
    }
    const double rf = rf_trap_depth_estimate(setup.trap, setup.species) / kB;
    c.check("RF depth within a factor of 3 of 1e4 K", rf >= 1e4 / 3 && rf <= 3e4, fmt("%.4g K", rf));
}

void criterion_stability(Criterion& c) {
    const double q = stability_boundary_q(0.0, 0.5, 0.95, 1e-5);
    c.check("Floquet boundary at a = 0", std::abs(q - 0.908) <= 0.002, fmt("q = %.5f vs 0.908 +- 0.002", q));

    const auto trap = ExperimentConfig::defaults().scenario.trap;
    const auto scan = ramp_scan(trap);
    c.check("instability before zero RF amplitude", scan.first_unstable_fraction && *scan.first_unstable_fraction > 0.0,
            scan.first_unstable_fraction ? fmt("first unstable fraction %.5f", *scan.first_unstable_fraction)
                                         : "none");
    c.check("pseudopotential fraction defined", scan.pseudopotential_fraction.has_value());
    if (scan.pseudopotential_fraction) {
        const double f = *scan.pseudopotential_fraction;
        c.check("f_pp", std::abs(f - 0.035) <= 0.005, fmt("%.5f vs 0.035 +- 0.005", f));
    }
}

// Time after hold start at which half of the ensemble has escaped. Survivors of the full
// hold count as never escaping.
double median_escape(const Scenario& s, std::int64_t n) {
    const auto results = ensemble_outcomes(n, s);
    std::vector<double> times;
    for (const auto& r : results) {
        if (r.outcome == Outcome::survived || !r.escape_time) {
            times.push_back(std::numeric_limits<double>::infinity());
        } else {
            times.push_back(std::max(0.0, *r.escape_time - s.timeline.hold_start()));
        }
    }
    std::sort(times.begin(), times.end());
    return 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

void criterion_dynamics(Criterion& c) {
    const auto scan = load_config(kSource / "configs/fig2.cfg").scenario;
    const auto mg = scan.species;

    {
        const double w = trap_frequencies(scan.beam, mg).radial;
        const auto field = compose({HarmonicWell{{w, w, w}, mg.mass, {}}});
        IonState s;
        s.position = {0, 1e-6, 0};
        s.velocity = {0.3, 0, -0.2};
        const double period = two_pi / w;
        const int per_period = 128;
        std::vector<double> e;
        propagate(s, field, mg.mass, 1000 * period, period / per_period, [&](const IonState& st) {
            e.push_back(0.5 * mg.mass * norm2(st.velocity) + field.value(st.position, st.time));
        });
        const double first = std::accumulate(e.begin(), e.begin() + per_period, 0.0) / per_period;
        const double last = std::accumulate(e.end() - per_period, e.end(), 0.0) / per_period;
        const double drift = std::abs(last - first) / std::abs(first);
        c.check("energy drift over 1000 periods", drift < 1e-6, fmt("%.3g < 1e-6", drift));
    }

    {
        const auto trap = scan.trap;
        const auto field = compose({RFField(trap, mg.mass, RfMode::full_drive)});
        IonState s;
        s.position = {1e-6, 0, 0};
        std::vector<double> crossings;
        double prev = s.position.x;
        propagate(s, field, mg.mass, 30 * two_pi / trap.omega_x, two_pi / trap.rf_drive / 40, [&](const IonState& st) {
            if (prev > 0 && st.position.x <= 0) {
                crossings.push_back(st.time);
            }
            prev = st.position.x;
        });
        if (crossings.size() < 2) {
            c.check("full-drive secular frequency", false, "no oscillation");
        } else {
            const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
            c.relative("full-drive secular frequency", 1e-3 / period, trap.omega_x / two_pi * 1e-3, 0.05, "kHz");
        }
    }

    {
        auto s = scan;
        s.timeline.hold = 0.5e-3;
        const auto results = ensemble_outcomes(1000, s);
        double rate = 0.0;
        int counted = 0;
        for (const auto& r : results) {
            if (r.hold_start && r.hold_end) {
                rate += (r.hold_end->energy - r.hold_start->energy) / (r.hold_end->time - r.hold_start->time);
                ++counted;
            }
        }
        const double expected = scattering_rate(s.beam, mg) * 2 * recoil_energy(mg);
        c.check("heating rate sample", counted > 900, fmt("%.0f of 1000 trajectories held", counted));
        c.relative("heating rate", rate / counted / kB * 1e3, expected / kB * 1e3, 0.10, "mK/s");
    }

    const double tau = recoil_lifetime_estimate(scan.beam, mg);
    {
        auto s = scan;
        s.timeline.hold = 12e-3;
        s.trap.stray_force = {};
        s.sim.initial_temperature = 0.0;
        const double half = median_escape(s, 1000);
        c.check("ideal half-life within a factor of 2 of U0 / (Gamma_s 2 E_r)", half >= tau / 2 && half <= 2 * tau,
                fmt("%.3g ms vs %.3g ms", half * 1e3, tau * 1e3));
        c.check("ideal half-life within a factor of 2 of 4 ms", half >= 2e-3 && half <= 8e-3, fmt("%.3g ms", half * 1e3));
    }
    {
        auto s = scan;
        s.timeline.hold = 12e-3;
        const double half = median_escape(s, 1000);
        c.check("half-life with 1e-20 N stray force and 2 mK start in [tau/2, tau]", half >= tau / 2 && half <= tau,
                fmt("%.3g ms, tau = %.3g ms", half * 1e3, tau * 1e3));
    }
}

double trapezoid_exponent(double t, double p, const MarkovModelParams& m, int points) {
    const double a = m.eps_over_gamma;
    const double b = m.T0_over_gamma / p;
    const double h = t / (points - 1);
    double sum = 0.0;
    for (int i = 0; i < points; ++i) {
        sum += ((i == 0 || i == points - 1) ? 0.5 : 1.0) * std::exp(-a / (b + i * h));
    }
    return m.omega_per_sqrtP * std::sqrt(p) * sum * h;
}

void criterion_heating_model(Criterion& c) {
    const auto ref = cli::reference_params();
    double worst = 0.0;
    for (double t : {0.3e-3, 1e-3, 3e-3}) {
        for (double p : {0.05, 0.19, 0.275}) {
            const double quad = escape_exponent(t, p, ref);
            const double oracle = trapezoid_exponent(t, p, ref, 1'000'000);
            worst = std::max(worst, std::abs(quad - oracle) / oracle);
        }
    }
    c.check("quadrature vs dense trapezoid", worst < 1e-6, fmt("max relative error %.3g < 1e-6", worst));

    Rng rng = make_stream(1, 0);
    const auto data = generate_synthetic(ref, cli::reference_design(200), rng);
    const auto fit = fit_joint(std::span(&data, 1));
    const auto& p = fit.params;
    c.check("synthetic refit converged", fit.converged);
    c.relative("refit eps/gamma", p.eps_over_gamma, ref.eps_over_gamma, 0.20, "s");
    c.relative("refit T0/gamma", p.T0_over_gamma, ref.T0_over_gamma, 0.20, "W s");
    c.check("refit C0", std::abs(p.C0 - ref.C0) <= 0.05, fmt("%.4f vs %.2f +- 0.05", p.C0, ref.C0));

    int violations = 0;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            for (int k = 0; k < 10; ++k) {
                const MarkovModelParams m{1e-4 * std::pow(10.0, 0.3 * i), 1e-6 * std::pow(10.0, 0.3 * j),
                                          1e2 * std::pow(10.0, 0.4 * k), 0.9};
                double previous = survival_probability(0.0, 0.19, m);
                for (int n = 1; n <= 12; ++n) {
                    const double s = survival_probability(0.5e-3 * n, 0.19, m);
                    violations += s > previous;
                    previous = s;
                }
            }
        }
    }
    c.check("non-increasing in hold time on a 10x10x10 grid", violations == 0, fmt("%.0f violations", violations));

    violations = 0;
    auto scale = [](int n) { return std::pow(2.0, -1.0 + 2.0 * n / 9.0); };
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            for (int k = 0; k < 10; ++k) {
                const MarkovModelParams m{ref.eps_over_gamma * scale(i), ref.T0_over_gamma * scale(j),
                                          ref.omega_per_sqrtP * scale(k), ref.C0};
                for (double t : {0.5e-3, 1e-3}) {
                    double previous = -1.0;
                    for (double pw : {0.05, 0.1, 0.15, 0.19, 0.23, 0.275}) {
                        const double s = survival_probability(t, pw, m);
                        violations += s < previous;
                        previous = s;
                    }
                }
            }
        }
    }
    c.check("non-decreasing in power on a 10x10x10 grid around the reference", violations == 0,
            fmt("%.0f violations", violations));
}

void criterion_end_to_end(Criterion& c) {
    const auto cfg = (kSource / "configs/fig2.cfg").string();
    const auto t_data = scratch() / "fig2_t.csv";
    const auto p_data = scratch() / "fig2_p.csv";
    const auto fit = scratch() / "fig2_fit";
    c.check("simulate hold-time sweep", run_cli("--config " + cfg + " --out " + t_data.string() + " simulate --sweep t_dipole") == 0);
    c.check("simulate power sweep", run_cli("--config " + cfg + " --out " + p_data.string() + " simulate --sweep p_trap") == 0);
    const int code = run_cli("--out " + fit.string() + " fit " + t_data.string() + " " + p_data.string());
    c.check("fit exit status", code == 0, fmt("%.0f", code));
    if (code != 0) {
        return;
    }

    const auto summary = nlohmann::json::parse(slurp(fit.string() + ".summary.json"));
    c.check("fit converged", summary.at("converged").get<bool>());
    const double c0 = summary.at("params").at("C0").get<double>();
    c.check("C0 <= 1", c0 <= 1.0, fmt("%.6f", c0));

    const double scan_power = load_config(cfg).scenario.beam.power;
    std::istringstream curve(slurp(fit.string() + ".curve.csv"));
    std::string line;
    std::getline(curve, line);
    double previous = 2.0;
    int points = 0;
    bool monotone = true;
    while (std::getline(curve, line)) {
        double t = 0.0, pw = 0.0, pm = 0.0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &pw, &pm) == 3 && pw == scan_power) {
            monotone = monotone && pm <= previous;
            previous = pm;
            ++points;
        }
    }
    c.check("model curve non-increasing in hold time", monotone && points > 10, fmt("%.0f curve points", points));

    const auto rows = read_dataset(p_data).rows;
    const auto zero = std::find_if(rows.begin(), rows.end(), [](const SurvivalRow& r) { return r.p_trap == 0.0; });
    c.check("zero-power point present", zero != rows.end());
    if (zero != rows.end()) {
        c.check("zero power gives no trapping", zero->n_success == 0,
                fmt("%.0f of %.0f", zero->n_success, zero->n_total));
    }
}

void criterion_determinism(Criterion& c) {
    const auto cfg = (kSource / "configs/fig3.cfg").string();
    struct Case {
        std::string name;
        std::string args;
        std::vector<std::string> outputs;
    };
    const std::vector<Case> cases{
        {"derive", "--config " + cfg + " --out {} derive", {""}},
        {"simulate", "--config " + cfg + " --seed 11 --out {} simulate --trajectories 60 --dump {}.dump.csv",
         {"", ".dump.csv"}},
        {"synth", "--seed 4 --out {} synth", {""}},
        {"fit", "--out {} fit " + (scratch() / "det_2_a").string(), {".summary.json", ".curve.csv", ".report.txt"}},
        {"stability ramp", "--out {} stability --fractions 51", {""}},
        {"stability raster", "--out {} stability --mode raster --a-n 5 --q-n 9", {""}},
    };
    for (std::size_t index = 0; index < cases.size(); ++index) {
        const auto& k = cases[index];
        std::vector<std::string> runs;
        bool ran = true;
        for (const char* tag : {"_a", "_b"}) {
            std::string args = k.args;
            const auto base = (scratch() / ("det_" + std::to_string(index) + tag)).string();
            for (auto pos = args.find("{}"); pos != std::string::npos; pos = args.find("{}")) {
                args.replace(pos, 2, base);
            }
            ran = ran && run_cli(args) == 0;
            std::string all;
            for (const auto& ext : k.outputs) {
                all += slurp(base + ext) + '\x1f';
            }
            runs.push_back(all);
        }
        c.check(k.name + " repeated with the same seed is byte-identical", ran && runs[0] == runs[1] && runs[0].size() > 8);
    }
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
        {"1 derived quantities", criterion_derived},
        {"2 stability", criterion_stability},
        {"3 dynamics", criterion_dynamics},
        {"4 heating model", criterion_heating_model},
        {"5 simulate then fit (fig2)", criterion_end_to_end},
        {"6 determinism", criterion_determinism},
    };
    int failed = 0;
    for (const auto& [title, body] : criteria) {
        Criterion c(title);
        const auto start = std::chrono::steady_clock::now();
        try {
            body(c);
        } catch (const std::exception& e) {
            c.check("unexpected exception", false, e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !c.report(seconds);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    std::error_code ec;
    fs::remove_all(scratch(), ec);
    return failed;
}
