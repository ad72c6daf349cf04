#include "iontrap/config.hpp"

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace iontrap {

namespace c = constants;

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value == 0.0 ? 0.0 : value);
    return std::string(buf, res.ptr);
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    auto& s = cfg.scenario;
    s.species = IonSpecies::magnesium24();
    s.beam.power = 0.275;
    s.beam.waist = 7e-6;
    s.beam.detuning = -c::two_pi * 300e9;
    s.beam.wavelength = 280e-9;
    cfg.beam_angle = c::pi / 4.0;
    s.trap.rf_drive = c::two_pi * 56e6;
    s.trap.omega_x = c::two_pi * 900e3;
    s.trap.omega_y = c::two_pi * 900e3;
    s.trap.omega_z = c::two_pi * 45e3;
    s.trap.electrode_distance = 0.8e-3;
    s.trap.stray_force = {0.0, 1e-20, 0.0};
    cfg.finalize();
    return cfg;
}

void ExperimentConfig::finalize() {
    scenario.beam.direction = GaussianBeam::direction_at_angle(beam_angle);
    scenario.validate();
    if (n_trajectories < 1) {
        throw InputError("sim.n_trajectories must be at least 1");
    }
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        throw InputError("config key '" + key + "': expected a number, got '" + text + "'");
    }
    return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& text) {
    std::int64_t v = 0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw InputError("config key '" + key + "': expected an integer, got '" + text + "'");
    }
    return v;
}

Vec3 parse_vector(const std::string& key, const std::string& text) {
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(parse_number(key, trim(item)));
    }
    if (parts.size() != 3) {
        throw InputError("config key '" + key + "': expected three comma-separated numbers");
    }
    return {parts[0], parts[1], parts[2]};
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "on") {
        return true;
    }
    if (text == "false" || text == "0" || text == "off") {
        return false;
    }
    throw InputError("config key '" + key + "': expected true/false, got '" + text + "'");
}

std::string vector_text(const Vec3& v) {
    return format_double(v.x) + ", " + format_double(v.y) + ", " + format_double(v.z);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct KeySpec {
    std::string name;  // section.key
    Setter set;
    Getter get;
    bool optional = false;  // omitted from output when unset
};

// Scaled floating-point key: in-memory value = file value * scale.
template <class Access>
KeySpec scaled(std::string name, Access access, double scale) {
    return {name,
            [access, scale](ExperimentConfig& cfg, const std::string& key, const std::string& value) {
                access(cfg) = parse_number(key, value) * scale;
            },
            [access, scale](const ExperimentConfig& cfg) {
                return format_double(access(cfg) / scale);
            }};
}

const std::vector<KeySpec>& key_specs() {
    static const std::vector<KeySpec> specs = [] {
        std::vector<KeySpec> k;
        const double tp = c::two_pi;
        k.push_back(scaled("species.mass_amu", [](auto& x) -> auto& { return x.scenario.species.mass; },
                           c::atomic_mass_unit));
        k.push_back(scaled("species.transition_wavelength_m",
                           [](auto& x) -> auto& { return x.scenario.species.transition_wavelength; }, 1.0));
        k.push_back(scaled("species.linewidth_hz",
                           [](auto& x) -> auto& { return x.scenario.species.linewidth; }, tp));
        k.push_back(scaled("species.charge_e", [](auto& x) -> auto& { return x.scenario.species.charge; },
                           c::elementary_charge));
        k.push_back({"species.label",
                     [](ExperimentConfig& x, const std::string&, const std::string& v) { x.scenario.species.label = v; },
                     [](const ExperimentConfig& x) { return x.scenario.species.label; }});

        k.push_back(scaled("beam.power_w", [](auto& x) -> auto& { return x.scenario.beam.power; }, 1.0));
        k.push_back(scaled("beam.waist_m", [](auto& x) -> auto& { return x.scenario.beam.waist; }, 1.0));
        k.push_back(scaled("beam.detuning_hz", [](auto& x) -> auto& { return x.scenario.beam.detuning; }, tp));
        k.push_back(
            scaled("beam.wavelength_m", [](auto& x) -> auto& { return x.scenario.beam.wavelength; }, 1.0));
        k.push_back(scaled("beam.angle_deg", [](auto& x) -> auto& { return x.beam_angle; }, c::pi / 180.0));
        k.push_back({"beam.focus_m",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.scenario.beam.focus = parse_vector(key, v);
                     },
                     [](const ExperimentConfig& x) { return vector_text(x.scenario.beam.focus); }});

        k.push_back(scaled("trap.rf_drive_hz", [](auto& x) -> auto& { return x.scenario.trap.rf_drive; }, tp));
        k.push_back(scaled("trap.omega_x_hz", [](auto& x) -> auto& { return x.scenario.trap.omega_x; }, tp));
        k.push_back(scaled("trap.omega_y_hz", [](auto& x) -> auto& { return x.scenario.trap.omega_y; }, tp));
        k.push_back(scaled("trap.omega_z_hz", [](auto& x) -> auto& { return x.scenario.trap.omega_z; }, tp));
        k.push_back(scaled("trap.electrode_distance_m",
                           [](auto& x) -> auto& { return x.scenario.trap.electrode_distance; }, 1.0));
        k.push_back({"trap.stray_force_n",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.scenario.trap.stray_force = parse_vector(key, v);
                     },
                     [](const ExperimentConfig& x) { return vector_text(x.scenario.trap.stray_force); }});
        k.push_back({"trap.dc_barrier_distance_m",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.scenario.dc_barrier_distance = parse_number(key, v);
                     },
                     [](const ExperimentConfig& x) {
                         return x.scenario.dc_barrier_distance ? format_double(*x.scenario.dc_barrier_distance)
                                                               : std::string();
                     },
                     true});

        k.push_back(scaled("protocol.cooling_off_s",
                           [](auto& x) -> auto& { return x.scenario.timeline.cooling_off; }, 1.0));
        k.push_back(scaled("protocol.dipole_on_s",
                           [](auto& x) -> auto& { return x.scenario.timeline.dipole_on; }, 1.0));
        k.push_back(scaled("protocol.ramp_down_s",
                           [](auto& x) -> auto& { return x.scenario.timeline.ramp_down; }, 1.0));
        k.push_back(
            scaled("protocol.t_dipole_s", [](auto& x) -> auto& { return x.scenario.timeline.hold; }, 1.0));
        k.push_back(
            scaled("protocol.ramp_up_s", [](auto& x) -> auto& { return x.scenario.timeline.ramp_up; }, 1.0));
        k.push_back(scaled("protocol.dipole_off_s",
                           [](auto& x) -> auto& { return x.scenario.timeline.dipole_off; }, 1.0));
        k.push_back(scaled("protocol.ring_down_s",
                           [](auto& x) -> auto& { return x.scenario.timeline.ring_down; }, 1.0));
        k.push_back({"protocol.ramp_shape",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         if (v == "linear") {
                             x.scenario.timeline.shape = RampShape::linear;
                         } else if (v == "cosine") {
                             x.scenario.timeline.shape = RampShape::cosine;
                         } else {
                             throw InputError("config key '" + key + "': expected linear or cosine");
                         }
                     },
                     [](const ExperimentConfig& x) {
                         return std::string(x.scenario.timeline.shape == RampShape::linear ? "linear" : "cosine");
                     }});

        k.push_back({"sim.mode",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         if (v == "pseudopotential") {
                             x.scenario.sim.rf_mode = RfMode::pseudopotential;
                         } else if (v == "full-drive") {
                             x.scenario.sim.rf_mode = RfMode::full_drive;
                         } else {
                             throw InputError("config key '" + key + "': expected pseudopotential or full-drive");
                         }
                     },
                     [](const ExperimentConfig& x) {
                         return std::string(x.scenario.sim.rf_mode == RfMode::pseudopotential ? "pseudopotential"
                                                                                               : "full-drive");
                     }});
        k.push_back(
            scaled("sim.time_step_s", [](auto& x) -> auto& { return x.scenario.sim.time_step; }, 1.0));
        k.push_back(scaled("sim.t_init_k",
                           [](auto& x) -> auto& { return x.scenario.sim.initial_temperature; }, 1.0));
        k.push_back({"sim.recoil",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.scenario.sim.recoil = parse_bool(key, v);
                     },
                     [](const ExperimentConfig& x) { return std::string(x.scenario.sim.recoil ? "true" : "false"); }});
        k.push_back({"sim.seed",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         const auto seed = parse_integer(key, v);
                         if (seed < 0) {
                             throw InputError("config key '" + key + "': seed must be non-negative");
                         }
                         x.scenario.sim.seed = static_cast<std::uint64_t>(seed);
                     },
                     [](const ExperimentConfig& x) { return std::to_string(x.scenario.sim.seed); }});
        k.push_back({"sim.n_trajectories",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.n_trajectories = parse_integer(key, v);
                     },
                     [](const ExperimentConfig& x) { return std::to_string(x.n_trajectories); }});
        k.push_back({"sim.max_steps",
                     [](ExperimentConfig& x, const std::string& key, const std::string& v) {
                         x.scenario.sim.max_steps = parse_integer(key, v);
                     },
                     [](const ExperimentConfig& x) { return std::to_string(x.scenario.sim.max_steps); }});
        return k;
    }();
    return specs;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    std::map<std::string, const KeySpec*> index;
    for (const auto& spec : key_specs()) {
        index[spec.name] = &spec;
    }

    ExperimentConfig cfg = ExperimentConfig::defaults();
    std::string section;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw InputError("config line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const auto it = index.find(key);
        if (it == index.end()) {
            throw InputError("config key '" + key + "' is not recognized");
        }
        if (!seen.insert(key).second) {
            throw InputError("config key '" + key + "' appears twice");
        }
        it->second->set(cfg, key, trim(line.substr(eq + 1)));
    }
    cfg.finalize();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config file " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string write_config(const ExperimentConfig& config) {
    std::ostringstream out;
    std::string section;
    for (const auto& spec : key_specs()) {
        const auto dot = spec.name.find('.');
        const std::string sec = spec.name.substr(0, dot);
        const std::string value = spec.get(config);
        if (spec.optional && value.empty()) {
            continue;
        }
        if (sec != section) {
            if (!section.empty()) {
                out << '\n';
            }
            out << '[' << sec << "]\n";
            section = sec;
        }
        out << spec.name.substr(dot + 1) << " = " << value << '\n';
    }
    return out.str();
}

}  // namespace iontrap
