#include "iontrap/dynamics.hpp"

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

namespace iontrap {

namespace {

void require_duration(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw InputError(std::string("protocol.") + name + " must be a non-negative duration");
    }
}

}  // namespace

void ProtocolTimeline::validate() const {
    require_duration(cooling_off, "cooling_off");
    require_duration(dipole_on, "dipole_on");
    require_duration(ramp_down, "ramp_down");
    require_duration(hold, "hold");
    require_duration(ramp_up, "ramp_up");
    require_duration(dipole_off, "dipole_off");
    require_duration(ring_down, "ring_down");
}

double ProtocolTimeline::programmed_rf(double t) const {
    const double t0 = ramp_down_start();
    const double t1 = hold_start();
    const double t2 = hold_end();
    const double t3 = dipole_switch_off();
    if (t < t0 || t >= t3) {
        return 1.0;
    }
    if (t >= t1 && t < t2) {
        return 0.0;
    }
    const bool down = t < t1;
    const double u = down ? (t - t0) / ramp_down : (t - t2) / ramp_up;
    const double rising = shape == RampShape::linear ? u : 0.5 * (1.0 - std::cos(constants::pi * u));
    return down ? 1.0 - rising : rising;
}

double ProtocolTimeline::dipole_gate(double t) const {
    return (t >= dipole_switch_on() && t < dipole_switch_off()) ? 1.0 : 0.0;
}

RfEnvelope::RfEnvelope(const ProtocolTimeline& timeline) : tau_(timeline.ring_down) {
    const bool linear = timeline.shape == RampShape::linear;
    auto ramp = [&](double start, double duration, bool down) {
        if (linear) {
            return Segment{start, duration, down ? 1.0 : 0.0, (down ? -1.0 : 1.0) / duration, 0.0, 0.0, 0.0};
        }
        return Segment{start, duration, 0.5, 0.0, down ? 0.5 : -0.5, constants::pi / duration, 0.0};
    };
    std::vector<Segment> candidates{
        ramp(timeline.ramp_down_start(), timeline.ramp_down, true),
        Segment{timeline.hold_start(), timeline.hold, 0.0, 0.0, 0.0, 0.0, 0.0},
        ramp(timeline.hold_end(), timeline.ramp_up, false),
        Segment{timeline.dipole_switch_off(), std::numeric_limits<double>::infinity(), 1.0, 0.0, 0.0, 0.0, 0.0},
    };
    double carried = 1.0;
    for (auto seg : candidates) {
        if (seg.duration <= 0.0) {
            continue;
        }
        seg.initial = carried;
        segments_.push_back(seg);
        if (std::isfinite(seg.duration)) {
            carried = evaluate(seg, seg.duration);
        }
    }
}

double RfEnvelope::evaluate(const Segment& seg, double u) const {
    const double w = seg.frequency;
    if (tau_ == 0.0) {
        return seg.constant + seg.slope * u + seg.cosine * std::cos(w * u);
    }
    // Particular solution of tau f' + f = g for g = A + B u + C cos(w u).
    const double wt = w * tau_;
    auto particular = [&](double x) {
        return seg.constant + seg.slope * (x - tau_) +
               seg.cosine * (std::cos(w * x) + wt * std::sin(w * x)) / (1.0 + wt * wt);
    };
    return particular(u) + (seg.initial - particular(0.0)) * std::exp(-u / tau_);
}

double RfEnvelope::operator()(double t) const {
    const Segment* active = nullptr;
    for (const auto& seg : segments_) {
        if (t >= seg.start) {
            active = &seg;
        }
    }
    if (active == nullptr) {
        return 1.0;
    }
    return std::clamp(evaluate(*active, t - active->start), 0.0, 1.0);
}

void SimConfig::validate(double rf_drive) const {
    if (!(time_step > 0.0) || !std::isfinite(time_step)) {
        throw InputError("sim.time_step must be positive");
    }
    if (!(initial_temperature >= 0.0) || !std::isfinite(initial_temperature)) {
        throw InputError("sim.initial_temperature must be non-negative");
    }
    if (max_steps <= 0) {
        throw InputError("sim.max_steps must be positive");
    }
    if (rf_mode == RfMode::full_drive && time_step > constants::two_pi / (20.0 * rf_drive)) {
        throw InputError("sim.time_step too large for full-drive RF (need 20 steps per RF period)");
    }
}

void Scenario::validate() const {
    species.validate();
    beam.validate();
    trap.validate();
    timeline.validate();
    sim.validate(trap.rf_drive);
    if (beam.power > 0.0 && beam.detuning == 0.0) {
        throw InputError("beam.detuning must be non-zero");
    }
    if (dc_barrier_distance && !(*dc_barrier_distance > 0.0)) {
        throw InputError("trap.dc_barrier_distance must be positive");
    }
}

CompositeField build_fields(const Scenario& scenario) {
    const ProtocolTimeline timeline = scenario.timeline;
    const double mass = scenario.species.mass;
    return compose({
        DipoleBeamField(scenario.beam, scenario.species, [timeline](double t) { return timeline.dipole_gate(t); }),
        RFField(scenario.trap, mass, scenario.sim.rf_mode, RfEnvelope(timeline)),
        DCField(scenario.trap.omega_z, mass, scenario.dc_barrier_distance),
        StrayForce{scenario.trap.stray_force},
    });
}

Vec3 initial_well_frequencies(const TrapConfiguration& trap) {
    const double dc = 0.5 * trap.omega_z * trap.omega_z;
    const double wx2 = trap.omega_x * trap.omega_x - dc;
    const double wy2 = trap.omega_y * trap.omega_y - dc;
    if (!(wx2 > 0.0) || !(wy2 > 0.0)) {
        throw DomainError("RF confinement does not overcome the DC defocusing");
    }
    return {std::sqrt(wx2), std::sqrt(wy2), trap.omega_z};
}

IonState sample_initial_state(double temperature, const Vec3& frequencies, double mass, Rng& rng) {
    if (!(frequencies.x > 0.0 && frequencies.y > 0.0 && frequencies.z > 0.0)) {
        throw DomainError("thermal sampling needs positive well frequencies");
    }
    if (temperature < 0.0) {
        throw DomainError("temperature must be non-negative");
    }
    IonState s;
    if (temperature == 0.0) {
        return s;
    }
    const double kt = constants::boltzmann * temperature;
    const double sigma_v = std::sqrt(kt / mass);
    std::normal_distribution<double> normal;
    s.position = {normal(rng) * sigma_v / frequencies.x, normal(rng) * sigma_v / frequencies.y,
                  normal(rng) * sigma_v / frequencies.z};
    s.velocity = {normal(rng) * sigma_v, normal(rng) * sigma_v, normal(rng) * sigma_v};
    return s;
}

IonState recoil_kick(const IonState& state, const GaussianBeam& beam, const IonSpecies& species, Rng& rng) {
    std::uniform_real_distribution<double> uniform;
    const double cos_theta = 2.0 * uniform(rng) - 1.0;
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    const double phi = constants::two_pi * uniform(rng);
    const Vec3 emitted{sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
    const double recoil_velocity =
        constants::hbar * constants::two_pi / (species.transition_wavelength * species.mass);
    IonState out = state;
    out.velocity += (beam.direction + emitted) * recoil_velocity;
    return out;
}

namespace {

inline void verlet_step(IonState& s, Vec3& force, const CompositeField& fields, double inv_mass, double h) {
    s.velocity += force * (0.5 * h * inv_mass);
    s.position += s.velocity * h;
    s.time += h;
    force = fields.force(s.position, s.time);
    s.velocity += force * (0.5 * h * inv_mass);
}

double total_energy(const IonState& s, const CompositeField& fields, double mass) {
    return 0.5 * mass * norm2(s.velocity) + fields.value(s.position, s.time);
}

void require_finite(const IonState& s) {
    if (!is_finite(s.position) || !is_finite(s.velocity)) {
        std::ostringstream msg;
        msg << "non-finite ion state at t = " << s.time << " s (x = " << s.position.x << ", " << s.position.y
            << ", " << s.position.z << ")";
        throw NumericalError(msg.str());
    }
}

}  // namespace

void propagate(IonState& state, const CompositeField& fields, double mass, double t_end, double step,
               const std::function<void(const IonState&)>& observer) {
    const double inv_mass = 1.0 / mass;
    Vec3 force = fields.force(state.position, state.time);
    while (t_end - state.time > 1e-9 * step) {
        verlet_step(state, force, fields, inv_mass, std::min(step, t_end - state.time));
        require_finite(state);
        if (observer) {
            observer(state);
        }
    }
}

TrajectoryResult integrate_trajectory(const IonState& initial, const Scenario& scenario,
                                      const CompositeField& fields, Rng& rng, int record_stride) {
    const auto& timeline = scenario.timeline;
    const auto& sim = scenario.sim;
    const double mass = scenario.species.mass;
    const double inv_mass = 1.0 / mass;
    const double dt = sim.time_step;
    const double t_end = timeline.end();

    if (std::ceil(t_end / dt) > static_cast<double>(sim.max_steps)) {
        throw InputError("protocol needs more than sim.max_steps integration steps");
    }

    const DipoleBeamField* dipole = fields.dipole();
    double peak_rate = 0.0;
    double transverse_limit = std::numeric_limits<double>::infinity();
    double along_limit = std::numeric_limits<double>::infinity();
    if (dipole != nullptr) {
        transverse_limit = 5.0 * dipole->beam().waist;
        along_limit = 3.0 * dipole->rayleigh_range();
        if (sim.recoil && dipole->depth() > 0.0) {
            peak_rate = scattering_rate(dipole->beam(), scenario.species);
        }
    }
    if (peak_rate * dt >= 0.1) {
        throw InputError("sim.time_step too large for recoil sampling (need scattering_rate * step < 0.1)");
    }

    TrajectoryResult result;
    IonState s = initial;
    s.time = 0.0;
    Vec3 force = fields.force(s.position, s.time);
    std::uniform_real_distribution<double> uniform;

    // Hold-phase energy marks include the potential of the mean radiation pressure, so that
    // the coherent displacement it drives along the beam does not show up as heating.
    const double push = peak_rate * constants::hbar * constants::two_pi / scenario.species.transition_wavelength;
    auto hold_energy = [&](const IonState& st) {
        double e = total_energy(st, fields, mass);
        if (dipole != nullptr && push > 0.0) {
            e -= push * dipole->gate(st.time) * dot(dipole->beam().direction, st.position - dipole->beam().focus);
        }
        return EnergyMark{st.time, e};
    };
    if (timeline.hold_start() <= 0.0) {
        result.hold_start = hold_energy(s);
    }

    std::int64_t step_index = 0;
    while (t_end - s.time > 1e-9 * dt) {
        verlet_step(s, force, fields, inv_mass, std::min(dt, t_end - s.time));
        ++step_index;

        if (peak_rate > 0.0) {
            const double p = peak_rate * dipole->gate(s.time) * dipole->relative_intensity(s.position) * dt;
            if (p > 0.0 && uniform(rng) < p) {
                s = recoil_kick(s, dipole->beam(), scenario.species, rng);
                ++result.scattering_events;
            }
        }
        require_finite(s);

        if (record_stride > 0 && step_index % record_stride == 0) {
            result.samples.push_back(s);
        }
        if (!result.hold_start && s.time >= timeline.hold_start()) {
            result.hold_start = hold_energy(s);
        }
        if (!result.hold_end && s.time >= timeline.hold_end()) {
            result.hold_end = hold_energy(s);
        }
        if (dipole != nullptr && timeline.dipole_gate(s.time) > 0.0) {
            const auto c = dipole->beam_coordinates(s.position);
            if (c.transverse > transverse_limit || std::abs(c.along) > along_limit) {
                result.outcome = Outcome::escaped;
                result.escape_time = s.time;
                result.final_state = s;
                return result;
            }
        }
    }

    result.final_state = s;
    const Vec3 w = initial_well_frequencies(scenario.trap);
    const Vec3& r = s.position;
    const double bound_energy =
        0.5 * mass * (norm2(s.velocity) + w.x * w.x * r.x * r.x + w.y * w.y * r.y * r.y + w.z * w.z * r.z * r.z);
    if (!(bound_energy < rf_trap_depth_estimate(scenario.trap, scenario.species))) {
        result.outcome = Outcome::lost_at_capture;
    }
    return result;
}

SurvivalEstimate survival_estimate(std::int64_t n_success, std::int64_t n_total, double level) {
    if (n_total < 1 || n_success < 0 || n_success > n_total) {
        throw InputError("survival estimate needs 0 <= n_success <= n_total and n_total >= 1");
    }
    using boost::math::binomial_distribution;
    const double alpha = 0.5 * (1.0 - level);
    const auto trials = static_cast<double>(n_total);
    const auto successes = static_cast<double>(n_success);
    SurvivalEstimate est;
    est.n_success = n_success;
    est.n_total = n_total;
    est.p_hat = successes / trials;
    est.level = level;
    est.lower = binomial_distribution<>::find_lower_bound_on_p(trials, successes, alpha);
    est.upper = binomial_distribution<>::find_upper_bound_on_p(trials, successes, alpha);
    return est;
}

namespace {

TrajectoryResult run_one(std::int64_t index, const Scenario& scenario, const CompositeField& fields,
                         const Vec3& well, int record_stride = 0) {
    Rng rng = make_stream(scenario.sim.seed, static_cast<std::uint64_t>(index));
    const IonState initial =
        sample_initial_state(scenario.sim.initial_temperature, well, scenario.species.mass, rng);
    return integrate_trajectory(initial, scenario, fields, rng, record_stride);
}

}  // namespace

TrajectoryResult trace_trajectory(std::int64_t index, const Scenario& scenario, int record_stride) {
    if (index < 0 || record_stride < 1) {
        throw InputError("trajectory index must be >= 0 and record stride >= 1");
    }
    scenario.validate();
    return run_one(index, scenario, build_fields(scenario), initial_well_frequencies(scenario.trap), record_stride);
}

std::vector<TrajectoryResult> ensemble_outcomes_serial(std::int64_t n, const Scenario& scenario) {
    if (n < 1) {
        throw InputError("ensemble size must be at least 1");
    }
    scenario.validate();
    const CompositeField fields = build_fields(scenario);
    const Vec3 well = initial_well_frequencies(scenario.trap);
    std::vector<TrajectoryResult> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        out.push_back(run_one(i, scenario, fields, well));
    }
    return out;
}

std::vector<TrajectoryResult> ensemble_outcomes(std::int64_t n, const Scenario& scenario) {
    if (n < 1) {
        throw InputError("ensemble size must be at least 1");
    }
    scenario.validate();
    const CompositeField fields = build_fields(scenario);
    const Vec3 well = initial_well_frequencies(scenario.trap);
    std::vector<TrajectoryResult> out(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[i] = run_one(i, scenario, fields, well);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

SurvivalEstimate run_ensemble(std::int64_t n, const Scenario& scenario) {
    const auto outcomes = ensemble_outcomes(n, scenario);
    const auto survived = std::count_if(outcomes.begin(), outcomes.end(),
                                        [](const TrajectoryResult& r) { return r.outcome == Outcome::survived; });
    return survival_estimate(survived, n);
}

}  // namespace iontrap
