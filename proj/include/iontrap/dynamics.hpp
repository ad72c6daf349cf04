#pragma once

#include "iontrap/core_physics.hpp"
#include "iontrap/potentials.hpp"
#include "iontrap/rng.hpp"
#include "iontrap/vec3.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace iontrap {

enum class RampShape { linear, cosine };

/// Handoff sequence: cooling off, dipole on, RF ramp-down, hold, RF ramp-up, dipole off.
/// Each member is the duration of that phase; phases follow each other without gaps.
/// The dipole beam is on from the start of the dipole-on phase until the start of the
/// dipole-off phase.
struct ProtocolTimeline {
    double cooling_off = 0.0;
    double dipole_on = 0.0;
    double ramp_down = 50e-6;
    double hold = 1e-3;
    double ramp_up = 50e-6;
    double dipole_off = 0.0;
    RampShape shape = RampShape::linear;
    double ring_down = 0.5e-6;  // resonator 1/e amplitude decay time

    void validate() const;

    double dipole_switch_on() const { return cooling_off; }
    double ramp_down_start() const { return cooling_off + dipole_on; }
    double hold_start() const { return ramp_down_start() + ramp_down; }
    double hold_end() const { return hold_start() + hold; }
    double dipole_switch_off() const { return hold_end() + ramp_up; }
    double end() const { return dipole_switch_off() + dipole_off; }

    /// RF amplitude fraction as programmed, before the resonator filter.
    double programmed_rf(double t) const;
    double dipole_gate(double t) const;
};

/// Programmed RF amplitude passed through a first-order low-pass with the resonator
/// ring-down time. Evaluated in closed form segment by segment.
class RfEnvelope {
public:
    explicit RfEnvelope(const ProtocolTimeline& timeline);
    double operator()(double t) const;

private:
    struct Segment {
        double start;
        double duration;
        // programmed g(u) = constant + slope * u + cosine * cos(frequency * u), u = t - start
        double constant;
        double slope;
        double cosine;
        double frequency;
        double initial;  // filtered value at segment start
    };
    double evaluate(const Segment& seg, double u) const;

    double tau_;
    std::vector<Segment> segments_;
};

struct IonState {
    Vec3 position;  // m
    Vec3 velocity;  // m/s
    double time = 0.0;
};

struct SimConfig {
    double time_step = 50e-9;
    RfMode rf_mode = RfMode::pseudopotential;
    double initial_temperature = 2e-3;  // K
    bool recoil = true;
    std::uint64_t seed = 1;
    std::int64_t max_steps = 500'000'000;

    /// Full-drive mode needs at least 20 steps per RF period.
    void validate(double rf_drive) const;
};

/// Everything one trapping attempt depends on.
struct Scenario {
    IonSpecies species = IonSpecies::magnesium24();
    GaussianBeam beam;
    TrapConfiguration trap;
    std::optional<double> dc_barrier_distance;  // enables the axial DC landscape
    ProtocolTimeline timeline;
    SimConfig sim;

    void validate() const;
};

/// Dipole beam (gated), RF (filtered envelope), DC and stray force for the scenario.
CompositeField build_fields(const Scenario& scenario);

/// Secular frequencies of the full RF + DC well the ion starts in.
Vec3 initial_well_frequencies(const TrapConfiguration& trap);

/// Boltzmann sample in a 3D harmonic well. T = 0 returns the ion at rest at the origin.
IonState sample_initial_state(double temperature, const Vec3& frequencies, double mass, Rng& rng);

/// One scattering event: absorption along the beam plus isotropic spontaneous emission.
IonState recoil_kick(const IonState& state, const GaussianBeam& beam, const IonSpecies& species, Rng& rng);

/// Velocity-Verlet propagation without protocol logic. `observer` sees every step.
void propagate(IonState& state, const CompositeField& fields, double mass, double t_end, double step,
               const std::function<void(const IonState&)>& observer = {});

enum class Outcome { survived, escaped, lost_at_capture };

struct EnergyMark {
    double time = 0.0;
    double energy = 0.0;
};

struct TrajectoryResult {
    IonState final_state;
    Outcome outcome = Outcome::survived;
    std::optional<double> escape_time;
    std::int64_t scattering_events = 0;
    // Field energy plus kinetic energy, minus the work potential of the mean radiation
    // pressure along the beam (recoil on only).
    std::optional<EnergyMark> hold_start;
    std::optional<EnergyMark> hold_end;
    std::vector<IonState> samples;  // filled when record_stride > 0
};

/// Runs the full protocol. The ion escapes when it is more than 5 w0 from the beam axis or
/// more than 3 zR along it while the dipole beam is on; after the beam is switched off it
/// must be bound in the restored RF + DC pseudopotential below the RF depth estimate.
/// Throws NumericalError on a non-finite state.
TrajectoryResult integrate_trajectory(const IonState& initial, const Scenario& scenario,
                                      const CompositeField& fields, Rng& rng, int record_stride = 0);

struct SurvivalEstimate {
    std::int64_t n_success = 0;
    std::int64_t n_total = 0;
    double p_hat = 0.0;
    double lower = 0.0;  // Clopper-Pearson bounds at `level`
    double upper = 1.0;
    double level = 0.6827;
};

SurvivalEstimate survival_estimate(std::int64_t n_success, std::int64_t n_total, double level = 0.6827);

/// Trajectory i uses make_stream(sim.seed, i). OpenMP-parallel over trajectories.
std::vector<TrajectoryResult> ensemble_outcomes(std::int64_t n, const Scenario& scenario);
/// Single-threaded reference for ensemble_outcomes; results are identical.
std::vector<TrajectoryResult> ensemble_outcomes_serial(std::int64_t n, const Scenario& scenario);

/// Replays ensemble member `index` with every `record_stride`-th state kept in `samples`.
TrajectoryResult trace_trajectory(std::int64_t index, const Scenario& scenario, int record_stride);

/// Throws InputError for n < 1.
SurvivalEstimate run_ensemble(std::int64_t n, const Scenario& scenario);

}  // namespace iontrap
