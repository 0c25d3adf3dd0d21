// channel.hpp — transit dephasing: exact sector-correlation superoperator and
// sampled random-phase trajectories.

#pragma once

#include <cstdint>
#include <random>
#include <variant>

#include "clocksync/state.hpp"

namespace clocksync {

// Phase-randomization laws for the transit of the exchanged system.
// Noiseless: deterministic extra delay, phi_e = omega_e * fixed_delay.
// Mixture: with probability (1-epsilon) one shared uniform phase, with
//          probability epsilon independent uniform phases per sector.
// RandomDelay: phi_e = omega_e * theta with theta drawn per transit; sigma is
//          the standard deviation for both distributions (uniform support is
//          [-sigma*sqrt(3), sigma*sqrt(3)]).
// FullyRandom: independent uniform phases per sector (complete dephasing).
struct Noiseless {
    double fixed_delay = 0.0;
};
struct Mixture {
    double epsilon = 1.0;
};
enum class DelayDist { Gaussian, Uniform };
struct RandomDelay {
    double sigma = 0.0;
    DelayDist dist = DelayDist::Gaussian;
};
struct FullyRandom {};

using PhaseModel = std::variant<Noiseless, Mixture, RandomDelay, FullyRandom>;

void validate(const PhaseModel& model);

// Deterministic part of the arrival delay (Noiseless fixed_delay; zero for the
// stochastic models, whose delay has zero mean).
double transit_delay_mean(const PhaseModel& model);

// Sector-correlation matrix delta[e][e'] = E[exp(-i(phi_e - phi_e'))].
// Hermitian, unit diagonal, positive semidefinite (a Gram matrix).
struct DeltaMatrix {
    Matrix entries;
    PhaseModel model;
    EnergySpec energies;
};

DeltaMatrix delta_matrix(const PhaseModel& model, const EnergySpec& energies);

// One stochastic realization of the transit phases. `phases` has one entry
// per energy sector; `delay` is the extra arrival delay it implies (the
// fixed delay for Noiseless, theta for RandomDelay, zero otherwise).
struct PhaseDraw {
    std::vector<double> phases;
    double delay = 0.0;
};

PhaseDraw draw_phases(const PhaseModel& model, const EnergySpec& energies, std::mt19937_64& rng);

// Diagonal unitary exp(-i sum_e P_e (omega_e*transit + phi_e)).
Matrix transit_unitary(const EnergySpec& energies, double transit,
                       const std::vector<double>& phases);

// transit_unitary with freshly drawn phases.
Matrix sample_transit(const PhaseModel& model, const EnergySpec& energies, double transit,
                      std::mt19937_64& rng);

// Exact averaged channel: sector coherences of subsystem `id` scale by
// exp(-i(omega_e - omega_e')*transit) * delta[e][e'], through the full
// composite state. Requires Channel ownership of `id`.
CompositeState apply_transit(const CompositeState& s, const SubsystemId& id,
                             const PhaseModel& model, double transit);

// Deterministic per-trajectory seed stream (splitmix64 of (base, index)).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace clocksync
