// timeline.hpp — discrete-event engine for synchronization scenarios. Actors
// schedule actions in their own proper time against hidden clock origins; the
// engine assembles the global evolution, including transit dephasing, partial
// measurements and post-selection.

#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clocksync/channel.hpp"

namespace clocksync {

enum class Actor { Alice, Bob };

inline const char* to_string(Actor a) { return a == Actor::Alice ? "alice" : "bob"; }
inline Owner to_owner(Actor a) { return a == Actor::Alice ? Owner::Alice : Owner::Bob; }

// Hidden clock origins in absolute (external-clock) time. Delta = t0_B - t0_A
// is the synchronization target; it is an engine input, never visible to the
// actors.
struct ClockFrame {
    double t0_alice = 0.0;
    double t0_bob = 0.0;
    double delta() const { return t0_bob - t0_alice; }
    static ClockFrame with_delta(double d) { return {0.0, d}; }
};

// Actions. Matrices on a subsystem use its basis ordering; measurement bases
// are unitary matrices whose columns are the outcome states.
struct Prepare {
    std::vector<Subsystem> subsystems;  // joint pure state over fresh subsystems
    Vector amplitudes;
};
struct ApplyLocal {
    std::vector<SubsystemId> targets;
    Matrix unitary;
};
struct Wait {};  // marks a proper-time point (state snapshot, no operation)
struct Send {
    SubsystemId subsystem;
    double transit = 0.0;  // externally defined flight duration, unknown to actors
};
struct Receive {
    SubsystemId subsystem;  // executes when the system arrives (not before proper_time)
};
struct Measure {
    SubsystemId target;
    Matrix basis;
    std::string label;
};
struct PostSelect {
    SubsystemId target;
    Matrix basis;
    int outcome = 0;
};

using Action = std::variant<Prepare, ApplyLocal, Wait, Send, Receive, Measure, PostSelect>;

struct Event {
    Actor actor;
    double proper_time = 0.0;
    // If set, proper_time counts from this actor's most recent receive instead
    // of from their clock origin (e.g. "bounce the probe back on arrival").
    bool after_receive = false;
    Action action;
};

struct Timeline {
    std::vector<Event> events;
    PhaseModel channel_model = FullyRandom{};
    ClockFrame frame;

    // Structural checks that do not need a frame: per-actor proper times
    // non-decreasing, sends matched with receives of the other actor.
    void validate() const;
};

Timeline with_delta(Timeline t, double delta);
Timeline with_model(Timeline t, PhaseModel m);

// Everything an actor pair can know after a run: outcomes and proper time
// intervals only — no absolute times, no Delta.
struct OutcomeRow {
    Actor actor;
    std::string label;
    double pti = 0.0;
    int outcome = 0;
    double probability = 0.0;
};
struct TransferRow {
    Actor actor;
    SubsystemId subsystem;
    bool sent = false;  // false: received
    double pti = 0.0;
};
struct RunRecord {
    std::vector<OutcomeRow> outcomes;    // exact: full distribution; sampled: drawn outcomes
    std::vector<TransferRow> transfers;  // send/receive PTIs as seen by each actor
    // Joint distribution over measurement-outcome sequences (exact mode).
    std::vector<std::pair<std::vector<int>, double>> joint_outcomes;
    std::vector<int> outcome_sequence;  // sampled mode
    // Each party's reduced state, evaluated at that party's last event.
    Matrix rho_alice, rho_bob;
    double survival_probability = 1.0;
    bool survived = true;  // sampled mode: post-selection matched
};

// Runtime scenario failure with actor/event context.
class ScenarioError : public std::runtime_error {
  public:
    ScenarioError(std::size_t event_index, Actor actor, const std::string& what)
        : std::runtime_error("event " + std::to_string(event_index) + " (" +
                             to_string(actor) + "): " + what),
          event_index(event_index),
          actor(actor) {}
    std::size_t event_index;
    Actor actor;
};

// Exact evolution: averaged transit superoperator, Born-rule branching over
// measurement outcomes, renormalized post-selection.
RunRecord run_exact(const Timeline& t);

// Stochastic trajectories: fresh transit phases per exchange, one sampled
// outcome per measurement. Shot i uses derive_seed(seed, i).
std::vector<RunRecord> run_sampled(const Timeline& t, long shots, std::uint64_t seed);
RunRecord run_one_sampled(const Timeline& t, std::mt19937_64& rng);

// ---- bundled scenarios ------------------------------------------------------

// Slow clock transfer: Alice prepares a qubit clock in |+> at her tau = 0 and
// sends it; Bob reads it out at his proper time measure_delay (X then Y basis
// when with_measurements is set; otherwise just a snapshot point).
Timeline scenario_eddington(double omega, double transit, double measure_delay,
                            bool with_measurements = true);

// Round-trip signaling: Alice sends a probe, Bob bounces it back after
// bob_dwell of his proper time; Alice's (tau_r - tau_s)/2 estimates the
// one-way flight time.
Timeline scenario_einstein(double transit_out, double transit_back, double bob_dwell = 0.0);

// Alice prepares sum_ab chi[a][b] |a>|b> locally and sends the b subsystem to
// Bob; bob_wait is Bob's snapshot proper time. Level structure defaults to
// nondegenerate integer frequencies.
Timeline scenario_entangled_distribution(const Matrix& chi, double transit, double bob_wait,
                                         std::optional<EnergySpec> spec_a = std::nullopt,
                                         std::optional<EnergySpec> spec_b = std::nullopt);

// Insert a post-selection event at the given proper time of `actor`.
Timeline scenario_postselect(Timeline base, Actor actor, const SubsystemId& target, int outcome,
                             const Matrix& basis, double proper_time);

// (tau_receive - tau_send)/2 from Alice's transfer rows.
double einstein_estimate(const RunRecord& rec);

// Common single-qubit bases.
Matrix basis_x();
Matrix basis_y();
Matrix basis_z();

}  // namespace clocksync
