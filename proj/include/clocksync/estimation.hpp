// estimation.hpp — quantitative probes of extractable timing information:
// trace distance, quantum Fisher information, maximum-likelihood offset
// recovery and no-go sweeps.

#pragma once

#include <functional>

#include "clocksync/timeline.hpp"

namespace clocksync {

// (1/2) sum of singular values of a - b; in [0, 1] for valid states.
double trace_distance(const Matrix& a, const Matrix& b);

struct FisherReport {
    std::string parameter;
    double at = 0.0;
    double qfi = 0.0;
    double step = 0.0;
    double eigen_cutoff = 0.0;
};

// Quantum Fisher information of the family `state_of` at `at`, via a central
// finite difference of rho and the spectral form of the symmetric logarithmic
// derivative: 2 sum_{ij: l_i+l_j > cutoff} |<i|drho|j>|^2 / (l_i + l_j).
FisherReport qfi(const std::function<Matrix(double)>& state_of, double at, double step = 1e-4,
                 double eigen_cutoff = 1e-12, const std::string& parameter = "delta");

struct OffsetEstimate {
    double estimate = 0.0;
    std::vector<double> grid;
    std::vector<double> log_likelihood;
    long shots = 0;
    double std_error = 0.0;
};

// Simulate `shots` runs at true_delta, then maximize over the candidate grid
// the log-likelihood of the observed outcome sequences under the exact
// outcome law. Standard error from a local quadratic fit of the profile.
OffsetEstimate mle_offset(const Timeline& t, double true_delta, long shots,
                          const std::vector<double>& grid, std::uint64_t seed);

struct NogoRow {
    double noise_value = 0.0;
    double trace_distance_max = 0.0;
    double qfi_mid = 0.0;
};

// For each (noise value, model): max pairwise trace distance of the
// estimating party's reduced state over the Delta grid, and QFI at the grid
// midpoint. Rows sorted by noise value.
std::vector<NogoRow> nogo_sweep(const Timeline& t, const std::vector<double>& delta_grid,
                                const std::vector<std::pair<double, PhaseModel>>& models,
                                Actor party = Actor::Bob);

// Reduced state of `party` after an exact run at the given offset.
Matrix party_state(const Timeline& t, double delta, Actor party);

}  // namespace clocksync
