// state.hpp — multipartite density-matrix state with an ownership partition.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <vector>

#include "clocksync/types.hpp"

namespace clocksync {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct Subsystem {
    SubsystemId id;
    EnergySpec energies;
};

bool is_unitary(const Matrix& u, double tol = kUnitaryTol);

// Density matrix over an ordered list of finite-level subsystems, value
// semantic: every operation returns a new state. The first subsystem is the
// most significant index (Kronecker convention).
class CompositeState {
  public:
    // Trivial state: no subsystems, rho = [1].
    CompositeState();

    static CompositeState from_pure(std::vector<Subsystem> subsystems,
                                    const Vector& amplitudes, Owner owner, double time);
    static CompositeState from_density(std::vector<Subsystem> subsystems, Matrix rho,
                                       Owner owner, double time);

    std::size_t dim() const { return static_cast<std::size_t>(rho_.rows()); }
    const std::vector<Subsystem>& subsystems() const { return subsystems_; }
    const Matrix& rho() const { return rho_; }
    const OwnershipLedger& ledger() const { return ledger_; }
    Owner owner_of(const SubsystemId& id) const { return ledger_.owner_of(id); }

    std::size_t position_of(const SubsystemId& id) const;
    // Level index of subsystem at `position` encoded in a flat basis index.
    int level_of(std::size_t flat_index, std::size_t position) const;

    // Reduced state over `keep`, in original relative order. Trace preserved.
    CompositeState partial_trace(const std::vector<SubsystemId>& keep) const;

    // rho <- U rho U† with u lifted to the full space. All targets must share
    // one owner (locality of the partition).
    CompositeState apply_unitary(const std::vector<SubsystemId>& targets, const Matrix& u) const;

    // exp(-i sum_e P_e omega_e dt) on each target.
    CompositeState free_evolve(const std::vector<SubsystemId>& targets, double dt) const;
    CompositeState free_evolve_all(double dt) const;

    CompositeState transfer(const SubsystemId& id, Owner to, double time) const;

    // Same metadata, different matrix. No validity check; callers renormalize.
    CompositeState with_rho(Matrix rho) const;

    // Multiply rho(I,J) by factor(level_I, level_J) of the subsystem at
    // `position`; used by the dephasing channel.
    void scale_coherences(std::size_t position, const std::function<Complex(int, int)>& factor);

    // Lift an operator on `targets` (in the given order) to the full space.
    Matrix lift(const std::vector<SubsystemId>& targets, const Matrix& op) const;

    void hermitize() { rho_ = ((rho_ + rho_.adjoint()) / 2.0).eval(); }
    void validate(double trace_tol = kTraceTol) const;

    friend CompositeState tensor(const CompositeState& a, const CompositeState& b);

  private:
    std::vector<Subsystem> subsystems_;
    std::vector<int> dims_;
    Matrix rho_;
    OwnershipLedger ledger_;

    void rebuild_dims();
    void free_phase(const std::vector<SubsystemId>& targets, double dt);
    std::vector<int> digits(std::size_t flat) const;
};

// Kronecker product of two states with disjoint subsystem ids.
CompositeState tensor(const CompositeState& a, const CompositeState& b);

}  // namespace clocksync
