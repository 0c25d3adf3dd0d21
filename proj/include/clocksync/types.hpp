// types.hpp — subsystem labels, energy eigenstructure, ownership ledger.

#pragma once

#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace clocksync {

// Numerical tolerances used by the state validity checks.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;

struct SubsystemId {
    std::string value;
    auto operator<=>(const SubsystemId&) const = default;
};

// One energy sector: eigenfrequency omega (rad/time, hbar = 1) and the
// number of degenerate levels it contains.
struct EnergyLevel {
    double omega = 0.0;
    int degeneracy = 1;
};

// Energy eigenstructure of a finite-level system. Basis ordering is sector
// index ascending, degeneracy label ascending, so sector projectors are
// contiguous diagonal blocks.
struct EnergySpec {
    std::vector<EnergyLevel> levels;

    static EnergySpec qubit(double omega) {
        return EnergySpec{{{0.0, 1}, {omega, 1}}};
    }
    static EnergySpec nondegenerate(const std::vector<double>& omegas) {
        EnergySpec s;
        for (double w : omegas) s.levels.push_back({w, 1});
        return s;
    }
    static EnergySpec degenerate(double omega, int d) {
        return EnergySpec{{{omega, d}}};
    }

    int dim() const {
        int n = 0;
        for (const auto& l : levels) n += l.degeneracy;
        return n;
    }
    int sectors() const { return static_cast<int>(levels.size()); }

    // Sector index for each basis index.
    std::vector<int> sector_by_index() const {
        std::vector<int> out;
        for (int e = 0; e < sectors(); ++e)
            for (int d = 0; d < levels[e].degeneracy; ++d) out.push_back(e);
        return out;
    }
    // Eigenfrequency for each basis index.
    std::vector<double> omega_by_index() const {
        std::vector<double> out;
        for (const auto& l : levels)
            for (int d = 0; d < l.degeneracy; ++d) out.push_back(l.omega);
        return out;
    }

    void validate() const {
        if (levels.empty()) throw std::invalid_argument("EnergySpec: no levels");
        for (std::size_t e = 0; e < levels.size(); ++e) {
            if (levels[e].degeneracy < 1)
                throw std::invalid_argument("EnergySpec: degeneracy must be >= 1");
            if (e > 0 && !(levels[e].omega > levels[e - 1].omega))
                throw std::invalid_argument("EnergySpec: omegas must be strictly increasing");
        }
    }
};

enum class Owner { Alice, Channel, Bob };

inline const char* to_string(Owner o) {
    switch (o) {
        case Owner::Alice: return "alice";
        case Owner::Channel: return "channel";
        case Owner::Bob: return "bob";
    }
    return "?";
}

struct TransferEntry {
    double time;
    SubsystemId id;
    Owner from;
    Owner to;
};

// Tracks who may act on each subsystem, with an append-only transfer history.
// Transfers must pass through the channel: Alice <-> Channel <-> Bob, never
// Alice <-> Bob directly.
class OwnershipLedger {
  public:
    void add(const SubsystemId& id, Owner owner, double time) {
        if (owners_.count(id.value))
            throw std::invalid_argument("ledger: duplicate subsystem '" + id.value + "'");
        owners_[id.value] = owner;
        last_time_[id.value] = time;
    }

    bool contains(const SubsystemId& id) const { return owners_.count(id.value) > 0; }

    Owner owner_of(const SubsystemId& id) const {
        auto it = owners_.find(id.value);
        if (it == owners_.end())
            throw std::invalid_argument("ledger: unknown subsystem '" + id.value + "'");
        return it->second;
    }

    void transfer(const SubsystemId& id, Owner to, double time) {
        Owner from = owner_of(id);
        bool legal = (from == Owner::Channel && to != Owner::Channel) ||
                     (from != Owner::Channel && to == Owner::Channel);
        if (!legal)
            throw std::invalid_argument(std::string("ledger: illegal transfer ") +
                                        to_string(from) + " -> " + to_string(to) +
                                        " for '" + id.value + "'");
        if (time < last_time_.at(id.value))
            throw std::invalid_argument("ledger: transfer of '" + id.value +
                                        "' predates its previous transfer");
        owners_[id.value] = to;
        last_time_[id.value] = time;
        history_.push_back({time, id, from, to});
    }

    void merge(const OwnershipLedger& other) {
        for (const auto& [k, v] : other.owners_) {
            if (owners_.count(k))
                throw std::invalid_argument("ledger: duplicate subsystem '" + k + "'");
            owners_[k] = v;
            last_time_[k] = other.last_time_.at(k);
        }
        history_.insert(history_.end(), other.history_.begin(), other.history_.end());
    }

    const std::vector<TransferEntry>& history() const { return history_; }

  private:
    std::map<std::string, Owner> owners_;
    std::map<std::string, double> last_time_;
    std::vector<TransferEntry> history_;
};

}  // namespace clocksync
