#include "clocksync/channel.hpp"

#include <cmath>
#include <numbers>

namespace clocksync {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// sin(x)/x, stable near zero.
double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

}  // namespace

void validate(const PhaseModel& model) {
    if (const auto* m = std::get_if<Mixture>(&model)) {
        if (m->epsilon < 0.0 || m->epsilon > 1.0)
            throw std::invalid_argument("PhaseModel: mixture epsilon must lie in [0,1]");
    } else if (const auto* r = std::get_if<RandomDelay>(&model)) {
        if (r->sigma < 0.0)
            throw std::invalid_argument("PhaseModel: random-delay sigma must be >= 0");
    }
}

double transit_delay_mean(const PhaseModel& model) {
    if (const auto* n = std::get_if<Noiseless>(&model)) return n->fixed_delay;
    return 0.0;
}

DeltaMatrix delta_matrix(const PhaseModel& model, const EnergySpec& energies) {
    validate(model);
    energies.validate();
    const int n = energies.sectors();
    Matrix d(n, n);
    for (int e = 0; e < n; ++e) {
        for (int ep = 0; ep < n; ++ep) {
            const double dw = energies.levels[e].omega - energies.levels[ep].omega;
            Complex v;
            if (const auto* nl = std::get_if<Noiseless>(&model)) {
                v = std::polar(1.0, -dw * nl->fixed_delay);
            } else if (const auto* mx = std::get_if<Mixture>(&model)) {
                v = (1.0 - mx->epsilon) + (e == ep ? mx->epsilon : 0.0);
            } else if (const auto* rd = std::get_if<RandomDelay>(&model)) {
                if (rd->dist == DelayDist::Gaussian)
                    v = std::exp(-dw * dw * rd->sigma * rd->sigma / 2.0);
                else
                    v = sinc(dw * rd->sigma * std::sqrt(3.0));
            } else {
                v = (e == ep) ? 1.0 : 0.0;
            }
            d(e, ep) = v;
        }
    }
    return DeltaMatrix{std::move(d), model, energies};
}

PhaseDraw draw_phases(const PhaseModel& model, const EnergySpec& energies, std::mt19937_64& rng) {
    validate(model);
    const int n = energies.sectors();
    PhaseDraw out;
    out.phases.resize(n);
    std::uniform_real_distribution<double> uni(0.0, kTwoPi);
    if (const auto* nl = std::get_if<Noiseless>(&model)) {
        for (int e = 0; e < n; ++e) out.phases[e] = energies.levels[e].omega * nl->fixed_delay;
        out.delay = nl->fixed_delay;
    } else if (const auto* mx = std::get_if<Mixture>(&model)) {
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        if (coin(rng) < 1.0 - mx->epsilon) {
            const double shared = uni(rng);
            for (int e = 0; e < n; ++e) out.phases[e] = shared;
        } else {
            for (int e = 0; e < n; ++e) out.phases[e] = uni(rng);
        }
    } else if (const auto* rd = std::get_if<RandomDelay>(&model)) {
        double theta;
        if (rd->dist == DelayDist::Gaussian) {
            std::normal_distribution<double> g(0.0, rd->sigma);
            theta = g(rng);
        } else {
            const double half = rd->sigma * std::sqrt(3.0);
            std::uniform_real_distribution<double> u(-half, half);
            theta = u(rng);
        }
        for (int e = 0; e < n; ++e) out.phases[e] = energies.levels[e].omega * theta;
        out.delay = theta;
    } else {
        for (int e = 0; e < n; ++e) out.phases[e] = uni(rng);
    }
    return out;
}

Matrix transit_unitary(const EnergySpec& energies, double transit,
                       const std::vector<double>& phases) {
    if (static_cast<int>(phases.size()) != energies.sectors())
        throw std::invalid_argument("transit_unitary: one phase per sector required");
    const int d = energies.dim();
    const auto sector = energies.sector_by_index();
    const auto omega = energies.omega_by_index();
    Matrix u = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        u(i, i) = std::polar(1.0, -(omega[i] * transit + phases[sector[i]]));
    return u;
}

Matrix sample_transit(const PhaseModel& model, const EnergySpec& energies, double transit,
                      std::mt19937_64& rng) {
    return transit_unitary(energies, transit, draw_phases(model, energies, rng).phases);
}

CompositeState apply_transit(const CompositeState& s, const SubsystemId& id,
                             const PhaseModel& model, double transit) {
    if (s.owner_of(id) != Owner::Channel)
        throw std::invalid_argument("apply_transit: subsystem '" + id.value +
                                    "' is not in the channel");
    const std::size_t pos = s.position_of(id);
    const EnergySpec& spec = s.subsystems()[pos].energies;
    const DeltaMatrix delta = delta_matrix(model, spec);
    const auto sector = spec.sector_by_index();
    const auto omega = spec.omega_by_index();

    CompositeState out = s;
    out.scale_coherences(pos, [&](int li, int lj) {
        return std::polar(1.0, -(omega[li] - omega[lj]) * transit) *
               delta.entries(sector[li], sector[lj]);
    });
    out.hermitize();
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace clocksync
