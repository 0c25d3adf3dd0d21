#include "clocksync/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace clocksync {

namespace {

const double kBranchFloor = 1e-14;

struct ResolvedEvent {
    double abs = 0.0;
    std::size_t idx = 0;
    // Receive bookkeeping (from the matched send).
    double transit = 0.0;
    std::vector<double> phases;  // sampled mode only
};

double t0_of(const ClockFrame& f, Actor a) { return a == Actor::Alice ? f.t0_alice : f.t0_bob; }

// Resolve every event to absolute time. Receives execute when the system
// arrives (send time + transit + model delay), or at the receiver's stated
// proper time if that is later. When `rng` is given, stochastic transit
// phases/delays are drawn here, one draw per send, in list order.
std::vector<ResolvedEvent> resolve(const Timeline& t, std::mt19937_64* rng) {
    std::map<std::string, EnergySpec> specs;
    struct PendingSend {
        double abs;
        double transit;
        std::vector<double> phases;
        double delay;
    };
    std::map<std::string, PendingSend> in_flight;
    std::map<Actor, double> last_receive;

    std::vector<ResolvedEvent> out;
    for (std::size_t i = 0; i < t.events.size(); ++i) {
        const Event& ev = t.events[i];
        double base = ev.after_receive
                          ? (last_receive.count(ev.actor)
                                 ? last_receive[ev.actor]
                                 : throw ScenarioError(i, ev.actor, "no prior receive to anchor to"))
                          : t0_of(t.frame, ev.actor);
        ResolvedEvent r;
        r.idx = i;
        r.abs = base + ev.proper_time;

        if (const auto* p = std::get_if<Prepare>(&ev.action)) {
            for (const auto& s : p->subsystems) specs[s.id.value] = s.energies;
        } else if (const auto* s = std::get_if<Send>(&ev.action)) {
            if (s->transit < 0.0) throw ScenarioError(i, ev.actor, "negative transit duration");
            PendingSend ps{r.abs, s->transit, {}, transit_delay_mean(t.channel_model)};
            if (rng) {
                auto it = specs.find(s->subsystem.value);
                if (it == specs.end())
                    throw ScenarioError(i, ev.actor,
                                        "send of unprepared subsystem '" + s->subsystem.value + "'");
                PhaseDraw d = draw_phases(t.channel_model, it->second, *rng);
                ps.phases = std::move(d.phases);
                ps.delay = d.delay;
            }
            in_flight[s->subsystem.value] = std::move(ps);
        } else if (const auto* rc = std::get_if<Receive>(&ev.action)) {
            auto it = in_flight.find(rc->subsystem.value);
            if (it == in_flight.end())
                throw ScenarioError(i, ev.actor,
                                    "receive without matching send for '" + rc->subsystem.value + "'");
            double arrival = it->second.abs + it->second.transit + it->second.delay;
            r.abs = std::max(arrival, r.abs);
            r.transit = it->second.transit;
            r.phases = std::move(it->second.phases);
            in_flight.erase(it);
            last_receive[ev.actor] = r.abs;
        }
        out.push_back(std::move(r));
    }
    if (!in_flight.empty())
        throw ScenarioError(t.events.size() - 1, Actor::Alice,
                            "subsystem left in the channel at end of timeline");

    // Per-actor order must survive resolution.
    std::map<Actor, double> last_abs;
    for (const auto& r : out) {
        Actor a = t.events[r.idx].actor;
        if (last_abs.count(a) && r.abs < last_abs[a] - 1e-12)
            throw ScenarioError(r.idx, a, "event resolves before this actor's previous event");
        last_abs[a] = std::max(last_abs.count(a) ? last_abs[a] : r.abs, r.abs);
    }

    // Execution order: absolute time, ties Alice first then list order.
    // Simultaneous Alice/Bob operations commute, so the tie-break is benign
    // (asserted by tests).
    std::stable_sort(out.begin(), out.end(), [&](const ResolvedEvent& x, const ResolvedEvent& y) {
        if (x.abs != y.abs) return x.abs < y.abs;
        Actor ax = t.events[x.idx].actor, ay = t.events[y.idx].actor;
        if (ax != ay) return ax == Actor::Alice;
        return x.idx < y.idx;
    });
    return out;
}

Matrix projector_on(const CompositeState& state, const SubsystemId& target, const Matrix& basis,
                    int outcome) {
    Vector col = basis.col(outcome);
    Matrix p = col * col.adjoint();
    return state.lift({target}, p);
}

void check_basis(const Matrix& basis, const CompositeState& state, const SubsystemId& target,
                 std::size_t idx, Actor actor) {
    std::size_t d = state.subsystems()[state.position_of(target)].energies.dim();
    if (static_cast<std::size_t>(basis.rows()) != d || !is_unitary(basis))
        throw ScenarioError(idx, actor, "measurement basis is not a unitary of the target dimension");
}

void check_owned(const CompositeState& state, const SubsystemId& id, Actor actor,
                 std::size_t idx) {
    if (!state.ledger().contains(id))
        throw ScenarioError(idx, actor, "unknown subsystem '" + id.value + "'");
    if (state.owner_of(id) != to_owner(actor))
        throw ScenarioError(idx, actor, "subsystem '" + id.value + "' is not owned by " +
                                            to_string(actor));
}

Matrix reduced_for(const CompositeState& state, Owner owner) {
    std::vector<SubsystemId> keep;
    for (const auto& s : state.subsystems())
        if (state.owner_of(s.id) == owner) keep.push_back(s.id);
    if (keep.empty()) return Matrix::Ones(1, 1);
    return state.partial_trace(keep).rho();
}

}  // namespace

void Timeline::validate() const {
    std::map<Actor, double> last_pt;
    std::map<std::string, Actor> in_flight;
    std::map<std::string, bool> prepared;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& ev = events[i];
        if (ev.proper_time < 0.0) throw ScenarioError(i, ev.actor, "negative proper time");
        if (!ev.after_receive) {
            if (last_pt.count(ev.actor) && ev.proper_time < last_pt[ev.actor])
                throw ScenarioError(i, ev.actor, "proper times must be non-decreasing");
            last_pt[ev.actor] = ev.proper_time;
        }
        if (const auto* p = std::get_if<Prepare>(&ev.action)) {
            for (const auto& s : p->subsystems) {
                if (prepared.count(s.id.value))
                    throw ScenarioError(i, ev.actor, "duplicate subsystem '" + s.id.value + "'");
                prepared[s.id.value] = true;
                s.energies.validate();
            }
        } else if (const auto* s = std::get_if<Send>(&ev.action)) {
            if (in_flight.count(s->subsystem.value))
                throw ScenarioError(i, ev.actor, "subsystem already in transit");
            in_flight[s->subsystem.value] = ev.actor;
        } else if (const auto* r = std::get_if<Receive>(&ev.action)) {
            auto it = in_flight.find(r->subsystem.value);
            if (it == in_flight.end())
                throw ScenarioError(i, ev.actor, "receive without a matching send");
            if (it->second == ev.actor)
                throw ScenarioError(i, ev.actor, "actor cannot receive their own send");
            in_flight.erase(it);
        }
    }
    if (!in_flight.empty())
        throw std::invalid_argument("timeline: subsystem never received");
}

Timeline with_delta(Timeline t, double delta) {
    t.frame = ClockFrame::with_delta(delta);
    return t;
}

Timeline with_model(Timeline t, PhaseModel m) {
    t.channel_model = std::move(m);
    return t;
}

RunRecord run_exact(const Timeline& t) {
    t.validate();
    validate(t.channel_model);
    auto schedule = resolve(t, nullptr);

    struct Branch {
        double weight;
        CompositeState state;
        std::vector<int> outcomes;
    };
    std::vector<Branch> branches{{1.0, CompositeState{}, {}}};

    RunRecord rec;
    std::map<Actor, Matrix> snapshot;
    double now = schedule.empty() ? 0.0 : schedule.front().abs;

    for (const auto& r : schedule) {
        const Event& ev = t.events[r.idx];
        const double dt = r.abs - now;
        if (dt > 0.0)
            for (auto& b : branches) b.state = b.state.free_evolve_all(dt);
        now = r.abs;
        const double pti = r.abs - t0_of(t.frame, ev.actor);

        if (const auto* p = std::get_if<Prepare>(&ev.action)) {
            CompositeState fresh =
                CompositeState::from_pure(p->subsystems, p->amplitudes, to_owner(ev.actor), r.abs);
            for (auto& b : branches) b.state = tensor(b.state, fresh);
        } else if (const auto* a = std::get_if<ApplyLocal>(&ev.action)) {
            for (const auto& id : a->targets) check_owned(branches.front().state, id, ev.actor, r.idx);
            for (auto& b : branches) b.state = b.state.apply_unitary(a->targets, a->unitary);
        } else if (std::get_if<Wait>(&ev.action)) {
            // snapshot point only
        } else if (const auto* s = std::get_if<Send>(&ev.action)) {
            check_owned(branches.front().state, s->subsystem, ev.actor, r.idx);
            for (auto& b : branches) b.state = b.state.transfer(s->subsystem, Owner::Channel, r.abs);
            rec.transfers.push_back({ev.actor, s->subsystem, true, pti});
        } else if (const auto* rc = std::get_if<Receive>(&ev.action)) {
            for (auto& b : branches) {
                b.state = apply_transit(b.state, rc->subsystem, t.channel_model, r.transit);
                b.state = b.state.transfer(rc->subsystem, to_owner(ev.actor), r.abs);
            }
            rec.transfers.push_back({ev.actor, rc->subsystem, false, pti});
        } else if (const auto* m = std::get_if<Measure>(&ev.action)) {
            check_owned(branches.front().state, m->target, ev.actor, r.idx);
            check_basis(m->basis, branches.front().state, m->target, r.idx, ev.actor);
            const int nout = static_cast<int>(m->basis.cols());
            std::vector<double> marginal(nout, 0.0);
            std::vector<Branch> next;
            for (const auto& b : branches) {
                for (int k = 0; k < nout; ++k) {
                    Matrix proj = projector_on(b.state, m->target, m->basis, k);
                    Matrix post = proj * b.state.rho() * proj.adjoint();
                    double p = post.trace().real();
                    marginal[k] += b.weight * p;
                    if (b.weight * p < kBranchFloor) continue;
                    Branch nb{b.weight * p, b.state.with_rho(post / p), b.outcomes};
                    nb.state.hermitize();
                    nb.outcomes.push_back(k);
                    next.push_back(std::move(nb));
                }
            }
            branches = std::move(next);
            for (int k = 0; k < nout; ++k)
                rec.outcomes.push_back({ev.actor, m->label, pti, k, marginal[k]});
        } else if (const auto* ps = std::get_if<PostSelect>(&ev.action)) {
            check_owned(branches.front().state, ps->target, ev.actor, r.idx);
            check_basis(ps->basis, branches.front().state, ps->target, r.idx, ev.actor);
            double total = 0.0;
            std::vector<Branch> next;
            for (const auto& b : branches) {
                Matrix proj = projector_on(b.state, ps->target, ps->basis, ps->outcome);
                Matrix post = proj * b.state.rho() * proj.adjoint();
                double p = post.trace().real();
                total += b.weight * p;
                if (b.weight * p < kBranchFloor) continue;
                Branch nb{b.weight * p, b.state.with_rho(post / p), b.outcomes};
                nb.state.hermitize();
                next.push_back(std::move(nb));
            }
            if (total < kBranchFloor)
                throw ScenarioError(r.idx, ev.actor, "post-selection on a zero-probability outcome");
            for (auto& b : next) b.weight /= total;
            branches = std::move(next);
            rec.survival_probability *= total;
        }

        snapshot[ev.actor] = [&] {
            Matrix acc;
            for (const auto& b : branches) {
                Matrix red = b.weight * reduced_for(b.state, to_owner(ev.actor));
                acc = (acc.size() == 0) ? red : Matrix(acc + red);
            }
            return acc;
        }();
    }

    for (Actor a : {Actor::Alice, Actor::Bob}) {
        Matrix& dst = (a == Actor::Alice) ? rec.rho_alice : rec.rho_bob;
        if (snapshot.count(a)) {
            dst = snapshot[a];
        } else {
            Matrix acc;
            for (const auto& b : branches) {
                Matrix red = b.weight * reduced_for(b.state, to_owner(a));
                acc = (acc.size() == 0) ? red : Matrix(acc + red);
            }
            dst = acc.size() == 0 ? Matrix::Ones(1, 1) : acc;
        }
    }

    std::map<std::vector<int>, double> joint;
    for (const auto& b : branches) joint[b.outcomes] += b.weight;
    for (auto& [seq, w] : joint) rec.joint_outcomes.emplace_back(seq, w);
    return rec;
}

RunRecord run_one_sampled(const Timeline& t, std::mt19937_64& rng) {
    t.validate();
    validate(t.channel_model);
    auto schedule = resolve(t, &rng);

    CompositeState state;
    RunRecord rec;
    std::map<Actor, Matrix> snapshot;
    double now = schedule.empty() ? 0.0 : schedule.front().abs;
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    auto sample_outcome = [&](const SubsystemId& target, const Matrix& basis) {
        const int nout = static_cast<int>(basis.cols());
        std::vector<double> probs(nout);
        std::vector<Matrix> post(nout);
        for (int k = 0; k < nout; ++k) {
            Matrix proj = projector_on(state, target, basis, k);
            post[k] = proj * state.rho() * proj.adjoint();
            probs[k] = std::max(0.0, post[k].trace().real());
        }
        double total = 0.0;
        for (double p : probs) total += p;
        double u = coin(rng) * total, cum = 0.0;
        int drawn = nout - 1;
        for (int k = 0; k < nout; ++k) {
            cum += probs[k];
            if (u <= cum) { drawn = k; break; }
        }
        state = state.with_rho(post[drawn] / probs[drawn]);
        state.hermitize();
        return std::pair<int, double>{drawn, probs[drawn] / total};
    };

    for (const auto& r : schedule) {
        const Event& ev = t.events[r.idx];
        const double dt = r.abs - now;
        if (dt > 0.0) state = state.free_evolve_all(dt);
        now = r.abs;
        const double pti = r.abs - t0_of(t.frame, ev.actor);

        if (const auto* p = std::get_if<Prepare>(&ev.action)) {
            state = tensor(state, CompositeState::from_pure(p->subsystems, p->amplitudes,
                                                            to_owner(ev.actor), r.abs));
        } else if (const auto* a = std::get_if<ApplyLocal>(&ev.action)) {
            for (const auto& id : a->targets) check_owned(state, id, ev.actor, r.idx);
            state = state.apply_unitary(a->targets, a->unitary);
        } else if (std::get_if<Wait>(&ev.action)) {
        } else if (const auto* s = std::get_if<Send>(&ev.action)) {
            check_owned(state, s->subsystem, ev.actor, r.idx);
            state = state.transfer(s->subsystem, Owner::Channel, r.abs);
            rec.transfers.push_back({ev.actor, s->subsystem, true, pti});
        } else if (const auto* rc = std::get_if<Receive>(&ev.action)) {
            const EnergySpec& spec =
                state.subsystems()[state.position_of(rc->subsystem)].energies;
            Matrix u = transit_unitary(spec, r.transit, r.phases);
            state = state.apply_unitary({rc->subsystem}, u);
            state = state.transfer(rc->subsystem, to_owner(ev.actor), r.abs);
            rec.transfers.push_back({ev.actor, rc->subsystem, false, pti});
        } else if (const auto* m = std::get_if<Measure>(&ev.action)) {
            check_owned(state, m->target, ev.actor, r.idx);
            check_basis(m->basis, state, m->target, r.idx, ev.actor);
            auto [k, p] = sample_outcome(m->target, m->basis);
            rec.outcomes.push_back({ev.actor, m->label, pti, k, p});
            rec.outcome_sequence.push_back(k);
        } else if (const auto* ps = std::get_if<PostSelect>(&ev.action)) {
            check_owned(state, ps->target, ev.actor, r.idx);
            check_basis(ps->basis, state, ps->target, r.idx, ev.actor);
            auto [k, p] = sample_outcome(ps->target, ps->basis);
            if (k != ps->outcome) {
                rec.survived = false;
                rec.survival_probability = 0.0;
            }
        }
        snapshot[ev.actor] = reduced_for(state, to_owner(ev.actor));
    }

    rec.rho_alice = snapshot.count(Actor::Alice) ? snapshot[Actor::Alice]
                                                 : reduced_for(state, Owner::Alice);
    rec.rho_bob = snapshot.count(Actor::Bob) ? snapshot[Actor::Bob]
                                             : reduced_for(state, Owner::Bob);
    return rec;
}

std::vector<RunRecord> run_sampled(const Timeline& t, long shots, std::uint64_t seed) {
    if (shots < 1) throw std::invalid_argument("run_sampled: shots must be >= 1");
    std::vector<RunRecord> out;
    out.reserve(shots);
    for (long i = 0; i < shots; ++i) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        out.push_back(run_one_sampled(t, rng));
    }
    return out;
}

// ---- scenarios --------------------------------------------------------------

Matrix basis_z() { return Matrix::Identity(2, 2); }

Matrix basis_x() {
    Matrix b(2, 2);
    b << 1, 1, 1, -1;
    return b / std::sqrt(2.0);
}

Matrix basis_y() {
    Matrix b(2, 2);
    b << Complex(1, 0), Complex(1, 0), Complex(0, 1), Complex(0, -1);
    return b / std::sqrt(2.0);
}

Timeline scenario_eddington(double omega, double transit, double measure_delay,
                            bool with_measurements) {
    if (omega <= 0.0 || transit <= 0.0 || measure_delay <= 0.0)
        throw std::invalid_argument("scenario_eddington: parameters must be positive");
    SubsystemId clock{"clock"};
    Vector plus(2);
    plus << 1, 1;
    plus /= std::sqrt(2.0);

    Timeline t;
    t.events.push_back({Actor::Alice, 0.0, false,
                        Prepare{{{clock, EnergySpec::qubit(omega)}}, plus}});
    t.events.push_back({Actor::Alice, 0.0, false, Send{clock, transit}});
    t.events.push_back({Actor::Bob, 0.0, false, Receive{clock}});
    t.events.push_back({Actor::Bob, measure_delay, false, Wait{}});
    if (with_measurements) {
        t.events.push_back({Actor::Bob, measure_delay, false, Measure{clock, basis_x(), "x"}});
        t.events.push_back({Actor::Bob, measure_delay, false, Measure{clock, basis_y(), "y"}});
    }
    return t;
}

Timeline scenario_einstein(double transit_out, double transit_back, double bob_dwell) {
    if (transit_out <= 0.0 || transit_back <= 0.0 || bob_dwell < 0.0)
        throw std::invalid_argument("scenario_einstein: transits must be positive");
    SubsystemId probe{"probe"};
    Vector plus(2);
    plus << 1, 1;
    plus /= std::sqrt(2.0);

    Timeline t;
    t.events.push_back({Actor::Alice, 0.0, false,
                        Prepare{{{probe, EnergySpec::qubit(1.0)}}, plus}});
    t.events.push_back({Actor::Alice, 0.0, false, Send{probe, transit_out}});
    t.events.push_back({Actor::Bob, 0.0, false, Receive{probe}});
    t.events.push_back({Actor::Bob, bob_dwell, true, Send{probe, transit_back}});
    t.events.push_back({Actor::Alice, 0.0, false, Receive{probe}});
    return t;
}

Timeline scenario_entangled_distribution(const Matrix& chi, double transit, double bob_wait,
                                         std::optional<EnergySpec> spec_a,
                                         std::optional<EnergySpec> spec_b) {
    if (chi.rows() < 2 || chi.cols() < 2)
        throw std::invalid_argument("scenario_entangled_distribution: chi must be at least 2x2");
    if (std::abs(chi.squaredNorm() - 1.0) > 1e-10)
        throw std::invalid_argument(
            "scenario_entangled_distribution: chi coefficients must be normalized");
    auto default_spec = [](int n) {
        std::vector<double> w;
        for (int i = 0; i < n; ++i) w.push_back(static_cast<double>(i));
        return EnergySpec::nondegenerate(w);
    };
    EnergySpec sa = spec_a.value_or(default_spec(static_cast<int>(chi.rows())));
    EnergySpec sb = spec_b.value_or(default_spec(static_cast<int>(chi.cols())));
    if (sa.dim() != chi.rows() || sb.dim() != chi.cols())
        throw std::invalid_argument("scenario_entangled_distribution: spec dimensions mismatch chi");

    Vector amps(chi.size());
    for (int a = 0; a < chi.rows(); ++a)
        for (int b = 0; b < chi.cols(); ++b) amps(a * chi.cols() + b) = chi(a, b);

    SubsystemId ia{"a"}, ib{"b"};
    Timeline t;
    t.events.push_back({Actor::Alice, 0.0, false, Prepare{{{ia, sa}, {ib, sb}}, amps}});
    t.events.push_back({Actor::Alice, 0.0, false, Send{ib, transit}});
    t.events.push_back({Actor::Bob, 0.0, false, Receive{ib}});
    t.events.push_back({Actor::Bob, bob_wait, false, Wait{}});
    return t;
}

Timeline scenario_postselect(Timeline base, Actor actor, const SubsystemId& target, int outcome,
                             const Matrix& basis, double proper_time) {
    Event ev{actor, proper_time, false, PostSelect{target, basis, outcome}};
    auto it = std::find_if(base.events.begin(), base.events.end(), [&](const Event& e) {
        return e.actor == actor && !e.after_receive && e.proper_time > proper_time;
    });
    base.events.insert(it, std::move(ev));
    return base;
}

double einstein_estimate(const RunRecord& rec) {
    std::optional<double> sent, received;
    for (const auto& tr : rec.transfers) {
        if (tr.actor != Actor::Alice) continue;
        if (tr.sent && !sent) sent = tr.pti;
        if (!tr.sent && !received) received = tr.pti;
    }
    if (!sent || !received)
        throw std::invalid_argument("einstein_estimate: record lacks Alice send/receive PTIs");
    return (*received - *sent) / 2.0;
}

}  // namespace clocksync
