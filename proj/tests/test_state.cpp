#include <doctest.h>

#include <random>

#include "clocksync/state.hpp"

using namespace clocksync;

namespace {

CompositeState qubit_state(const std::string& id, const Vector& amps, double omega = 1.0,
                           Owner owner = Owner::Alice) {
    return CompositeState::from_pure({{SubsystemId{id}, EnergySpec::qubit(omega)}}, amps, owner,
                                     0.0);
}

Vector ket0() {
    Vector v(2);
    v << 1, 0;
    return v;
}
Vector ket1() {
    Vector v(2);
    v << 0, 1;
    return v;
}
Vector ket_plus() {
    Vector v(2);
    v << 1, 1;
    return v / std::sqrt(2.0);
}

Matrix random_density(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
    Matrix rho = a * a.adjoint();
    return rho / rho.trace().real();
}

Matrix random_unitary(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ();
}

// Independent element-wise partial trace over the second of two qubits:
// out[i][j] = sum_k <ik|rho|jk>.
Matrix trace_out_second_qubit(const Matrix& rho) {
    Matrix out = Matrix::Zero(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out(i, j) += rho(2 * i + k, 2 * j + k);
    return out;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("tensor of basis states") {
    auto a = qubit_state("a", ket0());
    auto b = qubit_state("b", ket0(), 1.0, Owner::Bob);
    auto t = tensor(a, b);
    CHECK(t.dim() == 4);
    CHECK(t.rho()(0, 0) == Complex(1, 0));
    CHECK(t.rho().cwiseAbs().sum() == doctest::Approx(1.0));
    CHECK(t.owner_of({"a"}) == Owner::Alice);
    CHECK(t.owner_of({"b"}) == Owner::Bob);
}

TEST_CASE("tensor with a trivial one-level system leaves the matrix unchanged") {
    auto a = qubit_state("a", ket_plus());
    auto trivial = CompositeState::from_pure({{SubsystemId{"t"}, EnergySpec::degenerate(0.0, 1)}},
                                             Vector::Ones(1), Owner::Alice, 0.0);
    auto t = tensor(a, trivial);
    CHECK(max_abs(t.rho() - a.rho()) < 1e-15);
}

TEST_CASE("tensor of |+><+| with itself is the uniform matrix") {
    auto a = qubit_state("a", ket_plus());
    auto b = qubit_state("b", ket_plus());
    auto t = tensor(a, b);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(t.rho()(i, j).real() == doctest::Approx(0.25));
}

TEST_CASE("tensor rejects duplicate subsystem ids") {
    auto a = qubit_state("a", ket0());
    auto b = qubit_state("a", ket0());
    CHECK_THROWS_AS(tensor(a, b), std::invalid_argument);
}

TEST_CASE("partial trace of a Bell state is maximally mixed") {
    Vector bell(4);
    bell << 1, 0, 0, 1;
    bell /= std::sqrt(2.0);
    auto s = CompositeState::from_pure(
        {{SubsystemId{"a"}, EnergySpec::qubit(1.0)}, {SubsystemId{"b"}, EnergySpec::qubit(1.0)}},
        bell, Owner::Alice, 0.0);
    auto r = s.partial_trace({{"b"}});
    CHECK(max_abs(r.rho() - Matrix::Identity(2, 2) / 2.0) < 1e-14);
}

TEST_CASE("partial trace of a product state recovers the factor") {
    std::mt19937_64 rng(7);
    auto a = CompositeState::from_density({{SubsystemId{"a"}, EnergySpec::qubit(1.0)}},
                                          random_density(2, rng), Owner::Alice, 0.0);
    auto b = CompositeState::from_density({{SubsystemId{"b"}, EnergySpec::qubit(2.0)}},
                                          random_density(2, rng), Owner::Bob, 0.0);
    auto t = tensor(a, b);
    CHECK(max_abs(t.partial_trace({{"a"}}).rho() - a.rho()) < 1e-12);
    CHECK(max_abs(t.partial_trace({{"b"}}).rho() - b.rho()) < 1e-12);
}

TEST_CASE("partial trace matches the index-summation oracle on random states") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = CompositeState::from_density(
            {{SubsystemId{"a"}, EnergySpec::qubit(1.0)}, {SubsystemId{"b"}, EnergySpec::qubit(2.0)}},
            random_density(4, rng), Owner::Alice, 0.0);
        CHECK(max_abs(s.partial_trace({{"a"}}).rho() - trace_out_second_qubit(s.rho())) < 1e-12);
        CHECK(std::abs(s.partial_trace({{"a"}}).rho().trace().real() - 1.0) < 1e-12);
    }
}

TEST_CASE("partial trace rejects unknown ids and empty keep sets") {
    auto a = qubit_state("a", ket0());
    CHECK_THROWS_AS(a.partial_trace({{"zz"}}), std::invalid_argument);
    CHECK_THROWS_AS(a.partial_trace({}), std::invalid_argument);
}

TEST_CASE("identity unitary leaves the state unchanged") {
    auto a = qubit_state("a", ket_plus());
    auto out = a.apply_unitary({{"a"}}, Matrix::Identity(2, 2));
    CHECK(max_abs(out.rho() - a.rho()) < 1e-15);
}

TEST_CASE("X on the first qubit flips |00> to |10>") {
    auto s = tensor(qubit_state("a", ket0()), qubit_state("b", ket0()));
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    auto out = s.apply_unitary({{"a"}}, x);
    CHECK(out.rho()(2, 2).real() == doctest::Approx(1.0));
}

TEST_CASE("disjoint local unitaries commute") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        auto s = tensor(qubit_state("a", ket_plus()),
                        qubit_state("b", ket_plus(), 2.0, Owner::Bob));
        Matrix ua = random_unitary(2, rng), ub = random_unitary(2, rng);
        auto ab = s.apply_unitary({{"a"}}, ua).apply_unitary({{"b"}}, ub);
        auto ba = s.apply_unitary({{"b"}}, ub).apply_unitary({{"a"}}, ua);
        CHECK(max_abs(ab.rho() - ba.rho()) < 1e-12);
    }
}

TEST_CASE("non-unitary matrices and cross-owner targets are rejected") {
    auto s = tensor(qubit_state("a", ket0()), qubit_state("b", ket0(), 1.0, Owner::Bob));
    Matrix bad = Matrix::Ones(2, 2);
    CHECK_THROWS_AS(s.apply_unitary({{"a"}}, bad), std::invalid_argument);
    CHECK_THROWS_AS(s.apply_unitary({{"a"}, {"b"}}, Matrix::Identity(4, 4)),
                    std::invalid_argument);
}

TEST_CASE("free evolution: dt = 0 is the identity") {
    auto a = qubit_state("a", ket_plus());
    CHECK(max_abs(a.free_evolve({{"a"}}, 0.0).rho() - a.rho()) < 1e-15);
}

TEST_CASE("free evolution rotates |+> to |-> after half a period") {
    const double omega = 2.0;
    auto a = qubit_state("a", ket_plus(), omega);
    auto out = a.free_evolve({{"a"}}, std::numbers::pi / omega);
    Vector minus(2);
    minus << 1, -1;
    minus /= std::sqrt(2.0);
    Matrix expect = minus * minus.adjoint();
    CHECK(max_abs(out.rho() - expect) < 1e-12);
}

TEST_CASE("energy-diagonal states are fixed points of free evolution") {
    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 0.3;
    diag(1, 1) = 0.7;
    auto s = CompositeState::from_density({{SubsystemId{"a"}, EnergySpec::qubit(1.3)}}, diag,
                                          Owner::Alice, 0.0);
    CHECK(max_abs(s.free_evolve({{"a"}}, 2.71).rho() - diag) < 1e-15);
}

TEST_CASE("free evolution group law") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    auto s = CompositeState::from_density(
        {{SubsystemId{"a"}, EnergySpec{{{0.0, 1}, {1.1, 2}, {2.5, 1}}}}}, random_density(4, rng),
        Owner::Alice, 0.0);
    for (int trial = 0; trial < 20; ++trial) {
        double t1 = u(rng), t2 = u(rng);
        auto split = s.free_evolve({{"a"}}, t1).free_evolve({{"a"}}, t2);
        auto joint = s.free_evolve({{"a"}}, t1 + t2);
        CHECK(max_abs(split.rho() - joint.rho()) < 1e-12);
    }
}

TEST_CASE("ownership transfers pass through the channel") {
    auto s = qubit_state("spin2", ket0());
    auto s1 = s.transfer({"spin2"}, Owner::Channel, 1.0);
    CHECK(s1.owner_of({"spin2"}) == Owner::Channel);
    auto s2 = s1.transfer({"spin2"}, Owner::Bob, 2.0);
    CHECK(s2.owner_of({"spin2"}) == Owner::Bob);
    CHECK(s2.ledger().history().size() == 2);
    CHECK(max_abs(s2.rho() - s.rho()) < 1e-15);  // rho untouched by transfers
}

TEST_CASE("direct Alice->Bob transfers are illegal") {
    auto s = qubit_state("a", ket0());
    CHECK_THROWS_AS(s.transfer({"a"}, Owner::Bob, 1.0), std::invalid_argument);
}

TEST_CASE("transfers cannot run backwards in time") {
    auto s = qubit_state("a", ket0()).transfer({"a"}, Owner::Channel, 5.0);
    CHECK_THROWS_AS(s.transfer({"a"}, Owner::Bob, 4.0), std::invalid_argument);
}

TEST_CASE("validity survives a random operation chain") {
    std::mt19937_64 rng(17);
    auto s = tensor(qubit_state("a", ket_plus()), qubit_state("b", ket_plus(), 2.0, Owner::Bob));
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int step = 0; step < 25; ++step) {
        s = s.apply_unitary({{"a"}}, random_unitary(2, rng));
        s = s.free_evolve_all(u(rng));
        s.validate();
    }
}

TEST_CASE("EnergySpec validation") {
    CHECK_THROWS_AS(EnergySpec{}.validate(), std::invalid_argument);
    CHECK_THROWS_AS((EnergySpec{{{1.0, 1}, {0.5, 1}}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((EnergySpec{{{0.0, 0}}}).validate(), std::invalid_argument);
    EnergySpec ok{{{0.0, 2}, {1.0, 1}}};
    ok.validate();
    CHECK(ok.dim() == 3);
    CHECK(ok.sector_by_index() == std::vector<int>{0, 0, 1});
}
