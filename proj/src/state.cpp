#include "clocksync/state.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <set>

namespace clocksync {

bool is_unitary(const Matrix& u, double tol) {
    if (u.rows() != u.cols() || u.rows() == 0) return false;
    Matrix d = u.adjoint() * u - Matrix::Identity(u.rows(), u.cols());
    return d.cwiseAbs().maxCoeff() <= tol;
}

CompositeState::CompositeState() {
    rho_ = Matrix::Ones(1, 1);
}

void CompositeState::rebuild_dims() {
    dims_.clear();
    for (const auto& s : subsystems_) dims_.push_back(s.energies.dim());
}

std::vector<int> CompositeState::digits(std::size_t flat) const {
    std::vector<int> d(dims_.size());
    for (std::size_t k = dims_.size(); k-- > 0;) {
        d[k] = static_cast<int>(flat % dims_[k]);
        flat /= dims_[k];
    }
    return d;
}

CompositeState CompositeState::from_pure(std::vector<Subsystem> subsystems,
                                         const Vector& amplitudes, Owner owner, double time) {
    Matrix rho = amplitudes * amplitudes.adjoint();
    double n = amplitudes.squaredNorm();
    if (n <= 0.0) throw std::invalid_argument("from_pure: zero amplitude vector");
    return from_density(std::move(subsystems), rho / n, owner, time);
}

CompositeState CompositeState::from_density(std::vector<Subsystem> subsystems, Matrix rho,
                                            Owner owner, double time) {
    CompositeState s;
    s.subsystems_ = std::move(subsystems);
    std::size_t d = 1;
    for (const auto& sub : s.subsystems_) {
        sub.energies.validate();
        d *= sub.energies.dim();
        s.ledger_.add(sub.id, owner, time);
    }
    if (static_cast<std::size_t>(rho.rows()) != d || static_cast<std::size_t>(rho.cols()) != d)
        throw std::invalid_argument("from_density: matrix dimension mismatch");
    s.rho_ = std::move(rho);
    s.rebuild_dims();
    s.validate();
    return s;
}

std::size_t CompositeState::position_of(const SubsystemId& id) const {
    for (std::size_t k = 0; k < subsystems_.size(); ++k)
        if (subsystems_[k].id == id) return k;
    throw std::invalid_argument("unknown subsystem '" + id.value + "'");
}

int CompositeState::level_of(std::size_t flat_index, std::size_t position) const {
    std::size_t stride = 1;
    for (std::size_t k = subsystems_.size(); k-- > position + 1;) stride *= dims_[k];
    return static_cast<int>((flat_index / stride) % dims_[position]);
}

CompositeState tensor(const CompositeState& a, const CompositeState& b) {
    CompositeState out;
    out.subsystems_ = a.subsystems_;
    out.subsystems_.insert(out.subsystems_.end(), b.subsystems_.begin(), b.subsystems_.end());
    out.ledger_ = a.ledger_;
    out.ledger_.merge(b.ledger_);  // throws on duplicate ids
    out.rho_ = Eigen::kroneckerProduct(a.rho_, b.rho_).eval();
    out.rebuild_dims();
    return out;
}

CompositeState CompositeState::partial_trace(const std::vector<SubsystemId>& keep) const {
    if (keep.empty()) throw std::invalid_argument("partial_trace: empty keep set");
    std::set<std::size_t> keep_pos;
    for (const auto& id : keep) keep_pos.insert(position_of(id));

    CompositeState out;
    std::size_t kept_dim = 1;
    for (std::size_t k = 0; k < subsystems_.size(); ++k) {
        if (keep_pos.count(k)) {
            out.subsystems_.push_back(subsystems_[k]);
            out.ledger_.add(subsystems_[k].id, ledger_.owner_of(subsystems_[k].id), 0.0);
            kept_dim *= dims_[k];
        }
    }
    out.rebuild_dims();
    out.rho_ = Matrix::Zero(kept_dim, kept_dim);

    const std::size_t d = dim();
    for (std::size_t i = 0; i < d; ++i) {
        auto di = digits(i);
        for (std::size_t j = 0; j < d; ++j) {
            auto dj = digits(j);
            bool traced_match = true;
            for (std::size_t k = 0; k < dims_.size(); ++k)
                if (!keep_pos.count(k) && di[k] != dj[k]) { traced_match = false; break; }
            if (!traced_match) continue;
            std::size_t ri = 0, rj = 0;
            for (std::size_t k = 0; k < dims_.size(); ++k) {
                if (!keep_pos.count(k)) continue;
                ri = ri * dims_[k] + di[k];
                rj = rj * dims_[k] + dj[k];
            }
            out.rho_(ri, rj) += rho_(i, j);
        }
    }
    return out;
}

Matrix CompositeState::lift(const std::vector<SubsystemId>& targets, const Matrix& op) const {
    std::vector<std::size_t> pos;
    std::size_t tdim = 1;
    for (const auto& id : targets) {
        pos.push_back(position_of(id));
        tdim *= dims_[pos.back()];
    }
    if (static_cast<std::size_t>(op.rows()) != tdim || static_cast<std::size_t>(op.cols()) != tdim)
        throw std::invalid_argument("lift: operator dimension mismatch");

    const std::size_t d = dim();
    std::vector<std::size_t> sub(d);  // target sub-index of each flat index
    for (std::size_t i = 0; i < d; ++i) {
        std::size_t s = 0;
        for (std::size_t p : pos) s = s * dims_[p] + level_of(i, p);
        sub[i] = s;
    }
    // Residual (non-target) index, for the identity factor.
    std::vector<std::size_t> res(d);
    for (std::size_t i = 0; i < d; ++i) {
        auto di = digits(i);
        std::size_t r = 0;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (std::find(pos.begin(), pos.end(), k) != pos.end()) continue;
            r = r * dims_[k] + di[k];
        }
        res[i] = r;
    }
    Matrix full = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (res[i] == res[j]) full(i, j) = op(sub[i], sub[j]);
    return full;
}

CompositeState CompositeState::apply_unitary(const std::vector<SubsystemId>& targets,
                                             const Matrix& u) const {
    if (targets.empty()) throw std::invalid_argument("apply_unitary: no targets");
    if (!is_unitary(u)) throw std::invalid_argument("apply_unitary: matrix is not unitary");
    Owner first = ledger_.owner_of(targets.front());
    for (const auto& id : targets)
        if (ledger_.owner_of(id) != first)
            throw std::invalid_argument("apply_unitary: targets span different owners");
    Matrix full = lift(targets, u);
    CompositeState out = *this;
    out.rho_ = full * rho_ * full.adjoint();
    out.hermitize();
    return out;
}

CompositeState CompositeState::free_evolve(const std::vector<SubsystemId>& targets,
                                           double dt) const {
    if (!targets.empty()) {
        Owner first = ledger_.owner_of(targets.front());
        for (const auto& id : targets)
            if (ledger_.owner_of(id) != first)
                throw std::invalid_argument("free_evolve: targets span different owners");
    }
    CompositeState out = *this;
    out.free_phase(targets, dt);
    return out;
}

CompositeState CompositeState::free_evolve_all(double dt) const {
    std::vector<SubsystemId> all;
    for (const auto& s : subsystems_) all.push_back(s.id);
    CompositeState out = *this;
    out.free_phase(all, dt);
    return out;
}

void CompositeState::free_phase(const std::vector<SubsystemId>& targets, double dt) {
    if (targets.empty() || dt == 0.0) return;
    const std::size_t d = dim();
    // Accumulated eigenfrequency of the targeted subsystems per basis index.
    std::vector<double> omega(d, 0.0);
    for (const auto& id : targets) {
        std::size_t p = position_of(id);
        auto w = subsystems_[p].energies.omega_by_index();
        for (std::size_t i = 0; i < d; ++i) omega[i] += w[level_of(i, p)];
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            rho_(i, j) *= std::polar(1.0, -(omega[i] - omega[j]) * dt);
}

CompositeState CompositeState::transfer(const SubsystemId& id, Owner to, double time) const {
    CompositeState out = *this;
    out.ledger_.transfer(id, to, time);
    return out;
}

CompositeState CompositeState::with_rho(Matrix rho) const {
    if (rho.rows() != rho_.rows() || rho.cols() != rho_.cols())
        throw std::invalid_argument("with_rho: dimension mismatch");
    CompositeState out = *this;
    out.rho_ = std::move(rho);
    return out;
}

void CompositeState::scale_coherences(std::size_t position,
                                      const std::function<Complex(int, int)>& factor) {
    const std::size_t d = dim();
    std::vector<int> lvl(d);
    for (std::size_t i = 0; i < d; ++i) lvl[i] = level_of(i, position);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            rho_(i, j) *= factor(lvl[i], lvl[j]);
}

void CompositeState::validate(double trace_tol) const {
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
        throw std::runtime_error("state: rho is not Hermitian");
    if (std::abs(rho_.trace().real() - 1.0) > trace_tol || std::abs(rho_.trace().imag()) > trace_tol)
        throw std::runtime_error("state: trace(rho) != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(((rho_ + rho_.adjoint()) / 2.0).eval());
    if (es.eigenvalues().minCoeff() < -kPsdTol)
        throw std::runtime_error("state: rho is not positive semidefinite");
}

}  // namespace clocksync
