#include "clocksync/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace clocksync {

double trace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("trace_distance: dimension mismatch");
    Eigen::JacobiSVD<Matrix> svd(a - b);
    return svd.singularValues().sum() / 2.0;
}

FisherReport qfi(const std::function<Matrix(double)>& state_of, double at, double step,
                 double eigen_cutoff, const std::string& parameter) {
    if (step <= 0.0) throw std::invalid_argument("qfi: step must be positive");
    Matrix rho = state_of(at);
    Matrix hi = state_of(at + step);
    Matrix lo = state_of(at - step);
    if (rho.rows() != rho.cols() || hi.rows() != rho.rows() || lo.rows() != rho.rows())
        throw std::invalid_argument("qfi: family returned inconsistent dimensions");
    if (std::abs(rho.trace().real() - 1.0) > 1e-8)
        throw std::invalid_argument("qfi: family does not return unit-trace states");

    Matrix drho = ((hi - lo) / (2.0 * step)).eval();
    drho = ((drho + drho.adjoint()) / 2.0).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> es(((rho + rho.adjoint()) / 2.0).eval());
    const auto& lambda = es.eigenvalues();
    const Matrix& v = es.eigenvectors();

    double f = 0.0;
    for (int i = 0; i < lambda.size(); ++i) {
        for (int j = 0; j < lambda.size(); ++j) {
            double denom = lambda(i) + lambda(j);
            if (denom <= eigen_cutoff) continue;
            Complex num = v.col(i).adjoint() * drho * v.col(j);
            f += 2.0 * std::norm(num) / denom;
        }
    }
    return FisherReport{parameter, at, f, step, eigen_cutoff};
}

OffsetEstimate mle_offset(const Timeline& t, double true_delta, long shots,
                          const std::vector<double>& grid, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("mle_offset: empty candidate grid");
    if (shots < 1) throw std::invalid_argument("mle_offset: shots must be >= 1");

    auto records = run_sampled(with_delta(t, true_delta), shots, seed);
    std::map<std::vector<int>, long> counts;
    for (const auto& r : records) ++counts[r.outcome_sequence];

    const double neg_inf = -std::numeric_limits<double>::infinity();
    OffsetEstimate est;
    est.grid = grid;
    est.shots = shots;
    est.log_likelihood.reserve(grid.size());
    for (double cand : grid) {
        RunRecord exact = run_exact(with_delta(t, cand));
        std::map<std::vector<int>, double> law(exact.joint_outcomes.begin(),
                                               exact.joint_outcomes.end());
        double ll = 0.0;
        for (const auto& [seq, n] : counts) {
            auto it = law.find(seq);
            if (it == law.end() || it->second <= 0.0) {
                ll = neg_inf;
                break;
            }
            ll += n * std::log(it->second);
        }
        est.log_likelihood.push_back(ll);
    }

    auto best = std::max_element(est.log_likelihood.begin(), est.log_likelihood.end());
    if (*best == neg_inf)
        throw std::runtime_error("mle_offset: observed outcomes impossible under every candidate");
    std::size_t k = static_cast<std::size_t>(best - est.log_likelihood.begin());
    est.estimate = grid[k];

    // Local quadratic fit of the profile around the maximum:
    // ll ~ a + b x + c x^2 with c = -1/(2 se^2).
    std::size_t lo = k >= 2 ? k - 2 : 0;
    std::size_t hi = std::min(grid.size() - 1, k + 2);
    Eigen::MatrixXd design(hi - lo + 1, 3);
    Eigen::VectorXd y(hi - lo + 1);
    bool finite = true;
    for (std::size_t i = lo; i <= hi; ++i) {
        double x = grid[i] - grid[k];
        design(i - lo, 0) = 1.0;
        design(i - lo, 1) = x;
        design(i - lo, 2) = x * x;
        if (!std::isfinite(est.log_likelihood[i])) finite = false;
        y(i - lo) = est.log_likelihood[i];
    }
    double half_span = (grid.back() - grid.front()) / 2.0;
    if (finite && design.rows() >= 3) {
        Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
        est.std_error = coef(2) < 0.0 ? std::sqrt(-1.0 / (2.0 * coef(2))) : half_span;
    } else {
        est.std_error = half_span;
    }
    return est;
}

Matrix party_state(const Timeline& t, double delta, Actor party) {
    RunRecord rec = run_exact(with_delta(t, delta));
    return party == Actor::Alice ? rec.rho_alice : rec.rho_bob;
}

std::vector<NogoRow> nogo_sweep(const Timeline& t, const std::vector<double>& delta_grid,
                                const std::vector<std::pair<double, PhaseModel>>& models,
                                Actor party) {
    if (delta_grid.empty() || models.empty())
        throw std::invalid_argument("nogo_sweep: empty grid");
    std::vector<NogoRow> rows;
    for (const auto& [value, model] : models) {
        Timeline tm = with_model(t, model);
        std::vector<Matrix> states;
        for (double d : delta_grid) states.push_back(party_state(tm, d, party));
        double td = 0.0;
        for (std::size_t i = 0; i < states.size(); ++i)
            for (std::size_t j = i + 1; j < states.size(); ++j)
                td = std::max(td, trace_distance(states[i], states[j]));
        double mid = delta_grid[delta_grid.size() / 2];
        FisherReport fr =
            qfi([&](double d) { return party_state(tm, d, party); }, mid, 1e-4, 1e-12, "delta");
        rows.push_back({value, td, fr.qfi});
    }
    std::sort(rows.begin(), rows.end(),
              [](const NogoRow& a, const NogoRow& b) { return a.noise_value < b.noise_value; });
    return rows;
}

}  // namespace clocksync
