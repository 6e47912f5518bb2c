#include "gntd/mdp.hpp"

#include <cmath>
#include <string>

namespace gntd {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_row_stochastic(const Matrix& m, const std::string& what) {
    for (Index i = 0; i < m.rows(); ++i) {
        require((m.row(i).array() >= 0.0).all(), what + ": negative probability in row " +
                                                     std::to_string(i));
        require(std::abs(m.row(i).sum() - 1.0) <= kStochasticTol,
                what + ": row " + std::to_string(i) + " does not sum to 1");
    }
}

} // namespace

TabularMdp::TabularMdp(Matrix transition, Matrix reward, double discount, double r_max)
    : transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount),
      r_max_(r_max) {
    require(reward_.rows() >= 1 && reward_.cols() >= 1, "TabularMdp: empty state or action set");
    require(transition_.rows() == reward_.size() && transition_.cols() == reward_.rows(),
            "TabularMdp: transition must be (n_states*n_actions) x n_states");
    require(discount_ >= 0.0 && discount_ < 1.0, "TabularMdp: discount must lie in [0, 1)");
    require(r_max_ > 0.0, "TabularMdp: r_max must be positive");
    require(transition_.allFinite() && reward_.allFinite(), "TabularMdp: non-finite entries");
    require(reward_.cwiseAbs().maxCoeff() <= r_max_, "TabularMdp: |reward| exceeds r_max");
    check_row_stochastic(transition_, "TabularMdp transition");
}

Vector TabularMdp::reward_vector() const {
    // reward_ is column-major; the transpose's storage is the lexicographic order.
    const Matrix rt = reward_.transpose();
    return Eigen::Map<const Vector>(rt.data(), rt.size());
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    require(probs_.rows() >= 1 && probs_.cols() >= 1, "Policy: empty table");
    check_row_stochastic(probs_, "Policy");
}

Policy Policy::uniform(Index n_states, Index n_actions) {
    return Policy(Matrix::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)));
}

Policy Policy::deterministic(const std::vector<Index>& actions, Index n_actions) {
    Matrix probs = Matrix::Zero(static_cast<Index>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        require(actions[s] >= 0 && actions[s] < n_actions, "Policy: action out of range");
        probs(static_cast<Index>(s), actions[s]) = 1.0;
    }
    return Policy(std::move(probs));
}

namespace {

void check_policy(const TabularMdp& mdp, const Policy& policy) {
    require(policy.n_states() == mdp.n_states() && policy.n_actions() == mdp.n_actions(),
            "policy shape does not match MDP");
}

void check_q(const TabularMdp& mdp, const QTable& q) {
    require(q.size() == mdp.n_pairs(), "Q-table length does not match MDP");
}

} // namespace

Matrix state_action_transition(const TabularMdp& mdp, const Policy& policy) {
    check_policy(mdp, policy);
    const Index nA = mdp.n_actions();
    Matrix m(mdp.n_pairs(), mdp.n_pairs());
    for (Index i = 0; i < mdp.n_pairs(); ++i)
        for (Index s2 = 0; s2 < mdp.n_states(); ++s2)
            for (Index a2 = 0; a2 < nA; ++a2)
                m(i, s2 * nA + a2) = mdp.transition()(i, s2) * policy(s2, a2);
    return m;
}

QTable bellman_operator(const TabularMdp& mdp, const Policy& policy, const QTable& q) {
    check_q(mdp, q);
    check_policy(mdp, policy);
    // V(s') = sum_a' pi(a'|s') Q(s',a')
    const Eigen::Map<const RowMajorMatrix> qs(q.data(), mdp.n_states(), mdp.n_actions());
    const Vector v = (policy.probs().array() * qs.array()).rowwise().sum();
    return mdp.reward_vector() + mdp.discount() * (mdp.transition() * v);
}

QTable optimal_bellman_operator(const TabularMdp& mdp, const QTable& q) {
    check_q(mdp, q);
    const Eigen::Map<const RowMajorMatrix> qs(q.data(), mdp.n_states(), mdp.n_actions());
    const Vector v = qs.rowwise().maxCoeff();
    return mdp.reward_vector() + mdp.discount() * (mdp.transition() * v);
}

QTable exact_q_pi(const TabularMdp& mdp, const Policy& policy) {
    const Matrix m = state_action_transition(mdp, policy);
    const Matrix a = Matrix::Identity(m.rows(), m.cols()) - mdp.discount() * m;
    const Eigen::PartialPivLU<Matrix> lu(a);
    const Vector r = mdp.reward_vector();
    QTable q = lu.solve(r);
    const double residual = (a * q - r).lpNorm<Eigen::Infinity>();
    if (!q.allFinite() || residual > 1e-10 * (1.0 + r.lpNorm<Eigen::Infinity>()))
        throw NumericalError("exact_q_pi: (I - gamma P^pi) solve failed, residual " +
                             std::to_string(residual));
    return q;
}

QTable exact_q_star(const TabularMdp& mdp, double tol) {
    require(tol > 0.0, "exact_q_star: tol must be positive");
    const double gamma = mdp.discount();
    const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : 0.0;
    QTable q = QTable::Zero(mdp.n_pairs());
    while (true) {
        QTable next = optimal_bellman_operator(mdp, q);
        const double change = (next - q).lpNorm<Eigen::Infinity>();
        q = std::move(next);
        if (gamma == 0.0 || change <= stop)
            return q;
    }
}

StationaryDistribution stationary_distribution(const TabularMdp& mdp, const Policy& policy,
                                               double tol, long max_iter) {
    require(tol > 0.0 && max_iter >= 1, "stationary_distribution: bad tolerance or budget");
    const Matrix m = state_action_transition(mdp, policy);
    const Matrix mt = m.transpose();
    Vector mu = Vector::Constant(m.rows(), 1.0 / static_cast<double>(m.rows()));
    for (long it = 0; it < max_iter; ++it) {
        Vector next = mt * mu;
        next /= next.sum();
        const double change = (next - mu).lpNorm<1>();
        mu = std::move(next);
        if (change <= tol)
            return mu;
    }
    throw PeriodicOrReducibleChain(
        "stationary_distribution: power iteration did not converge; the induced chain is "
        "likely periodic or reducible");
}

std::vector<Index> unsupported_pairs(const StationaryDistribution& mu, double threshold) {
    std::vector<Index> out;
    for (Index i = 0; i < mu.size(); ++i)
        if (mu(i) <= threshold)
            out.push_back(i);
    return out;
}

Index sample_categorical(const Eigen::Ref<const Vector>& weights, Rng& rng) {
    const double total = weights.sum();
    require(total > 0.0 && weights.minCoeff() >= 0.0,
            "sample_categorical: weights must be non-negative with positive total");
    std::uniform_real_distribution<double> unif(0.0, total);
    const double u = unif(rng);
    double acc = 0.0;
    Index last_positive = 0;
    for (Index i = 0; i < weights.size(); ++i) {
        if (weights(i) <= 0.0)
            continue;
        acc += weights(i);
        last_positive = i;
        if (u < acc)
            return i;
    }
    return last_positive;
}

std::vector<Transition> sample_batch(const TabularMdp& mdp, const Policy& policy,
                                     const StationaryDistribution& mu, Index n, Rng& rng) {
    check_policy(mdp, policy);
    require(n >= 1, "sample_batch: n must be >= 1");
    require(mu.size() == mdp.n_pairs(), "sample_batch: mu length mismatch");
    const Index nA = mdp.n_actions();
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const Index pair = sample_categorical(mu, rng);
        const Index s = pair / nA;
        const Index a = pair % nA;
        const Index s_next = sample_categorical(mdp.transition().row(pair).transpose(), rng);
        const Index a_next = sample_categorical(policy.probs().row(s_next).transpose(), rng);
        batch.push_back({s, a, mdp.reward()(s, a), s_next, a_next});
    }
    return batch;
}

std::vector<WeightedTransition> enumerate_expectation_batch(const TabularMdp& mdp,
                                                            const Policy& policy,
                                                            const StationaryDistribution& mu,
                                                            Index max_tuples) {
    check_policy(mdp, policy);
    require(mu.size() == mdp.n_pairs(), "enumerate_expectation_batch: mu length mismatch");
    const Index nS = mdp.n_states();
    const Index nA = mdp.n_actions();
    const Index count = nS * nA * nS * nA;
    if (count > max_tuples)
        throw EnumerationBudgetExceeded("enumerate_expectation_batch: " + std::to_string(count) +
                                        " tuples exceed budget " + std::to_string(max_tuples));
    std::vector<WeightedTransition> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index s = 0; s < nS; ++s)
        for (Index a = 0; a < nA; ++a)
            for (Index s2 = 0; s2 < nS; ++s2)
                for (Index a2 = 0; a2 < nA; ++a2)
                    out.push_back({{s, a, mdp.reward()(s, a), s2, a2},
                                   mu(s * nA + a) * mdp.p(s, a, s2) * policy(s2, a2)});
    return out;
}

} // namespace gntd
