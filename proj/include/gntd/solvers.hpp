#pragma once

#include "gntd/approximators.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace gntd {

enum class CurvatureKind { population, empirical };

/// Gauss-Newton matrix H = E[grad grad^T] and semi-gradient g = E[delta grad].
struct CurvaturePair {
    Matrix H;
    Vector g;
    CurvatureKind kind = CurvatureKind::empirical;
};

enum class DirectionSolver {
    /// Cholesky solve of (H + omega I) d = -g.
    damped,
    /// d = -(H + omega I)^+ g with eigenvalues below sigma_min_rel * max truncated.
    pseudo_inverse,
};

struct GntdConfig {
    double beta = 0.5;
    double omega = 1e-3;
    Index batch_size = 256;
    Index iterations = 100;
    DirectionSolver solver = DirectionSolver::damped;
    double sigma_min_rel = 1e-10;

    void validate() const;
};

struct FqiConfig {
    Index inner_steps = 200;
    double inner_lr = 1.0;
    Index inner_batch = 256;

    void validate() const;
};

/// delta = Q(s,a) - (r + gamma Q(s',a')), bootstrapping from the same parameters.
template <QApproximator A>
double td_error(const A& approx, const Transition& xi, double gamma) {
    return approx.value(xi.s, xi.a) - (xi.r + gamma * approx.value(xi.s_next, xi.a_next));
}

/**
 * Curvature estimated from weighted samples, kept in square-root form so
 * that wide models never materialize the p x p matrix: H = R^T R with row i
 * of R equal to sqrt(w_i) grad_i.
 */
struct SampleCurvature {
    Matrix root;
    Vector g;

    Index num_params() const { return g.size(); }
    Matrix dense() const { return root.transpose() * root; }
};

/// Direction -(H + omega I)^{-1} g (or the pseudo-inverse variant) with the
/// residual checked against 1e-10 (||g|| + 1).
Vector gauss_newton_direction(const CurvaturePair& pair, const GntdConfig& config);
Vector gauss_newton_direction(const SampleCurvature& curvature, const GntdConfig& config);

/// Minimum-norm solution of min_d ||A d - b||, truncating eigenvalues of
/// A^T A (equivalently A A^T) below sigma_min_rel times the largest.
Vector min_norm_least_squares(const Matrix& a, const Vector& b, double sigma_min_rel);

namespace detail {

template <QApproximator A, typename DeltaFn>
SampleCurvature accumulate(const A& approx, std::span<const WeightedTransition> batch,
                           DeltaFn&& delta) {
    require(!batch.empty(), "empirical curvature: batch must be non-empty");
    SampleCurvature out{Matrix(static_cast<Index>(batch.size()), approx.num_params()),
                        Vector::Zero(approx.num_params())};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& [xi, w] = batch[i];
        require(w >= 0.0, "empirical curvature: negative weight");
        const Vector grad = approx.gradient(xi.s, xi.a);
        out.root.row(static_cast<Index>(i)) = std::sqrt(w) * grad.transpose();
        out.g += (w * delta(xi)) * grad;
    }
    return out;
}

inline std::vector<WeightedTransition> uniform_weights(std::span<const Transition> batch) {
    require(!batch.empty(), "batch must be non-empty");
    const double w = 1.0 / static_cast<double>(batch.size());
    std::vector<WeightedTransition> out;
    out.reserve(batch.size());
    for (const auto& xi : batch)
        out.push_back({xi, w});
    return out;
}

inline Vector sqrt_weights(const StationaryDistribution& mu) { return mu.cwiseMax(0.0).cwiseSqrt(); }

} // namespace detail

template <QApproximator A>
SampleCurvature sample_curvature(const A& approx, std::span<const WeightedTransition> batch,
                                 double gamma) {
    return detail::accumulate(approx, batch,
                              [&](const Transition& xi) { return td_error(approx, xi, gamma); });
}

template <QApproximator A>
SampleCurvature sample_curvature(const A& approx, std::span<const Transition> batch, double gamma) {
    const auto weighted = detail::uniform_weights(batch);
    return sample_curvature(approx, std::span<const WeightedTransition>(weighted), gamma);
}

/// (1/N) sum grad grad^T and (1/N) sum delta grad; the weighted overload
/// uses the supplied weights instead of 1/N.
template <QApproximator A>
CurvaturePair empirical_curvature(const A& approx, std::span<const WeightedTransition> batch,
                                  double gamma) {
    SampleCurvature c = sample_curvature(approx, batch, gamma);
    return {c.dense(), std::move(c.g), CurvatureKind::empirical};
}

template <QApproximator A>
CurvaturePair empirical_curvature(const A& approx, std::span<const Transition> batch, double gamma) {
    SampleCurvature c = sample_curvature(approx, batch, gamma);
    return {c.dense(), std::move(c.g), CurvatureKind::empirical};
}

/// H = J^T U J; g by exact enumeration of the tuple distribution.
template <QApproximator A>
CurvaturePair population_curvature(const A& approx, const TabularMdp& mdp, const Policy& policy,
                                   const StationaryDistribution& mu,
                                   Index max_tuples = 4'000'000) {
    const auto tuples = enumerate_expectation_batch(mdp, policy, mu, max_tuples);
    const QTable q = approx.value_table();
    const Index nA = mdp.n_actions();
    // Per-pair accumulation of w * delta, then g = J^T c.
    Vector c = Vector::Zero(mdp.n_pairs());
    for (const auto& [xi, w] : tuples) {
        const double delta =
            q(xi.s * nA + xi.a) - (xi.r + mdp.discount() * q(xi.s_next * nA + xi.a_next));
        c(xi.s * nA + xi.a) += w * delta;
    }
    const Matrix j = approx.jacobian();
    const Matrix jmu = detail::sqrt_weights(mu).asDiagonal() * j;
    return {jmu.transpose() * jmu, j.transpose() * c, CurvatureKind::population};
}

/**
 * d = argmin_d ||Q + J d - T^pi Q||_mu (minimum-norm), theta' = theta + beta d.
 * Wide models are solved through the |S||A| x |S||A| Gram matrix.
 */
template <QApproximator A>
A population_gntd_step(const A& approx, const TabularMdp& mdp, const Policy& policy,
                       const StationaryDistribution& mu, double beta,
                       double sigma_min_rel = 1e-10) {
    require(beta > 0.0, "population_gntd_step: beta must be positive");
    const QTable q = approx.value_table();
    const Vector sw = detail::sqrt_weights(mu);
    const Vector b = sw.cwiseProduct(bellman_operator(mdp, policy, q) - q);
    const Matrix jmu = sw.asDiagonal() * approx.jacobian();
    const Vector d = min_norm_least_squares(jmu, b, sigma_min_rel);
    return approx.with_params(approx.params() + beta * d);
}

/// theta' = theta - beta (H_hat + omega I)^{-1} g_hat.
template <QApproximator A>
A stochastic_gntd_step(const A& approx, std::span<const WeightedTransition> batch, double gamma,
                       const GntdConfig& config) {
    config.validate();
    const SampleCurvature c = sample_curvature(approx, batch, gamma);
    return approx.with_params(approx.params() + config.beta * gauss_newton_direction(c, config));
}

template <QApproximator A>
A stochastic_gntd_step(const A& approx, std::span<const Transition> batch, double gamma,
                       const GntdConfig& config) {
    const auto weighted = detail::uniform_weights(batch);
    return stochastic_gntd_step(approx, std::span<const WeightedTransition>(weighted), gamma,
                                config);
}

/// Semi-gradient TD: theta' = theta - beta g_hat.
template <QApproximator A>
A td_step(const A& approx, std::span<const WeightedTransition> batch, double gamma, double beta) {
    require(!batch.empty(), "td_step: batch must be non-empty");
    Vector g = Vector::Zero(approx.num_params());
    for (const auto& [xi, w] : batch)
        g += (w * td_error(approx, xi, gamma)) * approx.gradient(xi.s, xi.a);
    return approx.with_params(approx.params() - beta * g);
}

template <QApproximator A>
A td_step(const A& approx, std::span<const Transition> batch, double gamma, double beta) {
    const auto weighted = detail::uniform_weights(batch);
    return td_step(approx, std::span<const WeightedTransition>(weighted), gamma, beta);
}

/// Population TD: theta' = theta - beta J^T U (Q - T^pi Q).
template <QApproximator A>
A population_td_step(const A& approx, const TabularMdp& mdp, const Policy& policy,
                     const StationaryDistribution& mu, double beta) {
    const QTable q = approx.value_table();
    const Vector g = approx.jacobian().transpose() *
                     mu.cwiseProduct(q - bellman_operator(mdp, policy, q));
    return approx.with_params(approx.params() - beta * g);
}

/**
 * Fitted Q-iteration, population form: freeze y = T^pi Q(theta_k) and run
 * inner_steps of full-batch gradient descent on 0.5 ||Q(theta) - y||_mu^2.
 * When inner_losses is given, the loss before each inner step and after the
 * last one is appended.
 */
template <QApproximator A>
A fqi_step(const A& approx, const TabularMdp& mdp, const Policy& policy,
           const StationaryDistribution& mu, const FqiConfig& config,
           std::vector<double>* inner_losses = nullptr) {
    require(config.inner_steps >= 0 && config.inner_lr > 0.0, "fqi_step: invalid config");
    const QTable target = bellman_operator(mdp, policy, approx.value_table());
    A current = approx;
    for (Index it = 0;; ++it) {
        const Vector resid = current.value_table() - target;
        if (inner_losses)
            inner_losses->push_back(0.5 * mu_inner(resid, resid, mu));
        if (it == config.inner_steps)
            break;
        const Vector grad = current.jacobian().transpose() * mu.cwiseProduct(resid);
        current = current.with_params(current.params() - config.inner_lr * grad);
    }
    return current;
}

/// Stochastic FQI: per-tuple targets r + gamma Q(s',a'; theta_k), frozen for
/// the inner loop.
template <QApproximator A>
A fqi_step(const A& approx, std::span<const Transition> batch, double gamma,
           const FqiConfig& config, std::vector<double>* inner_losses = nullptr) {
    require(!batch.empty(), "fqi_step: batch must be non-empty");
    require(config.inner_steps >= 0 && config.inner_lr > 0.0, "fqi_step: invalid config");
    const double w = 1.0 / static_cast<double>(batch.size());
    Vector target(static_cast<Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
        target(static_cast<Index>(i)) =
            batch[i].r + gamma * approx.value(batch[i].s_next, batch[i].a_next);
    A current = approx;
    for (Index it = 0;; ++it) {
        Vector grad = Vector::Zero(current.num_params());
        double loss = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& xi = batch[i];
            const double e = current.value(xi.s, xi.a) - target(static_cast<Index>(i));
            loss += 0.5 * w * e * e;
            if (it < config.inner_steps)
                grad += (w * e) * current.gradient(xi.s, xi.a);
        }
        if (inner_losses)
            inner_losses->push_back(loss);
        if (it == config.inner_steps)
            break;
        current = current.with_params(current.params() - config.inner_lr * grad);
    }
    return current;
}

/// min_d ||Q + J d - T^pi Q||_mu^2 at the current parameters.
template <QApproximator A>
double fitted_error(const A& approx, const TabularMdp& mdp, const Policy& policy,
                    const StationaryDistribution& mu, double sigma_min_rel = 1e-10) {
    const QTable q = approx.value_table();
    const Vector sw = detail::sqrt_weights(mu);
    const Vector b = sw.cwiseProduct(bellman_operator(mdp, policy, q) - q);
    if (b.squaredNorm() == 0.0)
        return 0.0;
    const Matrix jmu = sw.asDiagonal() * approx.jacobian();
    const Vector d = min_norm_least_squares(jmu, b, sigma_min_rel);
    return (jmu * d - b).squaredNorm();
}

} // namespace gntd
