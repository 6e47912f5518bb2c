#pragma once

#include "gntd/mdp.hpp"

#include <concepts>

namespace gntd {

/**
 * Feature matrix Phi of shape (n_states * n_actions) x dim whose row
 * s * n_actions + a is phi(s,a). Every row must have Euclidean norm <= 1;
 * rows that exceed it are rejected rather than rescaled.
 */
class FeatureMap {
public:
    FeatureMap(Index n_states, Index n_actions, Matrix phi);

    static FeatureMap identity(Index n_states, Index n_actions);
    /// Gaussian rows normalized to unit length.
    static FeatureMap random_unit_rows(Index n_states, Index n_actions, Index dim, Rng& rng);

    Index n_states() const { return n_states_; }
    Index n_actions() const { return n_actions_; }
    Index n_pairs() const { return phi_.rows(); }
    Index dim() const { return phi_.cols(); }
    Index pair(Index s, Index a) const { return s * n_actions_ + a; }

    const Matrix& phi() const { return phi_; }
    auto row(Index s, Index a) const { return phi_.row(pair(s, a)); }

private:
    Index n_states_;
    Index n_actions_;
    Matrix phi_;
};

/// Largest |cos| between two distinct feature rows; 1 means some pair is
/// parallel. Zero rows count as parallel to everything.
double max_pairwise_parallelism(const FeatureMap& features);

/**
 * A parameterized Q-function over a finite (s,a) space. Solvers are written
 * against this concept, so any smooth model exposing values, per-pair
 * gradients and the full Jacobian can be plugged in. Models are immutable:
 * with_params returns a new instance.
 */
template <typename A>
concept QApproximator = requires(const A& f, Index s, Index a, const Vector& p) {
    { f.n_states() } -> std::convertible_to<Index>;
    { f.n_actions() } -> std::convertible_to<Index>;
    { f.num_params() } -> std::convertible_to<Index>;
    { f.params() } -> std::convertible_to<Vector>;
    { f.with_params(p) } -> std::same_as<A>;
    { f.value(s, a) } -> std::convertible_to<double>;
    { f.gradient(s, a) } -> std::convertible_to<Vector>;
    { f.value_table() } -> std::convertible_to<QTable>;
    { f.jacobian() } -> std::convertible_to<Matrix>;
};

/// Q(s,a) = phi(s,a)^T theta.
class LinearApprox {
public:
    LinearApprox(FeatureMap features, Vector theta);
    explicit LinearApprox(FeatureMap features);

    Index n_states() const { return features_.n_states(); }
    Index n_actions() const { return features_.n_actions(); }
    Index num_params() const { return theta_.size(); }
    const Vector& params() const { return theta_; }
    LinearApprox with_params(Vector theta) const { return {features_, std::move(theta)}; }
    const FeatureMap& features() const { return features_; }

    double value(Index s, Index a) const { return features_.row(s, a).dot(theta_); }
    Vector gradient(Index s, Index a) const { return features_.row(s, a).transpose(); }
    QTable value_table() const { return features_.phi() * theta_; }
    Matrix jacobian() const { return features_.phi(); }

private:
    FeatureMap features_;
    Vector theta_;
};

/**
 * Q(s,a) = m^{-1/2} sum_r b_r relu(theta_r^T phi(s,a)) with frozen signs b.
 *
 * Parameters are flattened row-major over hidden units: entry r * dim + j is
 * theta_r[j]. The ReLU derivative at 0 is taken as 0.
 */
class TwoLayerRelu {
public:
    TwoLayerRelu(FeatureMap features, Vector params, Vector signs, double init_scale = 1.0);

    Index n_states() const { return features_.n_states(); }
    Index n_actions() const { return features_.n_actions(); }
    Index width() const { return signs_.size(); }
    Index num_params() const { return params_.size(); }
    double init_scale() const { return init_scale_; }
    const Vector& params() const { return params_; }
    const Vector& signs() const { return signs_; }
    const FeatureMap& features() const { return features_; }
    TwoLayerRelu with_params(Vector params) const {
        return {features_, std::move(params), signs_, init_scale_};
    }

    /// theta as a width x dim matrix (row r = theta_r).
    Eigen::Map<const RowMajorMatrix> theta() const {
        return {params_.data(), width(), features_.dim()};
    }

    /// theta_r^T phi(s,a) for every pair and unit, shape n_pairs x width.
    Matrix preactivations() const;

    double value(Index s, Index a) const;
    Vector gradient(Index s, Index a) const;
    QTable value_table() const;
    Matrix jacobian() const;

private:
    double unit_coefficient(double preactivation, Index r) const;

    FeatureMap features_;
    Vector params_;
    Vector signs_;
    double init_scale_;
};

/// theta_r ~ N(0, nu^2 I), b_r ~ Unif{-1, +1}.
TwoLayerRelu init_ntk(const FeatureMap& features, Index width, double nu, Rng& rng);

enum class GramMode {
    /// min eigenvalue of J_mu J_mu^T, J_mu = U^{1/2} J (over-parameterized).
    gram,
    /// min eigenvalue of J^T U J (under-parameterized).
    covariance,
};

double gram_min_eigenvalue(const Matrix& jacobian, const StationaryDistribution& mu, GramMode mode);

/// gram when the model has at least as many parameters as (s,a) pairs,
/// covariance otherwise.
GramMode natural_gram_mode(Index num_params, Index n_pairs);

} // namespace gntd
