#pragma once

#include "gntd/approximators.hpp"

#include <span>
#include <vector>

namespace gntd {

/**
 * Fully connected network with ReLU hidden layers and a scalar linear
 * output. Layer l is an n_l x (n_{l-1} + 1) matrix; its last column
 * multiplies the constant 1 appended to the input (bias).
 *
 * Flattened parameters are the column-major vec of each layer matrix,
 * concatenated in layer order, so vec(q p_bar^T) = p_bar (x) q.
 */
class LayeredMlp {
public:
    explicit LayeredMlp(std::vector<Matrix> layers);

    /// Entries N(0, scale^2 / (fan_in + 1)).
    static LayeredMlp random(Index input_dim, const std::vector<Index>& hidden, double scale,
                             Rng& rng);

    Index input_dim() const { return layers_.front().cols() - 1; }
    std::size_t num_layers() const { return layers_.size(); }
    const Matrix& layer(std::size_t l) const { return layers_[l]; }
    const std::vector<Matrix>& layers() const { return layers_; }
    Index num_params() const;

    Vector flatten() const;
    LayeredMlp with_flat(const Vector& params) const;

private:
    std::vector<Matrix> layers_;
};

/// Per-layer quantities of one forward/backward pass. Index l refers to
/// weight layer l: p_bar[l] is its augmented input, q[l] its backward vector.
struct LayerStats {
    std::vector<Vector> p_bar;
    std::vector<Vector> q;
    std::vector<Matrix> dtheta;

    Vector flat_gradient() const;
};

struct ForwardBackward {
    double value = 0.0;
    LayerStats stats;
};

ForwardBackward forward_backward(const LayeredMlp& mlp, const Eigen::Ref<const Vector>& feature);

struct KfacFactors {
    std::vector<Matrix> P_hat;
    std::vector<Matrix> Q_hat;
    Index n = 0;
};

/// Averages of p_bar p_bar^T and q q^T over the rows of `features`.
KfacFactors estimate_factors(const LayeredMlp& mlp, const Matrix& features);

/// Weighted averages; weights must be non-negative and sum to a positive value.
KfacFactors estimate_factors(const LayeredMlp& mlp, const Matrix& features, const Vector& weights);

/// d_l = (Q_l + sqrt(omega) I)^{-1} G_l (P_l + sqrt(omega) I)^{-1}.
std::vector<Matrix> kfac_direction(const KfacFactors& factors,
                                   const std::vector<Matrix>& layer_semigradients, double omega);

/// theta_l - beta d_l for every layer.
LayeredMlp kfac_update(const LayeredMlp& mlp, const KfacFactors& factors,
                       const std::vector<Matrix>& layer_semigradients, double beta, double omega);

/// Splits a flat parameter-space vector into per-layer matrices of mlp's shapes.
std::vector<Matrix> unflatten_like(const LayeredMlp& mlp, const Vector& flat);

/// A LayeredMlp evaluated on a feature map; satisfies QApproximator.
class MlpApprox {
public:
    MlpApprox(FeatureMap features, LayeredMlp net);

    Index n_states() const { return features_.n_states(); }
    Index n_actions() const { return features_.n_actions(); }
    Index num_params() const { return net_.num_params(); }
    Vector params() const { return net_.flatten(); }
    MlpApprox with_params(const Vector& params) const { return {features_, net_.with_flat(params)}; }
    const FeatureMap& features() const { return features_; }
    const LayeredMlp& net() const { return net_; }

    double value(Index s, Index a) const;
    Vector gradient(Index s, Index a) const;
    QTable value_table() const;
    Matrix jacobian() const;

private:
    FeatureMap features_;
    LayeredMlp net_;
};

/**
 * One K-FAC damped Gauss-Newton step given per-tuple TD errors:
 * semi-gradients G_l = sum_i w_i delta_i dtheta_l(i), factors from the
 * same (s,a) samples.
 */
MlpApprox kfac_step(const MlpApprox& approx, std::span<const WeightedTransition> batch,
                    const Vector& deltas, double beta, double omega);

/// Policy-evaluation K-FAC step with delta = Q(s,a) - r - gamma Q(s',a').
MlpApprox kfac_gntd_step(const MlpApprox& approx, std::span<const WeightedTransition> batch,
                         double gamma, double beta, double omega);
MlpApprox kfac_gntd_step(const MlpApprox& approx, std::span<const Transition> batch, double gamma,
                         double beta, double omega);

} // namespace gntd
