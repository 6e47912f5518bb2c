#include "gntd/kfac.hpp"

#include "gntd/solvers.hpp"

#include <cmath>

namespace gntd {

LayeredMlp::LayeredMlp(std::vector<Matrix> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "LayeredMlp: needs at least one layer");
    require(layers_.front().cols() >= 2, "LayeredMlp: input dimension must be >= 1");
    for (std::size_t l = 1; l < layers_.size(); ++l)
        require(layers_[l].cols() == layers_[l - 1].rows() + 1,
                "LayeredMlp: layer " + std::to_string(l) + " does not chain with its input");
    require(layers_.back().rows() == 1, "LayeredMlp: output dimension must be 1");
}

LayeredMlp LayeredMlp::random(Index input_dim, const std::vector<Index>& hidden, double scale,
                              Rng& rng) {
    std::vector<Index> sizes{input_dim};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    std::vector<Matrix> layers;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        std::normal_distribution<double> normal(
            0.0, scale / std::sqrt(static_cast<double>(sizes[l - 1] + 1)));
        Matrix w(sizes[l], sizes[l - 1] + 1);
        for (Index j = 0; j < w.cols(); ++j)
            for (Index i = 0; i < w.rows(); ++i)
                w(i, j) = normal(rng);
        layers.push_back(std::move(w));
    }
    return LayeredMlp(std::move(layers));
}

Index LayeredMlp::num_params() const {
    Index n = 0;
    for (const auto& w : layers_)
        n += w.size();
    return n;
}

Vector LayeredMlp::flatten() const {
    Vector out(num_params());
    Index offset = 0;
    for (const auto& w : layers_) {
        out.segment(offset, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        offset += w.size();
    }
    return out;
}

std::vector<Matrix> unflatten_like(const LayeredMlp& mlp, const Vector& flat) {
    require(flat.size() == mlp.num_params(), "unflatten_like: length mismatch");
    std::vector<Matrix> out;
    Index offset = 0;
    for (const auto& w : mlp.layers()) {
        out.emplace_back(Eigen::Map<const Matrix>(flat.data() + offset, w.rows(), w.cols()));
        offset += w.size();
    }
    return out;
}

LayeredMlp LayeredMlp::with_flat(const Vector& params) const {
    return LayeredMlp(unflatten_like(*this, params));
}

Vector LayerStats::flat_gradient() const {
    Index n = 0;
    for (const auto& m : dtheta)
        n += m.size();
    Vector out(n);
    Index offset = 0;
    for (const auto& m : dtheta) {
        out.segment(offset, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
        offset += m.size();
    }
    return out;
}

ForwardBackward forward_backward(const LayeredMlp& mlp, const Eigen::Ref<const Vector>& feature) {
    require(feature.size() == mlp.input_dim(), "forward_backward: feature dimension mismatch");
    const std::size_t n_layers = mlp.num_layers();
    ForwardBackward out;
    LayerStats& st = out.stats;
    st.p_bar.resize(n_layers);
    st.q.resize(n_layers);
    st.dtheta.resize(n_layers);
    std::vector<Vector> h(n_layers);

    Vector p = feature;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Vector pb(p.size() + 1);
        pb << p, 1.0;
        h[l] = mlp.layer(l) * pb;
        st.p_bar[l] = std::move(pb);
        p = l + 1 < n_layers ? Vector(h[l].cwiseMax(0.0)) : h[l];
    }
    out.value = p(0);

    Vector dp = Vector::Ones(1);
    for (std::size_t l = n_layers; l-- > 0;) {
        if (l + 1 < n_layers)
            st.q[l] = dp.cwiseProduct((h[l].array() > 0.0).cast<double>().matrix());
        else
            st.q[l] = dp;
        st.dtheta[l] = st.q[l] * st.p_bar[l].transpose();
        const Matrix& w = mlp.layer(l);
        dp = w.leftCols(w.cols() - 1).transpose() * st.q[l];
    }
    return out;
}

KfacFactors estimate_factors(const LayeredMlp& mlp, const Matrix& features, const Vector& weights) {
    require(features.rows() >= 1, "estimate_factors: batch must be non-empty");
    require(weights.size() == features.rows(), "estimate_factors: weight count mismatch");
    require((weights.array() >= 0.0).all() && weights.sum() > 0.0,
            "estimate_factors: weights must be non-negative with positive total");
    KfacFactors f;
    f.n = features.rows();
    for (const auto& w : mlp.layers()) {
        f.P_hat.push_back(Matrix::Zero(w.cols(), w.cols()));
        f.Q_hat.push_back(Matrix::Zero(w.rows(), w.rows()));
    }
    const double total = weights.sum();
    for (Index i = 0; i < features.rows(); ++i) {
        const ForwardBackward fb = forward_backward(mlp, features.row(i).transpose());
        const double w = weights(i) / total;
        for (std::size_t l = 0; l < mlp.num_layers(); ++l) {
            f.P_hat[l].noalias() += w * fb.stats.p_bar[l] * fb.stats.p_bar[l].transpose();
            f.Q_hat[l].noalias() += w * fb.stats.q[l] * fb.stats.q[l].transpose();
        }
    }
    return f;
}

KfacFactors estimate_factors(const LayeredMlp& mlp, const Matrix& features) {
    return estimate_factors(mlp, features, Vector::Ones(features.rows()));
}

namespace {

Eigen::LLT<Matrix> shifted_factor(const Matrix& m, double shift) {
    Eigen::LLT<Matrix> llt(m + shift * Matrix::Identity(m.rows(), m.cols()));
    if (llt.info() != Eigen::Success)
        throw NumericalError("kfac_direction: shifted factor is not positive definite");
    return llt;
}

} // namespace

std::vector<Matrix> kfac_direction(const KfacFactors& factors,
                                   const std::vector<Matrix>& layer_semigradients, double omega) {
    require(omega > 0.0, "kfac_direction: omega must be positive");
    require(factors.P_hat.size() == layer_semigradients.size() &&
                factors.Q_hat.size() == layer_semigradients.size(),
            "kfac_direction: layer count mismatch");
    const double shift = std::sqrt(omega);
    std::vector<Matrix> out;
    for (std::size_t l = 0; l < layer_semigradients.size(); ++l) {
        const Matrix& g = layer_semigradients[l];
        const Matrix& p = factors.P_hat[l];
        const Matrix& q = factors.Q_hat[l];
        require(q.rows() == g.rows() && p.rows() == g.cols(),
                "kfac_direction: factor shapes do not match layer " + std::to_string(l));
        const auto q_llt = shifted_factor(q, shift);
        const auto p_llt = shifted_factor(p, shift);
        // Left solve, then right solve via (P + sI) X^T = Y^T (both factors symmetric).
        const Matrix left = q_llt.solve(g);
        Matrix d = p_llt.solve(left.transpose()).transpose();
        const Matrix qs = q + shift * Matrix::Identity(q.rows(), q.cols());
        const Matrix ps = p + shift * Matrix::Identity(p.rows(), p.cols());
        const double residual = (qs * d * ps - g).norm();
        if (!(residual <= 1e-10 * (g.norm() + 1.0)))
            throw NumericalError("kfac_direction: solve residual " + std::to_string(residual));
        out.push_back(std::move(d));
    }
    return out;
}

LayeredMlp kfac_update(const LayeredMlp& mlp, const KfacFactors& factors,
                       const std::vector<Matrix>& layer_semigradients, double beta, double omega) {
    require(beta >= 0.0, "kfac_update: beta must be non-negative");
    const auto d = kfac_direction(factors, layer_semigradients, omega);
    std::vector<Matrix> layers = mlp.layers();
    for (std::size_t l = 0; l < layers.size(); ++l)
        layers[l] -= beta * d[l];
    return LayeredMlp(std::move(layers));
}

MlpApprox::MlpApprox(FeatureMap features, LayeredMlp net)
    : features_(std::move(features)), net_(std::move(net)) {
    require(net_.input_dim() == features_.dim(), "MlpApprox: network input must match features");
}

double MlpApprox::value(Index s, Index a) const {
    return forward_backward(net_, features_.row(s, a).transpose()).value;
}

Vector MlpApprox::gradient(Index s, Index a) const {
    return forward_backward(net_, features_.row(s, a).transpose()).stats.flat_gradient();
}

QTable MlpApprox::value_table() const {
    QTable q(features_.n_pairs());
    for (Index i = 0; i < q.size(); ++i)
        q(i) = forward_backward(net_, features_.phi().row(i).transpose()).value;
    return q;
}

Matrix MlpApprox::jacobian() const {
    Matrix j(features_.n_pairs(), num_params());
    for (Index i = 0; i < j.rows(); ++i)
        j.row(i) =
            forward_backward(net_, features_.phi().row(i).transpose()).stats.flat_gradient();
    return j;
}

MlpApprox kfac_step(const MlpApprox& approx, std::span<const WeightedTransition> batch,
                    const Vector& deltas, double beta, double omega) {
    require(!batch.empty(), "kfac_step: batch must be non-empty");
    require(deltas.size() == static_cast<Index>(batch.size()), "kfac_step: delta count mismatch");
    const LayeredMlp& net = approx.net();
    Matrix feats(static_cast<Index>(batch.size()), approx.features().dim());
    Vector weights(static_cast<Index>(batch.size()));
    std::vector<Matrix> grads;
    for (const auto& w : net.layers())
        grads.push_back(Matrix::Zero(w.rows(), w.cols()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& [xi, w] = batch[i];
        const auto idx = static_cast<Index>(i);
        feats.row(idx) = approx.features().row(xi.s, xi.a);
        weights(idx) = w;
        const ForwardBackward fb = forward_backward(net, feats.row(idx).transpose());
        for (std::size_t l = 0; l < grads.size(); ++l)
            grads[l] += (w * deltas(idx)) * fb.stats.dtheta[l];
    }
    const KfacFactors factors = estimate_factors(net, feats, weights);
    return {approx.features(), kfac_update(net, factors, grads, beta, omega)};
}

MlpApprox kfac_gntd_step(const MlpApprox& approx, std::span<const WeightedTransition> batch,
                         double gamma, double beta, double omega) {
    Vector deltas(static_cast<Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
        deltas(static_cast<Index>(i)) = td_error(approx, batch[i].xi, gamma);
    return kfac_step(approx, batch, deltas, beta, omega);
}

MlpApprox kfac_gntd_step(const MlpApprox& approx, std::span<const Transition> batch, double gamma,
                         double beta, double omega) {
    const auto weighted = detail::uniform_weights(batch);
    return kfac_gntd_step(approx, std::span<const WeightedTransition>(weighted), gamma, beta,
                          omega);
}

} // namespace gntd
