#include "gntd/approximators.hpp"

#include <cmath>

namespace gntd {

namespace {
constexpr double kRowNormSlack = 1e-12;
} // namespace

FeatureMap::FeatureMap(Index n_states, Index n_actions, Matrix phi)
    : n_states_(n_states), n_actions_(n_actions), phi_(std::move(phi)) {
    require(n_states_ >= 1 && n_actions_ >= 1, "FeatureMap: sizes must be positive");
    require(phi_.rows() == n_states_ * n_actions_,
            "FeatureMap: expected one row per (s,a) pair");
    require(phi_.cols() >= 1, "FeatureMap: feature dimension must be positive");
    require(phi_.allFinite(), "FeatureMap: non-finite entries");
    for (Index i = 0; i < phi_.rows(); ++i)
        require(phi_.row(i).norm() <= 1.0 + kRowNormSlack,
                "FeatureMap: row " + std::to_string(i) + " has norm > 1");
}

FeatureMap FeatureMap::identity(Index n_states, Index n_actions) {
    const Index n = n_states * n_actions;
    return {n_states, n_actions, Matrix::Identity(n, n)};
}

FeatureMap FeatureMap::random_unit_rows(Index n_states, Index n_actions, Index dim, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix phi(n_states * n_actions, dim);
    for (Index i = 0; i < phi.rows(); ++i) {
        for (Index j = 0; j < dim; ++j)
            phi(i, j) = normal(rng);
        phi.row(i) /= phi.row(i).norm();
    }
    return {n_states, n_actions, std::move(phi)};
}

double max_pairwise_parallelism(const FeatureMap& features) {
    const Matrix& phi = features.phi();
    double worst = 0.0;
    for (Index i = 0; i < phi.rows(); ++i)
        for (Index j = i + 1; j < phi.rows(); ++j) {
            const double denom = phi.row(i).norm() * phi.row(j).norm();
            const double c = denom > 0.0 ? std::abs(phi.row(i).dot(phi.row(j))) / denom : 1.0;
            worst = std::max(worst, c);
        }
    return worst;
}

LinearApprox::LinearApprox(FeatureMap features, Vector theta)
    : features_(std::move(features)), theta_(std::move(theta)) {
    require(theta_.size() == features_.dim(), "LinearApprox: theta length must equal feature dim");
}

LinearApprox::LinearApprox(FeatureMap features)
    : LinearApprox(features, Vector::Zero(features.dim())) {}

TwoLayerRelu::TwoLayerRelu(FeatureMap features, Vector params, Vector signs, double init_scale)
    : features_(std::move(features)),
      params_(std::move(params)),
      signs_(std::move(signs)),
      init_scale_(init_scale) {
    require(signs_.size() >= 1, "TwoLayerRelu: width must be >= 1");
    require(params_.size() == signs_.size() * features_.dim(),
            "TwoLayerRelu: params must have width * dim entries");
    require((signs_.array().abs() == 1.0).all(), "TwoLayerRelu: signs must be +-1");
    require(init_scale_ > 0.0, "TwoLayerRelu: init scale must be positive");
}

Matrix TwoLayerRelu::preactivations() const { return features_.phi() * theta().transpose(); }

double TwoLayerRelu::unit_coefficient(double preactivation, Index r) const {
    return preactivation > 0.0 ? signs_(r) / std::sqrt(static_cast<double>(width())) : 0.0;
}

double TwoLayerRelu::value(Index s, Index a) const {
    const Vector pre = theta() * features_.row(s, a).transpose();
    return signs_.dot(pre.cwiseMax(0.0)) / std::sqrt(static_cast<double>(width()));
}

QTable TwoLayerRelu::value_table() const {
    return preactivations().cwiseMax(0.0) * signs_ / std::sqrt(static_cast<double>(width()));
}

Vector TwoLayerRelu::gradient(Index s, Index a) const {
    const Index d = features_.dim();
    const auto phi = features_.row(s, a);
    const Vector pre = theta() * phi.transpose();
    Vector g(num_params());
    for (Index r = 0; r < width(); ++r) {
        const double c = unit_coefficient(pre(r), r);
        for (Index j = 0; j < d; ++j)
            g(r * d + j) = c * phi(j);
    }
    return g;
}

Matrix TwoLayerRelu::jacobian() const {
    const Index d = features_.dim();
    const Matrix& phi = features_.phi();
    Matrix j(features_.n_pairs(), num_params());
    for (Index i = 0; i < phi.rows(); ++i) {
        const Vector pre = theta() * phi.row(i).transpose();
        for (Index r = 0; r < width(); ++r) {
            const double c = unit_coefficient(pre(r), r);
            for (Index k = 0; k < d; ++k)
                j(i, r * d + k) = c * phi(i, k);
        }
    }
    return j;
}

TwoLayerRelu init_ntk(const FeatureMap& features, Index width, double nu, Rng& rng) {
    require(width >= 1, "init_ntk: width must be >= 1");
    require(nu > 0.0, "init_ntk: nu must be positive");
    std::normal_distribution<double> normal(0.0, nu);
    std::bernoulli_distribution coin(0.5);
    Vector params(width * features.dim());
    Vector signs(width);
    for (Index r = 0; r < width; ++r) {
        for (Index j = 0; j < features.dim(); ++j)
            params(r * features.dim() + j) = normal(rng);
        signs(r) = coin(rng) ? 1.0 : -1.0;
    }
    return {features, std::move(params), std::move(signs), nu};
}

double gram_min_eigenvalue(const Matrix& jacobian, const StationaryDistribution& mu,
                           GramMode mode) {
    require(jacobian.rows() == mu.size(), "gram_min_eigenvalue: Jacobian rows must match mu");
    const Matrix jmu = mu.cwiseMax(0.0).cwiseSqrt().asDiagonal() * jacobian;
    const Matrix m = mode == GramMode::gram ? Matrix(jmu * jmu.transpose())
                                            : Matrix(jmu.transpose() * jmu);
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
        throw NumericalError("gram_min_eigenvalue: assembled matrix is not symmetric");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
        throw NumericalError("gram_min_eigenvalue: eigensolver failed");
    return eig.eigenvalues().minCoeff();
}

GramMode natural_gram_mode(Index num_params, Index n_pairs) {
    return num_params >= n_pairs ? GramMode::gram : GramMode::covariance;
}

} // namespace gntd
