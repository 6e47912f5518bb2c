#include "gntd/solvers.hpp"

#include <iostream>

namespace gntd {

void GntdConfig::validate() const {
    require(beta > 0.0, "GntdConfig: beta must be positive");
    require(omega >= 0.0, "GntdConfig: omega must be non-negative");
    require(batch_size >= 1, "GntdConfig: batch_size must be >= 1");
    require(iterations >= 1, "GntdConfig: iterations must be >= 1");
    require(omega > 0.0 || solver == DirectionSolver::pseudo_inverse,
            "GntdConfig: omega = 0 requires the pseudo-inverse solver");
    require(solver == DirectionSolver::damped || sigma_min_rel > 0.0,
            "GntdConfig: pseudo-inverse solver needs sigma_min_rel > 0");
}

void FqiConfig::validate() const {
    require(inner_steps >= 1 && inner_lr > 0.0 && inner_batch >= 1,
            "FqiConfig: all fields must be positive");
}

namespace {

constexpr double kSymTol = 1e-10;
constexpr double kPsdTol = 1e-10;
constexpr double kResidualTol = 1e-10;

/// Pseudo-inverse applied to rhs for a symmetric PSD matrix.
Vector psd_pinv_apply(const Matrix& m, const Vector& rhs, double sigma_min_rel, int power = 1) {
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    if (eig.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed");
    const Vector& lambda = eig.eigenvalues();
    const double top = std::max(lambda.maxCoeff(), 0.0);
    if (lambda.minCoeff() < -kPsdTol * std::max(1.0, top))
        throw NumericalError("curvature matrix is not positive semi-definite (min eigenvalue " +
                             std::to_string(lambda.minCoeff()) + ")");
    const double cutoff = sigma_min_rel * top;
    Vector inv = Vector::Zero(lambda.size());
    for (Index i = 0; i < lambda.size(); ++i)
        if (lambda(i) > cutoff && lambda(i) > 0.0)
            inv(i) = std::pow(lambda(i), -power);
    const Matrix& v = eig.eigenvectors();
    return v * inv.asDiagonal() * (v.transpose() * rhs);
}

void check_residual(const Vector& residual, const Vector& g) {
    const double r = residual.norm();
    if (!(r <= kResidualTol * (g.norm() + 1.0)))
        throw NumericalError("damped Gauss-Newton solve residual " + std::to_string(r) +
                             " exceeds tolerance");
}

} // namespace

Vector gauss_newton_direction(const CurvaturePair& pair, const GntdConfig& config) {
    const Matrix& h = pair.H;
    require(h.rows() == h.cols() && h.rows() == pair.g.size(),
            "gauss_newton_direction: shape mismatch");
    require(config.omega >= 0.0, "gauss_newton_direction: omega must be non-negative");
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > kSymTol * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw NumericalError("gauss_newton_direction: H is not symmetric");

    const Index p = h.rows();
    const Matrix shifted = h + config.omega * Matrix::Identity(p, p);
    if (config.solver == DirectionSolver::damped) {
        require(config.omega > 0.0, "gauss_newton_direction: damped solver needs omega > 0");
        const Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Vector d = llt.solve(-pair.g);
            check_residual(shifted * d + pair.g, pair.g);
            return d;
        }
        std::cerr << "warning: Cholesky factorization of H + omega I failed; "
                     "falling back to pseudo-inverse\n";
    } else {
        require(config.sigma_min_rel > 0.0, "gauss_newton_direction: sigma_min_rel must be > 0");
    }
    const double cutoff = config.solver == DirectionSolver::damped ? 1e-10 : config.sigma_min_rel;
    return -psd_pinv_apply(shifted, pair.g, cutoff);
}

Vector gauss_newton_direction(const SampleCurvature& curvature, const GntdConfig& config) {
    const Index p = curvature.num_params();
    const Index n = curvature.root.rows();
    if (p <= std::max<Index>(n, 512))
        return gauss_newton_direction(CurvaturePair{curvature.dense(), curvature.g}, config);

    // Wide model: work with the n x n kernel R R^T.
    const Matrix& r = curvature.root;
    const Vector& g = curvature.g;
    const Matrix kernel = r * r.transpose();
    if (config.omega > 0.0) {
        // Woodbury: (R^T R + w I)^{-1} g = (g - R^T (w I + R R^T)^{-1} R g) / w.
        const Matrix shifted = kernel + config.omega * Matrix::Identity(n, n);
        const Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() != Eigen::Success)
            throw NumericalError("gauss_newton_direction: kernel factorization failed");
        const Vector y = llt.solve(r * g);
        Vector d = -(g - r.transpose() * y) / config.omega;
        check_residual(r.transpose() * (r * d) + config.omega * d + g, g);
        return d;
    }
    require(config.solver == DirectionSolver::pseudo_inverse,
            "gauss_newton_direction: omega = 0 requires the pseudo-inverse solver");
    // H^+ = R^T (R R^T)^{+2} R.
    return -(r.transpose() * psd_pinv_apply(kernel, r * g, config.sigma_min_rel, 2));
}

Vector min_norm_least_squares(const Matrix& a, const Vector& b, double sigma_min_rel) {
    require(a.rows() == b.size(), "min_norm_least_squares: shape mismatch");
    require(sigma_min_rel > 0.0, "min_norm_least_squares: sigma_min_rel must be positive");
    if (a.cols() >= a.rows()) {
        const Matrix kernel = a * a.transpose();
        return a.transpose() * psd_pinv_apply(kernel, b, sigma_min_rel);
    }
    const Matrix h = a.transpose() * a;
    return psd_pinv_apply(h, a.transpose() * b, sigma_min_rel);
}

} // namespace gntd
