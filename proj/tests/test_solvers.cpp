#include "fixtures.hpp"

#include <cmath>

using namespace gntd;
using namespace fixtures;

namespace {

std::span<const WeightedTransition> view(const std::vector<WeightedTransition>& b) { return b; }
std::span<const Transition> view(const std::vector<Transition>& b) { return b; }

} // namespace

TEST_CASE("td error") {
    const auto mdp = chain2();
    const LinearApprox tab(FeatureMap::identity(2, 2), (Vector(4) << 1, 1, 0, 0).finished());
    CHECK(td_error(tab, Transition{0, 0, 1.0, 0, 0}, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
    const LinearApprox zero(FeatureMap::identity(2, 2));
    CHECK(td_error(zero, Transition{1, 1, 0.7, 0, 1}, 0.5) == -0.7);

    // Q = Q^pi: the expected error over the tuple distribution vanishes at every pair.
    const auto pi = uniform(mdp);
    const LinearApprox exact(FeatureMap::identity(2, 2), exact_q_pi(mdp, pi));
    const auto mu = stationary_distribution(mdp, pi);
    Vector per_pair = Vector::Zero(4);
    for (const auto& [xi, w] : enumerate_expectation_batch(mdp, pi, mu))
        per_pair(mdp.pair(xi.s, xi.a)) += w * td_error(exact, xi, 0.5);
    CHECK(max_abs(per_pair) <= 1e-14);
}

TEST_CASE("population curvature") {
    const auto mdp = chain2();
    const auto pi = uniform(mdp);
    const auto mu = stationary_distribution(mdp, pi);
    const LinearApprox zero(FeatureMap::identity(2, 2));
    const CurvaturePair c = population_curvature(zero, mdp, pi, mu);
    CHECK((c.H - Matrix(mu.asDiagonal())).norm() <= 1e-15);
    CHECK(max_abs(c.g + 0.25 * (Vector(4) << 1, 1, 0, 0).finished()) <= 1e-15);
    CHECK(c.kind == CurvatureKind::population);

    const LinearApprox exact(FeatureMap::identity(2, 2), exact_q_pi(mdp, pi));
    CHECK(max_abs(population_curvature(exact, mdp, pi, mu).g) <= 1e-10);
    CHECK_THROWS_AS(population_curvature(zero, mdp, pi, mu, 4), EnumerationBudgetExceeded);
}

TEST_CASE("empirical curvature") {
    const auto mdp = random_mdp(4, 3, 2, 0.8);
    Rng rng(4);
    const auto pi = random_policy(3, 2, rng);
    const auto mu = stationary_distribution(mdp, pi);
    const auto f = FeatureMap::random_unit_rows(3, 2, 4, rng);
    const LinearApprox lin(f, Vector::Random(4));

    SUBCASE("enumerated batch equals population") {
        const auto tuples = enumerate_expectation_batch(mdp, pi, mu);
        const CurvaturePair e = empirical_curvature(lin, view(tuples), mdp.discount());
        const CurvaturePair p = population_curvature(lin, mdp, pi, mu);
        CHECK((e.H - p.H).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(max_abs(e.g - p.g) <= 1e-12);
    }
    SUBCASE("single tuple is rank one") {
        const std::vector<Transition> one{{0, 1, 0.3, 2, 0}};
        const CurvaturePair c = empirical_curvature(lin, view(one), 0.8);
        Eigen::FullPivLU<Matrix> lu(c.H);
        lu.setThreshold(1e-12);
        CHECK(lu.rank() <= 1);
    }
    SUBCASE("empty batch") {
        const std::vector<Transition> none;
        CHECK_THROWS_AS(empirical_curvature(lin, view(none), 0.8), ContractViolation);
    }
}

TEST_CASE("sampled semi-gradient concentrates") {
    const auto mdp = chain2();
    const auto pi = uniform(mdp);
    const auto mu = stationary_distribution(mdp, pi);
    const LinearApprox zero(FeatureMap::identity(2, 2));
    const Vector g = population_curvature(zero, mdp, pi, mu).g;
    const Index n = 10000;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto batch = sample_batch(mdp, pi, mu, n, rng);
        const CurvaturePair c = empirical_curvature(zero, view(batch), 0.5);
        CHECK((c.g - g).norm() <= 5.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("gauss-newton direction") {
    GntdConfig cfg;
    SUBCASE("zero gradient") {
        cfg.omega = 0.1;
        CHECK(gauss_newton_direction(CurvaturePair{Matrix::Identity(3, 3), Vector::Zero(3)}, cfg).isZero(0.0));
    }
    SUBCASE("identity curvature, pseudo-inverse, no damping") {
        cfg.omega = 0.0;
        cfg.solver = DirectionSolver::pseudo_inverse;
        const Vector g = (Vector(3) << 1, -2, 0.5).finished();
        CHECK(max_abs(gauss_newton_direction(CurvaturePair{Matrix::Identity(3, 3), g}, cfg) + g) <= 1e-14);
    }
    SUBCASE("diagonal closed form") {
        cfg.omega = 1.0;
        Matrix h = Matrix::Zero(2, 2);
        h(0, 0) = 2.0;
        const Vector g = (Vector(2) << 3, 1).finished();
        // (H + I)^{-1} g = (3/3, 1/1)
        const Vector expected = (Vector(2) << -1, -1).finished();
        CHECK(max_abs(gauss_newton_direction(CurvaturePair{h, g}, cfg) - expected) <= 1e-14);
        cfg.solver = DirectionSolver::pseudo_inverse;
        CHECK(max_abs(gauss_newton_direction(CurvaturePair{h, g}, cfg) - expected) <= 1e-14);
        h(1, 1) = 1.0;
        cfg.solver = DirectionSolver::damped;
        CHECK(max_abs(gauss_newton_direction(CurvaturePair{h, g}, cfg) - (Vector(2) << -1, -0.5).finished()) <=
              1e-14);
    }
    SUBCASE("indefinite curvature is rejected") {
        cfg.omega = 0.1;
        Matrix h = Matrix::Identity(2, 2);
        h(1, 1) = -1.0;
        CHECK_THROWS_AS(gauss_newton_direction(CurvaturePair{h, Vector::Ones(2)}, cfg), NumericalError);
    }
    SUBCASE("square-root form agrees with the dense solve") {
        cfg.omega = 0.05;
        for (const Index p : {5, 40, 700}) {
            const Matrix root = Matrix::Random(6, p);
            const Vector g = root.transpose() * Vector::Random(6) + 0.1 * Vector::Random(p);
            const SampleCurvature sc{root, g};
            const Vector dense = -(sc.dense() + cfg.omega * Matrix::Identity(p, p)).llt().solve(g);
            CHECK(max_abs(gauss_newton_direction(sc, cfg) - dense) <= 1e-9 * (1.0 + max_abs(dense)));
        }
    }
    SUBCASE("pseudo-inverse in square-root form") {
        cfg.omega = 0.0;
        cfg.solver = DirectionSolver::pseudo_inverse;
        const Matrix root = Matrix::Random(3, 8);
        const Vector g = root.transpose() * Vector::Random(3);
        const SampleCurvature sc{root, g};
        const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sc.dense());
        const Vector oracle = -cod.pseudoInverse() * g;
        CHECK(max_abs(gauss_newton_direction(sc, cfg) - oracle) <= 1e-8 * (1.0 + max_abs(oracle)));
    }
    SUBCASE("config validation") {
        cfg.omega = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ContractViolation);
        cfg.omega = 1.0;
        cfg.beta = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    }
}

TEST_CASE("minimum-norm least squares") {
    const Matrix a = Matrix::Random(4, 9);
    const Vector b = Vector::Random(4);
    const Vector x = min_norm_least_squares(a, b, 1e-12);
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
    CHECK(max_abs(x - cod.solve(b)) <= 1e-10);
    const Matrix tall = Matrix::Random(9, 3);
    const Vector bt = Vector::Random(9);
    CHECK(max_abs(min_norm_least_squares(tall, bt, 1e-12) - tall.colPivHouseholderQr().solve(bt)) <= 1e-10);
}

TEST_CASE("population gntd step") {
    const auto mdp = chain2();
    const auto pi = uniform(mdp);
    const auto mu = stationary_distribution(mdp, pi);
    const LinearApprox zero(FeatureMap::identity(2, 2));

    const auto half = population_gntd_step(zero, mdp, pi, mu, 0.5);
    CHECK(max_abs(half.value_table() - (Vector(4) << 0.5, 0.5, 0, 0).finished()) <= 1e-12);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = random_mdp(seed, 4, 3, 0.9);
        Rng rng(seed);
        const auto p = random_policy(4, 3, rng);
        const auto u = stationary_distribution(m, p);
        const LinearApprox q0(FeatureMap::identity(4, 3), Vector::Random(12));
        const QTable tq = bellman_operator(m, p, q0.value_table());
        CHECK(max_abs(population_gntd_step(q0, m, p, u, 1.0).value_table() - tq) <= 1e-10);
        const double beta = 0.3;
        CHECK(max_abs(population_gntd_step(q0, m, p, u, beta).value_table() -
                      ((1 - beta) * q0.value_table() + beta * tq)) <= 1e-10);
    }
}

TEST_CASE("stochastic gntd step") {
    const auto mdp = random_mdp(8, 3, 2, 0.7);
    Rng rng(8);
    const auto pi = random_policy(3, 2, rng);
    const auto mu = stationary_distribution(mdp, pi);
    const auto tuples = enumerate_expectation_batch(mdp, pi, mu);
    GntdConfig cfg;
    cfg.beta = 0.6;

    SUBCASE("fixed point stays put") {
        const LinearApprox exact(FeatureMap::identity(3, 2), exact_q_pi(mdp, pi));
        const auto next = stochastic_gntd_step(exact, view(tuples), mdp.discount(), cfg);
        CHECK(max_abs(next.params() - exact.params()) <= 1e-10);
    }
    SUBCASE("enumerated batch with pseudo-inverse equals the population step") {
        cfg.omega = 0.0;
        cfg.solver = DirectionSolver::pseudo_inverse;
        const auto f = FeatureMap::random_unit_rows(3, 2, 4, rng);
        const LinearApprox lin(f, Vector::Random(4));
        const auto a = stochastic_gntd_step(lin, view(tuples), mdp.discount(), cfg);
        const auto b = population_gntd_step(lin, mdp, pi, mu, cfg.beta);
        CHECK(max_abs(a.params() - b.params()) <= 1e-8);

        const LinearApprox tab(FeatureMap::identity(3, 2), Vector::Random(6));
        const auto c = stochastic_gntd_step(tab, view(tuples), mdp.discount(), cfg);
        const auto d = population_gntd_step(tab, mdp, pi, mu, cfg.beta);
        CHECK(max_abs(c.params() - d.params()) <= 1e-8);
    }
    SUBCASE("scalar model") {
        const TabularMdp single(Matrix::Ones(1, 1), Matrix::Constant(1, 1, 0.4), 0.5, 1.0);
        const LinearApprox one(FeatureMap(1, 1, Matrix::Ones(1, 1)), Vector::Constant(1, 2.0));
        const std::vector<Transition> batch{{0, 0, 0.4, 0, 0}, {0, 0, 0.4, 0, 0}};
        cfg.omega = 1.0;
        cfg.beta = 0.5;
        const double delta = 2.0 - (0.4 + 0.5 * 2.0);
        const auto next = stochastic_gntd_step(one, view(batch), 0.5, cfg);
        CHECK(next.params()(0) == doctest::Approx(2.0 - 0.25 * delta).epsilon(1e-15));
        (void)single;
    }
}

TEST_CASE("td steps") {
    const auto mdp = random_mdp(2, 3, 2, 0.8);
    const auto pi = Policy::uniform(3, 2);
    const auto mu = stationary_distribution(mdp, pi);
    const auto tuples = enumerate_expectation_batch(mdp, pi, mu);
    const LinearApprox q0(FeatureMap::identity(3, 2), Vector::Random(6));

    CHECK(td_step(q0, view(tuples), mdp.discount(), 0.0).params() == q0.params());
    const LinearApprox exact(FeatureMap::identity(3, 2), exact_q_pi(mdp, pi));
    CHECK(max_abs(td_step(exact, view(tuples), mdp.discount(), 0.7).params() - exact.params()) <= 1e-12);

    const double beta = 0.7;
    const QTable q = q0.value_table();
    const QTable expected = q - beta * mu.cwiseProduct(q - bellman_operator(mdp, pi, q));
    CHECK(max_abs(td_step(q0, view(tuples), mdp.discount(), beta).value_table() - expected) <= 1e-12);
    CHECK(max_abs(population_td_step(q0, mdp, pi, mu, beta).value_table() - expected) <= 1e-12);
}

TEST_CASE("fitted Q iteration") {
    const auto mdp = random_mdp(6, 3, 2, 0.9);
    const auto pi = Policy::uniform(3, 2);
    const auto mu = stationary_distribution(mdp, pi);
    const LinearApprox q0(FeatureMap::identity(3, 2), Vector::Random(6));
    const QTable tq = bellman_operator(mdp, pi, q0.value_table());

    FqiConfig cfg;
    cfg.inner_steps = 4000;
    cfg.inner_lr = 1.0 / mu.maxCoeff();
    cfg.inner_lr *= 0.9;
    CHECK(max_abs(fqi_step(q0, mdp, pi, mu, cfg).value_table() - tq) <= 1e-4);

    cfg.inner_steps = 0;
    CHECK(fqi_step(q0, mdp, pi, mu, cfg).params() == q0.params());

    Rng rng(6);
    const auto f = FeatureMap::random_unit_rows(3, 2, 4, rng);
    const LinearApprox lin(f, Vector::Random(4));
    cfg.inner_steps = 50;
    cfg.inner_lr = 0.5;
    std::vector<double> losses;
    fqi_step(lin, mdp, pi, mu, cfg, &losses);
    CHECK(losses.size() == 51);
    for (std::size_t i = 1; i < losses.size(); ++i)
        CHECK(losses[i] <= losses[i - 1] + 1e-15);

    const auto batch = sample_batch(mdp, pi, mu, 64, rng);
    losses.clear();
    fqi_step(lin, view(batch), mdp.discount(), cfg, &losses);
    for (std::size_t i = 1; i < losses.size(); ++i)
        CHECK(losses[i] <= losses[i - 1] + 1e-15);
}

TEST_CASE("fitted error") {
    const auto mdp = random_mdp(9, 3, 2, 0.9);
    const auto pi = Policy::uniform(3, 2);
    const auto mu = stationary_distribution(mdp, pi);
    const LinearApprox tab(FeatureMap::identity(3, 2), Vector::Random(6));
    CHECK(fitted_error(tab, mdp, pi, mu) <= 1e-10);

    // One feature column: the residual of Q = 0 is r, not a multiple of that column.
    Matrix col = Matrix::Zero(6, 1);
    col(0, 0) = 1.0;
    const LinearApprox rank1(FeatureMap(3, 2, col), Vector::Zero(1));
    const Vector sw = mu.cwiseSqrt();
    const Vector b = sw.cwiseProduct(mdp.reward_vector());
    double oracle = b.squaredNorm() - b(0) * b(0);
    CHECK(fitted_error(rank1, mdp, pi, mu) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(fitted_error(rank1, mdp, pi, mu) > 0.0);

    // Any features, parameters reproducing Q^pi exactly.
    Matrix q_col = exact_q_pi(mdp, pi);
    q_col /= q_col.cwiseAbs().maxCoeff();
    const LinearApprox exact(FeatureMap(3, 2, q_col), Vector::Constant(1, exact_q_pi(mdp, pi).cwiseAbs().maxCoeff()));
    CHECK(fitted_error(exact, mdp, pi, mu) <= 1e-20);
}
