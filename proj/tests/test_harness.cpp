#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gntd;
using namespace gntd::harness;
using namespace fixtures;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "gntd_harness_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string drop_wall_ms(const std::string& csv) {
    std::stringstream in(csv), out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        for (std::size_t i = 0; i < f.size(); ++i)
            if (i != 5)
                out << f[i] << ';';
        out << '\n';
    }
    return out.str();
}

ExperimentConfig tabular_config(const TabularMdp& mdp, Algorithm alg, double beta, Index iterations) {
    ExperimentConfig c;
    c.mdp = mdp;
    c.algorithm = alg;
    c.gntd.beta = beta;
    c.gntd.iterations = iterations;
    return c;
}

} // namespace

TEST_CASE("random MDP generator") {
    const auto a = generate_random_mdp(17, 5, 3);
    const auto b = generate_random_mdp(17, 5, 3);
    CHECK(a.transition() == b.transition());
    CHECK(a.reward() == b.reward());
    CHECK(generate_random_mdp(18, 5, 3).transition() != a.transition());
    CHECK(a.transition().minCoeff() >= 0.01 / 5.0 - 1e-15);
    CHECK(a.reward().cwiseAbs().maxCoeff() <= 1.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto m = generate_random_mdp(seed, 5, 2, 1.0, 1.0);
        CHECK_NOTHROW(stationary_distribution(m, Policy::uniform(5, 2)));
    }
    CHECK_THROWS_AS(generate_random_mdp(1, 0, 2), ContractViolation);
    CHECK_THROWS_AS(generate_random_mdp(1, 2, 2, 1.0, 0.0), ContractViolation);
}

TEST_CASE("tabular population gntd metrics") {
    SUBCASE("beta = 1 is Bellman iteration") {
        const auto mdp = generate_random_mdp(2, 6, 2, 1.0, 1.0, 0.8);
        const auto result = run_experiment(tabular_config(mdp, Algorithm::gntd, 1.0, 30));
        REQUIRE(result.rows.size() == 31);
        for (const auto& row : result.rows)
            CHECK(row.mu_error <= std::pow(0.8, static_cast<double>(row.iter)) * result.rows[0].mu_error + 1e-9);
    }
    SUBCASE("beta = 0.5, gamma = 0.5 contracts at 0.75") {
        const auto mdp = chain2(0.5);
        const auto result = run_experiment(tabular_config(mdp, Algorithm::gntd, 0.5, 40));
        CHECK_FALSE(result.rows[0].contraction_ratio.has_value());
        for (std::size_t i = 1; i < result.rows.size(); ++i)
            if (result.rows[i].contraction_ratio)
                CHECK(*result.rows[i].contraction_ratio <= 0.75 + 1e-9);
    }
    SUBCASE("initial error matches an independent computation") {
        const auto mdp = generate_random_mdp(3, 4, 2);
        auto cfg = tabular_config(mdp, Algorithm::gntd, 0.5, 3);
        cfg.approximator.initial_params = Vector::LinSpaced(8, -1.0, 1.0);
        const auto result = run_experiment(cfg);
        const auto pi = Policy::uniform(4, 2);
        const auto mu = stationary_distribution(mdp, pi);
        CHECK(result.rows[0].mu_error == mu_norm(Vector::LinSpaced(8, -1.0, 1.0) - exact_q_pi(mdp, pi), mu));
        CHECK(result.rows[0].lambda0 == doctest::Approx(mu.minCoeff()));
    }
}

TEST_CASE("sample accounting and determinism") {
    ExperimentConfig cfg;
    cfg.mdp = MdpGenerator{4, 4, 2};
    cfg.update = UpdateMode::stochastic;
    cfg.gntd.batch_size = 32;
    cfg.gntd.iterations = 12;
    cfg.eval_every = 5;
    cfg.seed = 99;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    CHECK(a.total_samples == 12 * 32);
    std::vector<Index> iters;
    for (const auto& r : a.rows)
        iters.push_back(r.iter);
    CHECK(iters == std::vector<Index>{0, 5, 10, 12});
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mu_error == b.rows[i].mu_error);
        CHECK(a.rows[i].bellman_error == b.rows[i].bellman_error);
    }
    emit_csv(a.rows, scratch("a.csv"));
    emit_csv(b.rows, scratch("b.csv"));
    CHECK(drop_wall_ms(slurp(scratch("a.csv"))) == drop_wall_ms(slurp(scratch("b.csv"))));

    cfg.update = UpdateMode::population;
    CHECK(run_experiment(cfg).total_samples == 0);

    cfg.update = UpdateMode::stochastic;
    cfg.algorithm = Algorithm::fqi;
    cfg.fqi.inner_batch = 16;
    cfg.fqi.inner_steps = 5;
    CHECK(run_experiment(cfg).total_samples == 12 * 16);
}

TEST_CASE("every algorithm and approximator runs") {
    for (const Algorithm alg : {Algorithm::gntd, Algorithm::td, Algorithm::fqi, Algorithm::gntd_qlearn,
                                Algorithm::gndqn, Algorithm::dqn, Algorithm::td_qlearn})
        for (const UpdateMode mode : {UpdateMode::population, UpdateMode::stochastic})
            for (const ApproxType type : {ApproxType::tabular, ApproxType::linear, ApproxType::relu, ApproxType::mlp}) {
                ExperimentConfig cfg;
                cfg.mdp = MdpGenerator{1, 3, 2, 1.0, 1.0, 0.7};
                cfg.algorithm = alg;
                cfg.update = mode;
                cfg.approximator.type = type;
                if (type != ApproxType::tabular)
                    cfg.approximator.features = RandomFeatures{4, 3};
                cfg.approximator.width = 16;
                cfg.gntd.iterations = 3;
                cfg.gntd.batch_size = 16;
                cfg.fqi.inner_steps = 3;
                cfg.fqi.inner_batch = 16;
                cfg.tau = 0.5;
                cfg.gntd.beta = 0.1;
                CAPTURE(to_string(alg));
                const auto r = run_experiment(cfg);
                CHECK(r.rows.size() == 4);
                CHECK(r.rows.back().mu_error >= 0.0);
                CHECK(std::isfinite(r.rows.back().mu_error));
            }
}

TEST_CASE("kfac runs and step failures carry the iteration") {
    ExperimentConfig cfg;
    cfg.mdp = MdpGenerator{1, 3, 2};
    cfg.approximator.type = ApproxType::mlp;
    cfg.approximator.features = RandomFeatures{4, 3};
    cfg.approximator.hidden = {6, 6};
    cfg.kfac = true;
    cfg.gntd.iterations = 4;
    for (const UpdateMode mode : {UpdateMode::population, UpdateMode::stochastic}) {
        cfg.update = mode;
        CHECK(std::isfinite(run_experiment(cfg).rows.back().mu_error));
    }
    cfg.gntd.beta = 1e300;
    try {
        run_experiment(cfg);
        FAIL("expected a failure");
    } catch (const IterationError& e) {
        CHECK(e.iteration() >= 0);
        CHECK(e.iteration() < 4);
        CHECK(std::string(e.what()).rfind("iteration " + std::to_string(e.iteration()) + ": ", 0) == 0);
    }
}

TEST_CASE("config validation") {
    using io::Json;
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"algoritm": "td"})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"gntd": {"bta": 1}})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"algorithm": "sarsa"})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"kfac": true})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"kfac": true, "algorithm": "td",
        "approximator": {"type": "mlp", "features": {"random": {"dim": 3}}}})")), ContractViolation);
    CHECK_NOTHROW(config_from_json(Json::parse(R"({"kfac": true,
        "approximator": {"type": "mlp", "features": {"random": {"dim": 3}}}})")));
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"tau": 0})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"eval_every": 0})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"gntd": {"beta": "big"}})")), ContractViolation);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"approximator": {"type": "tabular",
        "features": {"random": {"dim": 3}}}})")), ContractViolation);

    const auto c = config_from_json(Json::parse(R"({
        "name": "x", "algorithm": "gndqn", "update": "stochastic", "tau": 0.1, "seed": 5,
        "mdp": {"generator": {"seed": 2, "n_states": 4, "n_actions": 3, "discount": 0.8}},
        "policy": {"softmax_q_star": {"temperature": 0.5}},
        "gntd": {"beta": 0.2, "omega": 0.01, "batch_size": 8, "iterations": 7, "direction_solver": "pseudo_inverse"}
    })"));
    CHECK(c.algorithm == Algorithm::gndqn);
    CHECK(c.gntd.solver == DirectionSolver::pseudo_inverse);
    CHECK(std::get<MdpGenerator>(c.mdp).n_actions == 3);
    CHECK(std::get<SoftmaxOfQStar>(c.policy).temperature == 0.5);
    CHECK(run_experiment(c).rows.size() == 8);
}

TEST_CASE("config files resolve relative paths") {
    const auto dir = scratch("cfg");
    std::filesystem::create_directories(dir);
    io::write_json(io::mdp_to_json(chain2(0.5)), dir / "chain.json");
    io::write_json(io::policy_to_json(Policy::uniform(2, 2)), dir / "pi.json");
    std::ofstream(dir / "exp.json") << R"({"mdp": {"file": "chain.json"}, "policy": {"file": "pi.json"},
        "gntd": {"beta": 1.0, "iterations": 5}})";
    const auto cfg = load_config(dir / "exp.json");
    const auto result = run_experiment(cfg);
    CHECK(max_abs(result.oracle - (Vector(4) << 1.75, 1.25, 0.25, 0.75).finished()) <= 1e-12);
    std::ofstream(dir / "broken.json") << R"({"mdp": {"file": "missing.json"}})";
    CHECK_THROWS(run_experiment(load_config(dir / "broken.json")));
}

TEST_CASE("comparison reports") {
    const auto mdp = generate_random_mdp(5, 3, 2, 1.0, 1.0, 0.8);

    SUBCASE("a config compared with itself") {
        const auto cfg = tabular_config(mdp, Algorithm::gntd, 0.5, 40);
        const auto report = compare_algorithms({cfg, cfg}, 1e-3);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].iterations_to_epsilon == report.rows[1].iterations_to_epsilon);
        CHECK(report.rows[0].final_mu_error == report.rows[1].final_mu_error);
        CHECK(report.rows[0].final_bellman_error == report.rows[1].final_bellman_error);
    }
    SUBCASE("fqi with many inner steps tracks gntd with beta = 1") {
        const auto gntd = tabular_config(mdp, Algorithm::gntd, 1.0, 60);
        auto fqi = tabular_config(mdp, Algorithm::fqi, 1.0, 60);
        const auto mu = stationary_distribution(mdp, Policy::uniform(3, 2));
        fqi.fqi.inner_lr = 1.0 / mu.maxCoeff();
        fqi.fqi.inner_steps = 3000;
        const auto report = compare_algorithms({gntd, fqi}, 1e-3);
        REQUIRE(report.rows[0].iterations_to_epsilon.has_value());
        REQUIRE(report.rows[1].iterations_to_epsilon.has_value());
        CHECK(std::abs(*report.rows[0].iterations_to_epsilon - *report.rows[1].iterations_to_epsilon) <= 1);
    }
    SUBCASE("mismatched oracles are rejected") {
        const auto a = tabular_config(mdp, Algorithm::gntd, 0.5, 2);
        const auto b = tabular_config(generate_random_mdp(6, 3, 2), Algorithm::gntd, 0.5, 2);
        CHECK_THROWS_AS(compare_algorithms({a, b}, 1e-3), ContractViolation);
        auto c = a;
        c.algorithm = Algorithm::gntd_qlearn;
        CHECK_THROWS_AS(compare_algorithms({a, c}, 1e-3), ContractViolation);
    }
    SUBCASE("not reached is a sentinel") {
        const auto cfg = tabular_config(mdp, Algorithm::gntd, 0.1, 2);
        const auto report = compare_algorithms({cfg}, 1e-9);
        CHECK_FALSE(report.rows[0].iterations_to_epsilon.has_value());
        emit_report(report, scratch("report.csv"));
        const std::string text = slurp(scratch("report.csv"));
        CHECK(text.rfind(std::string(kReportHeader) + "\n", 0) == 0);
        CHECK(text.find(std::string(",") + kNotReached + ",") != std::string::npos);
    }
}

TEST_CASE("csv output") {
    emit_csv({}, scratch("empty.csv"));
    CHECK(slurp(scratch("empty.csv")) == std::string(kMetricsHeader) + "\n");
    CHECK(read_metrics_csv(scratch("empty.csv")).empty());

    std::vector<MetricsRow> rows(3);
    rows[0] = {0, 0.1, 1.0 / 3.0, std::nullopt, 1e-17, 0.5, 7};
    rows[1] = {1, std::nextafter(0.1, 1.0), 2.0 / 3.0, 0.123456789012345678, 3.0, 1.25, 7};
    rows[2] = {2, 5e-300, 1e300, 1e-14, 0.0, 2.0, 7};
    emit_csv(rows, scratch("rows.csv"));
    const auto back = read_metrics_csv(scratch("rows.csv"));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].iter == rows[i].iter);
        CHECK(back[i].mu_error == rows[i].mu_error);
        CHECK(back[i].bellman_error == rows[i].bellman_error);
        CHECK(back[i].contraction_ratio == rows[i].contraction_ratio);
        CHECK(back[i].lambda0 == rows[i].lambda0);
        CHECK(back[i].wall_ms == rows[i].wall_ms);
        CHECK(back[i].seed == rows[i].seed);
    }
    CHECK(slurp(scratch("rows.csv")).find("\n0,0.10000000000000001,0.33333333333333331,,") != std::string::npos);
    CHECK_THROWS(emit_csv(rows, "/nonexistent-dir/x.csv"));
}

TEST_CASE("oracle dump") {
    const auto mdp = chain2(0.5);
    emit_oracle(mdp, Policy::uniform(2, 2), scratch("oracle.csv"));
    const std::string text = slurp(scratch("oracle.csv"));
    CHECK(text.rfind("state,action,q_pi,q_star,mu\n0,0,1.75,", 0) == 0);
}
