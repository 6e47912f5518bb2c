#include "gntd/harness.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace gntd::harness {

using io::Json;

TabularMdp generate_random_mdp(std::uint64_t seed, Index n_states, Index n_actions,
                               double reward_scale, double concentration, double discount) {
    require(n_states >= 1 && n_actions >= 1, "generate_random_mdp: sizes must be >= 1");
    require(concentration > 0.0, "generate_random_mdp: concentration must be positive");
    require(reward_scale >= 0.0, "generate_random_mdp: reward_scale must be non-negative");
    Rng rng(seed);
    std::gamma_distribution<double> gamma_draw(concentration, 1.0);
    std::uniform_real_distribution<double> reward_draw(-reward_scale, reward_scale);
    constexpr double kMix = 0.01;

    Matrix transition(n_states * n_actions, n_states);
    for (Index i = 0; i < transition.rows(); ++i) {
        for (Index j = 0; j < n_states; ++j)
            transition(i, j) = gamma_draw(rng);
        const double total = transition.row(i).sum();
        if (total > 0.0)
            transition.row(i) /= total;
        else
            transition.row(i).setConstant(1.0 / static_cast<double>(n_states));
        transition.row(i) = (1.0 - kMix) * transition.row(i).array() +
                            kMix / static_cast<double>(n_states);
        transition.row(i) /= transition.row(i).sum();
    }
    Matrix reward(n_states, n_actions);
    for (Index s = 0; s < n_states; ++s)
        for (Index a = 0; a < n_actions; ++a)
            reward(s, a) = reward_scale > 0.0 ? reward_draw(rng) : 0.0;
    return TabularMdp(std::move(transition), std::move(reward), discount,
                      reward_scale > 0.0 ? reward_scale : 1.0);
}

std::string to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::gntd: return "gntd";
    case Algorithm::td: return "td";
    case Algorithm::fqi: return "fqi";
    case Algorithm::gntd_qlearn: return "gntd_qlearn";
    case Algorithm::gndqn: return "gndqn";
    case Algorithm::dqn: return "dqn";
    case Algorithm::td_qlearn: return "td_qlearn";
    }
    return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
    for (Algorithm a : {Algorithm::gntd, Algorithm::td, Algorithm::fqi, Algorithm::gntd_qlearn,
                        Algorithm::gndqn, Algorithm::dqn, Algorithm::td_qlearn})
        if (to_string(a) == name)
            return a;
    throw ContractViolation("unknown algorithm '" + name + "'");
}

bool is_control(Algorithm algorithm) {
    return algorithm == Algorithm::gntd_qlearn || algorithm == Algorithm::gndqn ||
           algorithm == Algorithm::dqn || algorithm == Algorithm::td_qlearn;
}

void ExperimentConfig::validate() const {
    gntd.validate();
    require(eval_every >= 1, "config: eval_every must be >= 1");
    require(tau > 0.0 && tau <= 1.0, "config: tau must lie in (0, 1]");
    if (algorithm == Algorithm::fqi)
        fqi.validate();
    if (kfac) {
        require(approximator.type == ApproxType::mlp, "config: the K-FAC path requires an mlp approximator");
        require(algorithm == Algorithm::gntd || algorithm == Algorithm::gntd_qlearn ||
                    algorithm == Algorithm::gndqn,
                "config: K-FAC applies only to Gauss-Newton algorithms");
    }
    if (approximator.type == ApproxType::tabular)
        require(std::holds_alternative<IdentityFeatures>(approximator.features),
                "config: tabular approximator uses identity features");
    if (approximator.type == ApproxType::relu)
        require(approximator.width >= 1 && approximator.nu > 0.0,
                "config: relu needs width >= 1 and nu > 0");
    if (approximator.type == ApproxType::mlp)
        require(approximator.init_scale > 0.0, "config: mlp init_scale must be positive");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

void reject_unknown(const Json& doc, const std::set<std::string>& allowed, const std::string& where) {
    require(doc.is_object(), where + ": expected an object");
    for (const auto& [key, _] : doc.items())
        if (!allowed.contains(key))
            throw ContractViolation(where + ": unknown key '" + key + "'");
}

std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base) {
    const std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename T>
void read_opt(const Json& doc, const char* key, T& out) {
    if (doc.contains(key))
        out = doc.at(key).get<T>();
}

MdpSource parse_mdp(const Json& doc, const std::filesystem::path& base) {
    reject_unknown(doc, {"file", "inline", "generator"}, "mdp");
    require(doc.size() == 1, "mdp: give exactly one of file, inline, generator");
    if (doc.contains("file"))
        return resolve_path(doc.at("file").get<std::string>(), base);
    if (doc.contains("inline"))
        return io::mdp_from_json(doc.at("inline"));
    const Json& g = doc.at("generator");
    reject_unknown(g, {"seed", "n_states", "n_actions", "reward_scale", "concentration", "discount"},
                   "mdp.generator");
    MdpGenerator gen;
    read_opt(g, "seed", gen.seed);
    read_opt(g, "n_states", gen.n_states);
    read_opt(g, "n_actions", gen.n_actions);
    read_opt(g, "reward_scale", gen.reward_scale);
    read_opt(g, "concentration", gen.concentration);
    read_opt(g, "discount", gen.discount);
    return gen;
}

PolicySource parse_policy(const Json& doc, const std::filesystem::path& base) {
    if (doc.is_string()) {
        require(doc.get<std::string>() == "uniform", "policy: the only string form is \"uniform\"");
        return UniformPolicy{};
    }
    reject_unknown(doc, {"file", "inline", "softmax_q_star"}, "policy");
    require(doc.size() == 1, "policy: give exactly one source");
    if (doc.contains("file"))
        return resolve_path(doc.at("file").get<std::string>(), base);
    if (doc.contains("inline"))
        return io::policy_from_json(doc.at("inline"));
    const Json& sm = doc.at("softmax_q_star");
    reject_unknown(sm, {"temperature"}, "policy.softmax_q_star");
    SoftmaxOfQStar out;
    read_opt(sm, "temperature", out.temperature);
    require(out.temperature > 0.0, "policy.softmax_q_star: temperature must be positive");
    return out;
}

FeatureSource parse_features(const Json& doc, const std::filesystem::path& base) {
    if (doc.is_string()) {
        require(doc.get<std::string>() == "identity", "features: the only string form is \"identity\"");
        return IdentityFeatures{};
    }
    reject_unknown(doc, {"random", "file", "inline"}, "features");
    require(doc.size() == 1, "features: give exactly one source");
    if (doc.contains("file"))
        return resolve_path(doc.at("file").get<std::string>(), base);
    if (doc.contains("inline"))
        return io::matrix_from_json(doc.at("inline"));
    const Json& r = doc.at("random");
    reject_unknown(r, {"dim", "seed"}, "features.random");
    RandomFeatures out;
    read_opt(r, "dim", out.dim);
    read_opt(r, "seed", out.seed);
    require(out.dim >= 1, "features.random: dim must be >= 1");
    return out;
}

ApproxSpec parse_approximator(const Json& doc, const std::filesystem::path& base) {
    reject_unknown(doc, {"type", "features", "width", "nu", "hidden", "init_scale", "initial_params"},
                   "approximator");
    ApproxSpec spec;
    const std::string type = doc.value("type", std::string("tabular"));
    if (type == "tabular")
        spec.type = ApproxType::tabular;
    else if (type == "linear")
        spec.type = ApproxType::linear;
    else if (type == "relu")
        spec.type = ApproxType::relu;
    else if (type == "mlp")
        spec.type = ApproxType::mlp;
    else
        throw ContractViolation("approximator: unknown type '" + type + "'");
    if (doc.contains("features"))
        spec.features = parse_features(doc.at("features"), base);
    read_opt(doc, "width", spec.width);
    read_opt(doc, "nu", spec.nu);
    read_opt(doc, "hidden", spec.hidden);
    read_opt(doc, "init_scale", spec.init_scale);
    if (doc.contains("initial_params")) {
        const auto v = doc.at("initial_params").get<std::vector<double>>();
        spec.initial_params = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
    }
    return spec;
}

GntdConfig parse_gntd(const Json& doc) {
    reject_unknown(doc, {"beta", "omega", "batch_size", "iterations", "direction_solver", "sigma_min_rel"},
                   "gntd");
    GntdConfig c;
    read_opt(doc, "beta", c.beta);
    read_opt(doc, "omega", c.omega);
    read_opt(doc, "batch_size", c.batch_size);
    read_opt(doc, "iterations", c.iterations);
    read_opt(doc, "sigma_min_rel", c.sigma_min_rel);
    if (doc.contains("direction_solver")) {
        const auto s = doc.at("direction_solver").get<std::string>();
        if (s == "damped")
            c.solver = DirectionSolver::damped;
        else if (s == "pseudo_inverse")
            c.solver = DirectionSolver::pseudo_inverse;
        else
            throw ContractViolation("gntd: unknown direction_solver '" + s + "'");
    }
    return c;
}

FqiConfig parse_fqi(const Json& doc) {
    reject_unknown(doc, {"inner_steps", "inner_lr", "inner_batch"}, "fqi");
    FqiConfig c;
    read_opt(doc, "inner_steps", c.inner_steps);
    read_opt(doc, "inner_lr", c.inner_lr);
    read_opt(doc, "inner_batch", c.inner_batch);
    return c;
}

} // namespace

ExperimentConfig config_from_json(const Json& doc, const std::filesystem::path& base_dir) {
    reject_unknown(doc, {"name", "mdp", "policy", "approximator", "algorithm", "update", "gntd", "fqi",
                         "tau", "seed", "eval_every", "kfac"},
                   "config");
    ExperimentConfig c;
    try {
        read_opt(doc, "name", c.name);
        if (doc.contains("mdp"))
            c.mdp = parse_mdp(doc.at("mdp"), base_dir);
        if (doc.contains("policy"))
            c.policy = parse_policy(doc.at("policy"), base_dir);
        if (doc.contains("approximator"))
            c.approximator = parse_approximator(doc.at("approximator"), base_dir);
        if (doc.contains("algorithm"))
            c.algorithm = algorithm_from_string(doc.at("algorithm").get<std::string>());
        if (doc.contains("update")) {
            const auto u = doc.at("update").get<std::string>();
            require(u == "population" || u == "stochastic", "config: unknown update '" + u + "'");
            c.update = u == "population" ? UpdateMode::population : UpdateMode::stochastic;
        }
        if (doc.contains("gntd"))
            c.gntd = parse_gntd(doc.at("gntd"));
        if (doc.contains("fqi"))
            c.fqi = parse_fqi(doc.at("fqi"));
        read_opt(doc, "tau", c.tau);
        read_opt(doc, "seed", c.seed);
        read_opt(doc, "eval_every", c.eval_every);
        read_opt(doc, "kfac", c.kfac);
    } catch (const Json::exception& e) {
        throw ContractViolation(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return config_from_json(io::read_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Experiment execution

TabularMdp resolve_mdp(const MdpSource& source) {
    return std::visit(
        [](const auto& s) -> TabularMdp {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, TabularMdp>)
                return s;
            else if constexpr (std::is_same_v<T, std::filesystem::path>)
                return io::load_mdp(s);
            else
                return generate_random_mdp(s.seed, s.n_states, s.n_actions, s.reward_scale,
                                           s.concentration, s.discount);
        },
        source);
}

Policy resolve_policy(const PolicySource& source, const TabularMdp& mdp) {
    return std::visit(
        [&](const auto& s) -> Policy {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformPolicy>)
                return Policy::uniform(mdp.n_states(), mdp.n_actions());
            else if constexpr (std::is_same_v<T, Policy>)
                return s;
            else if constexpr (std::is_same_v<T, std::filesystem::path>)
                return io::load_policy(s);
            else
                return entropy_regularized_improvement(exact_q_star(mdp), mdp.n_actions(),
                                                       s.temperature);
        },
        source);
}

namespace {

FeatureMap resolve_features(const FeatureSource& source, const TabularMdp& mdp) {
    return std::visit(
        [&](const auto& s) -> FeatureMap {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IdentityFeatures>) {
                return FeatureMap::identity(mdp.n_states(), mdp.n_actions());
            } else if constexpr (std::is_same_v<T, RandomFeatures>) {
                Rng rng(s.seed);
                return FeatureMap::random_unit_rows(mdp.n_states(), mdp.n_actions(), s.dim, rng);
            } else if constexpr (std::is_same_v<T, Matrix>) {
                return {mdp.n_states(), mdp.n_actions(), s};
            } else {
                return {mdp.n_states(), mdp.n_actions(), io::matrix_from_json(io::read_json(s))};
            }
        },
        source);
}

using AnyApprox = std::variant<LinearApprox, TwoLayerRelu, MlpApprox>;

AnyApprox build_approximator(const ApproxSpec& spec, const TabularMdp& mdp, Rng& rng) {
    FeatureMap features = resolve_features(spec.features, mdp);
    auto with_init = [&](auto approx) -> AnyApprox {
        if (spec.initial_params) {
            require(spec.initial_params->size() == approx.num_params(),
                    "approximator: initial_params has the wrong length");
            return approx.with_params(*spec.initial_params);
        }
        return approx;
    };
    switch (spec.type) {
    case ApproxType::tabular:
    case ApproxType::linear:
        return with_init(LinearApprox(std::move(features)));
    case ApproxType::relu:
        return with_init(init_ntk(features, spec.width, spec.nu, rng));
    case ApproxType::mlp: {
        LayeredMlp net = LayeredMlp::random(features.dim(), spec.hidden, spec.init_scale, rng);
        return with_init(MlpApprox(std::move(features), std::move(net)));
    }
    }
    throw ContractViolation("approximator: unsupported type");
}

QLearnMode qlearn_mode(Algorithm a) {
    switch (a) {
    case Algorithm::gntd_qlearn: return QLearnMode::gntd;
    case Algorithm::gndqn: return QLearnMode::gndqn;
    case Algorithm::dqn: return QLearnMode::dqn;
    default: return QLearnMode::td;
    }
}

struct RunContext {
    const ExperimentConfig& config;
    const TabularMdp& mdp;
    const Policy& policy;
    const StationaryDistribution& mu;
    const std::vector<WeightedTransition>& enumerated;
    Rng& rng;
};

template <QApproximator A>
A evaluation_step(const A& approx, const RunContext& ctx, Index& samples) {
    const auto& cfg = ctx.config;
    const double gamma = ctx.mdp.discount();
    const bool population = cfg.update == UpdateMode::population;
    auto draw = [&](Index n) {
        samples += n;
        return sample_batch(ctx.mdp, ctx.policy, ctx.mu, n, ctx.rng);
    };
    switch (cfg.algorithm) {
    case Algorithm::gntd:
        if constexpr (std::is_same_v<A, MlpApprox>) {
            if (cfg.kfac) {
                if (population)
                    return kfac_gntd_step(approx, std::span<const WeightedTransition>(ctx.enumerated),
                                          gamma, cfg.gntd.beta, cfg.gntd.omega);
                const auto batch = draw(cfg.gntd.batch_size);
                return kfac_gntd_step(approx, std::span<const Transition>(batch), gamma,
                                      cfg.gntd.beta, cfg.gntd.omega);
            }
        }
        if (population)
            return population_gntd_step(approx, ctx.mdp, ctx.policy, ctx.mu, cfg.gntd.beta,
                                        cfg.gntd.sigma_min_rel);
        else {
            const auto batch = draw(cfg.gntd.batch_size);
            return stochastic_gntd_step(approx, std::span<const Transition>(batch), gamma, cfg.gntd);
        }
    case Algorithm::td:
        if (population)
            return population_td_step(approx, ctx.mdp, ctx.policy, ctx.mu, cfg.gntd.beta);
        else {
            const auto batch = draw(cfg.gntd.batch_size);
            return td_step(approx, std::span<const Transition>(batch), gamma, cfg.gntd.beta);
        }
    case Algorithm::fqi:
        if (population)
            return fqi_step(approx, ctx.mdp, ctx.policy, ctx.mu, cfg.fqi);
        else {
            const auto batch = draw(cfg.fqi.inner_batch);
            return fqi_step(approx, std::span<const Transition>(batch), gamma, cfg.fqi);
        }
    default:
        throw ContractViolation("evaluation_step: not an evaluation algorithm");
    }
}

template <QApproximator A>
ExperimentResult run_loop(A approx, const ExperimentConfig& cfg, const TabularMdp& mdp,
                          const Policy& policy, Rng& rng) {
    const bool control = is_control(cfg.algorithm);
    const StationaryDistribution mu = stationary_distribution(mdp, policy);
    const QTable oracle = control ? exact_q_star(mdp, 1e-12) : exact_q_pi(mdp, policy);
    const bool needs_enumeration =
        cfg.update == UpdateMode::population && (control || (cfg.kfac && cfg.algorithm == Algorithm::gntd));
    const std::vector<WeightedTransition> enumerated =
        needs_enumeration ? enumerate_expectation_batch(mdp, policy, mu)
                          : std::vector<WeightedTransition>{};
    const RunContext ctx{cfg, mdp, policy, mu, enumerated, rng};

    QLearnConfig qcfg{cfg.gntd, cfg.tau, qlearn_mode(cfg.algorithm), cfg.kfac};
    TargetState target{approx.params(), cfg.tau};

    ExperimentResult result;
    result.name = cfg.name;
    result.algorithm = cfg.algorithm;
    result.oracle = oracle;

    const auto start = std::chrono::steady_clock::now();
    std::optional<double> previous;
    auto record = [&](Index k) {
        const QTable q = approx.value_table();
        const QTable tq = control ? optimal_bellman_operator(mdp, q) : bellman_operator(mdp, policy, q);
        MetricsRow row;
        row.iter = k;
        row.mu_error = mu_norm(q - oracle, mu);
        row.bellman_error = mu_norm(q - tq, mu);
        if (previous && *previous >= 1e-14)
            row.contraction_ratio = row.mu_error / *previous;
        const Matrix j = approx.jacobian();
        row.lambda0 = gram_min_eigenvalue(j, mu, natural_gram_mode(j.cols(), j.rows()));
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                          .count();
        row.seed = cfg.seed;
        previous = row.mu_error;
        result.rows.push_back(row);
    };

    record(0);
    Index samples = 0;
    for (Index k = 0; k < cfg.gntd.iterations; ++k) {
        try {
            if (control) {
                std::pair<A, TargetState> next = [&] {
                    if (cfg.update == UpdateMode::population)
                        return gntd_qlearn_step(approx, target,
                                                std::span<const WeightedTransition>(enumerated),
                                                mdp.discount(), qcfg);
                    samples += cfg.gntd.batch_size;
                    const auto batch = sample_batch(mdp, policy, mu, cfg.gntd.batch_size, rng);
                    return gntd_qlearn_step(approx, target, std::span<const Transition>(batch),
                                            mdp.discount(), qcfg);
                }();
                approx = std::move(next.first);
                target = std::move(next.second);
            } else {
                approx = evaluation_step(approx, ctx, samples);
            }
            if ((k + 1) % cfg.eval_every == 0 || k + 1 == cfg.gntd.iterations)
                record(k + 1);
        } catch (const IterationError&) {
            throw;
        } catch (const std::exception& e) {
            throw IterationError(k, e.what());
        }
    }
    result.total_samples = samples;
    result.final_q = approx.value_table();
    return result;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const TabularMdp mdp = resolve_mdp(config.mdp);
    const Policy policy = resolve_policy(config.policy, mdp);
    require(policy.n_states() == mdp.n_states() && policy.n_actions() == mdp.n_actions(),
            "run_experiment: policy shape does not match the MDP");
    Rng rng(config.seed);
    AnyApprox approx = build_approximator(config.approximator, mdp, rng);
    return std::visit([&](auto& a) { return run_loop(a, config, mdp, policy, rng); }, approx);
}

// ---------------------------------------------------------------------------
// Comparison and output

std::optional<Index> iterations_to_epsilon(const std::vector<MetricsRow>& rows, double epsilon) {
    for (const auto& row : rows)
        if (row.mu_error <= epsilon)
            return row.iter;
    return std::nullopt;
}

ComparisonReport compare_results(const std::vector<ExperimentResult>& results, double epsilon) {
    require(epsilon > 0.0, "compare: epsilon must be positive");
    ComparisonReport report{epsilon, {}};
    for (const auto& r : results) {
        const QTable& ref = results.front().oracle;
        require(r.oracle.size() == ref.size() &&
                    (r.oracle - ref).lpNorm<Eigen::Infinity>() <=
                        1e-9 * (1.0 + ref.lpNorm<Eigen::Infinity>()),
                "compare: mismatched oracles ('" + r.name + "' differs from '" +
                    results.front().name + "')");
        require(!r.rows.empty(), "compare: run '" + r.name + "' recorded no metrics");
        report.rows.push_back({r.name, r.algorithm, iterations_to_epsilon(r.rows, epsilon),
                               r.total_samples, r.rows.back().mu_error, r.rows.back().bellman_error});
    }
    return report;
}

ComparisonReport compare_algorithms(const std::vector<ExperimentConfig>& configs, double epsilon) {
    require(!configs.empty(), "compare: no configs");
    std::vector<ExperimentResult> results;
    for (const auto& c : configs)
        results.push_back(run_experiment(c));
    return compare_results(results, epsilon);
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace

void emit_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << kMetricsHeader << '\n';
    for (const auto& r : rows) {
        out << r.iter << ',' << format_double(r.mu_error) << ',' << format_double(r.bellman_error)
            << ',' << (r.contraction_ratio ? format_double(*r.contraction_ratio) : "") << ','
            << format_double(r.lambda0) << ',' << format_double(r.wall_ms) << ',' << r.seed << '\n';
    }
    finish(out, path);
}

void emit_report(const ComparisonReport& report, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    out << kReportHeader << '\n';
    for (const auto& r : report.rows) {
        out << r.name << ',' << to_string(r.algorithm) << ','
            << (r.iterations_to_epsilon ? std::to_string(*r.iterations_to_epsilon) : kNotReached)
            << ',' << r.total_samples << ',' << format_double(r.final_mu_error) << ','
            << format_double(r.final_bellman_error) << '\n';
    }
    finish(out, path);
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::string line;
    std::getline(in, line);
    require(line == kMetricsHeader, "'" + path.string() + "': unexpected metrics header");
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            f.push_back(cell);
        if (!line.empty() && line.back() == ',')
            f.emplace_back();
        require(f.size() == 7, "'" + path.string() + "': malformed row '" + line + "'");
        MetricsRow r;
        r.iter = std::stoll(f[0]);
        r.mu_error = std::stod(f[1]);
        r.bellman_error = std::stod(f[2]);
        if (!f[3].empty())
            r.contraction_ratio = std::stod(f[3]);
        r.lambda0 = std::stod(f[4]);
        r.wall_ms = std::stod(f[5]);
        r.seed = std::stoull(f[6]);
        rows.push_back(r);
    }
    return rows;
}

void emit_oracle(const TabularMdp& mdp, const Policy& policy, const std::filesystem::path& path) {
    const QTable q_pi = exact_q_pi(mdp, policy);
    const QTable q_star = exact_q_star(mdp, 1e-12);
    const StationaryDistribution mu = stationary_distribution(mdp, policy);
    auto out = open_for_write(path);
    out << "state,action,q_pi,q_star,mu\n";
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a) {
            const Index i = mdp.pair(s, a);
            out << s << ',' << a << ',' << format_double(q_pi(i)) << ',' << format_double(q_star(i))
                << ',' << format_double(mu(i)) << '\n';
        }
    finish(out, path);
}

} // namespace gntd::harness
