#pragma once

#include "gntd/control.hpp"
#include "gntd/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gntd::harness {

/**
 * Random MDP: Dirichlet(concentration) transition rows mixed with 1% uniform
 * mass (so every generated chain is irreducible and aperiodic), rewards
 * uniform in [-reward_scale, reward_scale]. Deterministic per seed.
 */
TabularMdp generate_random_mdp(std::uint64_t seed, Index n_states, Index n_actions,
                               double reward_scale = 1.0, double concentration = 1.0,
                               double discount = 0.9);

struct MdpGenerator {
    std::uint64_t seed = 0;
    Index n_states = 5;
    Index n_actions = 2;
    double reward_scale = 1.0;
    double concentration = 1.0;
    double discount = 0.9;
};

using MdpSource = std::variant<TabularMdp, std::filesystem::path, MdpGenerator>;

struct UniformPolicy {};
/// Softmax of the optimal Q-function at the given temperature.
struct SoftmaxOfQStar {
    double temperature = 1.0;
};
using PolicySource = std::variant<UniformPolicy, Policy, std::filesystem::path, SoftmaxOfQStar>;

struct IdentityFeatures {};
struct RandomFeatures {
    Index dim = 4;
    std::uint64_t seed = 0;
};
using FeatureSource = std::variant<IdentityFeatures, RandomFeatures, Matrix, std::filesystem::path>;

enum class ApproxType { tabular, linear, relu, mlp };

struct ApproxSpec {
    ApproxType type = ApproxType::tabular;
    FeatureSource features = IdentityFeatures{};
    Index width = 64;
    double nu = 1.0;
    std::vector<Index> hidden{8};
    double init_scale = 1.0;
    /// Overrides the default initialization (zeros for linear models).
    std::optional<Vector> initial_params;
};

enum class Algorithm { gntd, td, fqi, gntd_qlearn, gndqn, dqn, td_qlearn };
enum class UpdateMode { population, stochastic };

std::string to_string(Algorithm algorithm);
Algorithm algorithm_from_string(const std::string& name);
bool is_control(Algorithm algorithm);

struct ExperimentConfig {
    std::string name = "experiment";
    MdpSource mdp = MdpGenerator{};
    PolicySource policy = UniformPolicy{};
    ApproxSpec approximator;
    Algorithm algorithm = Algorithm::gntd;
    UpdateMode update = UpdateMode::population;
    GntdConfig gntd;
    FqiConfig fqi;
    double tau = 1.0;
    std::uint64_t seed = 0;
    Index eval_every = 1;
    bool kfac = false;

    /// Throws ContractViolation on inconsistent settings.
    void validate() const;
};

/// Relative paths inside the document are resolved against base_dir.
/// Unknown keys are rejected at every level.
ExperimentConfig config_from_json(const io::Json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

struct MetricsRow {
    Index iter = 0;
    double mu_error = 0.0;
    double bellman_error = 0.0;
    /// Empty on the first row or when the previous error is below 1e-14.
    std::optional<double> contraction_ratio;
    double lambda0 = 0.0;
    double wall_ms = 0.0;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    std::string name;
    Algorithm algorithm = Algorithm::gntd;
    std::vector<MetricsRow> rows;
    /// K * N for stochastic runs, 0 for population runs.
    Index total_samples = 0;
    /// Q^pi for evaluation runs, Q* for control runs.
    QTable oracle;
    QTable final_q;
};

/// Thrown by run_experiment when a step fails; carries the iteration index.
class IterationError : public std::runtime_error {
public:
    IterationError(Index iteration, const std::string& what)
        : std::runtime_error("iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}
    Index iteration() const { return iteration_; }

private:
    Index iteration_;
};

TabularMdp resolve_mdp(const MdpSource& source);
Policy resolve_policy(const PolicySource& source, const TabularMdp& mdp);

ExperimentResult run_experiment(const ExperimentConfig& config);

inline constexpr const char* kNotReached = "not_reached";

struct ComparisonRow {
    std::string name;
    Algorithm algorithm = Algorithm::gntd;
    std::optional<Index> iterations_to_epsilon;
    Index total_samples = 0;
    double final_mu_error = 0.0;
    double final_bellman_error = 0.0;
};

struct ComparisonReport {
    double epsilon = 0.0;
    std::vector<ComparisonRow> rows;
};

/// First recorded iteration with mu_error <= epsilon.
std::optional<Index> iterations_to_epsilon(const std::vector<MetricsRow>& rows, double epsilon);

/// Runs every config; all must share the same oracle.
ComparisonReport compare_algorithms(const std::vector<ExperimentConfig>& configs, double epsilon);
ComparisonReport compare_results(const std::vector<ExperimentResult>& results, double epsilon);

inline constexpr const char* kMetricsHeader =
    "iter,mu_error,bellman_error,contraction_ratio,lambda0,wall_ms,seed";
inline constexpr const char* kReportHeader =
    "name,algorithm,iterations_to_epsilon,total_samples,final_mu_error,final_bellman_error";

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double value);

void emit_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
void emit_report(const ComparisonReport& report, const std::filesystem::path& path);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// state,action,q_pi,q_star,mu
void emit_oracle(const TabularMdp& mdp, const Policy& policy, const std::filesystem::path& path);

} // namespace gntd::harness
