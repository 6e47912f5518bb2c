#include "gntd/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace gntd;

namespace {

int run_command(const std::string& config_path, const std::string& out) {
    const auto config = harness::load_config(config_path);
    const auto result = harness::run_experiment(config);
    harness::emit_csv(result.rows, out);
    const auto& last = result.rows.back();
    std::cerr << result.name << ": " << result.rows.size() << " rows, final mu_error "
              << harness::format_double(last.mu_error) << "\n";
    return 0;
}

int compare_command(const std::vector<std::string>& paths, double epsilon, const std::string& out) {
    std::vector<harness::ExperimentConfig> configs;
    for (const auto& p : paths)
        configs.push_back(harness::load_config(p));
    const auto report = harness::compare_algorithms(configs, epsilon);
    harness::emit_report(report, out);
    return 0;
}

int oracle_command(const std::string& mdp_path, const std::string& policy_path, const std::string& out) {
    const TabularMdp mdp = io::load_mdp(mdp_path);
    const Policy policy = policy_path.empty() ? Policy::uniform(mdp.n_states(), mdp.n_actions())
                                              : io::load_policy(policy_path);
    harness::emit_oracle(mdp, policy, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauss-Newton temporal difference learning on tabular MDPs"};
    app.require_subcommand(1);

    std::string config_path, out;
    auto* run = app.add_subcommand("run", "Run one experiment and write its metrics CSV");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Metrics CSV path")->required();

    std::vector<std::string> config_paths;
    double epsilon = 1e-3;
    auto* compare = app.add_subcommand("compare", "Compare algorithms on a shared problem");
    compare->add_option("--configs", config_paths, "Experiment configs")->required()->check(CLI::ExistingFile);
    compare->add_option("--epsilon", epsilon, "Target mu-norm error")->required();
    compare->add_option("--out", out, "Report CSV path")->required();

    std::string mdp_path, policy_path;
    auto* oracle = app.add_subcommand("oracle", "Dump Q^pi, Q* and the stationary distribution");
    oracle->add_option("--mdp", mdp_path, "MDP file (JSON)")->required()->check(CLI::ExistingFile);
    oracle->add_option("--policy", policy_path, "Policy file (JSON); uniform if omitted")
        ->check(CLI::ExistingFile);
    oracle->add_option("--out", out, "Oracle CSV path")->required();

    std::uint64_t seed = 0;
    Index n_states = 5, n_actions = 2;
    double discount = 0.9, concentration = 1.0, reward_scale = 1.0;
    auto* gen = app.add_subcommand("gen-mdp", "Generate a random MDP");
    gen->add_option("--seed", seed, "Generator seed")->required();
    gen->add_option("--states", n_states, "Number of states")->required();
    gen->add_option("--actions", n_actions, "Number of actions")->required();
    gen->add_option("--discount", discount, "Discount factor")->capture_default_str();
    gen->add_option("--concentration", concentration, "Dirichlet concentration")->capture_default_str();
    gen->add_option("--reward-scale", reward_scale, "Rewards are uniform in [-s, s]")->capture_default_str();
    gen->add_option("--out", out, "MDP file path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_command(config_path, out);
        if (compare->parsed())
            return compare_command(config_paths, epsilon, out);
        if (oracle->parsed())
            return oracle_command(mdp_path, policy_path, out);
        const TabularMdp mdp =
            harness::generate_random_mdp(seed, n_states, n_actions, reward_scale, concentration, discount);
        io::write_json(io::mdp_to_json(mdp), out);
        return 0;
    } catch (const harness::IterationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
