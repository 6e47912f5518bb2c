#include "gntd/control.hpp"

#include <cmath>

namespace gntd {

TargetState advance_target(const TargetState& target, const Vector& live, QLearnMode mode) {
    if (mode == QLearnMode::gntd || mode == QLearnMode::td || target.tau == 1.0)
        return {live, target.tau};
    require(target.tau > 0.0 && target.tau < 1.0, "advance_target: tau must lie in (0, 1]");
    require(target.target_params.size() == live.size(), "advance_target: shape mismatch");
    return {(1.0 - target.tau) * target.target_params + target.tau * live, target.tau};
}

Policy greedy_policy(const QTable& q, Index n_actions) {
    require(n_actions >= 1 && q.size() % n_actions == 0, "greedy_policy: bad Q-table shape");
    const Index n_states = q.size() / n_actions;
    std::vector<Index> actions(static_cast<std::size_t>(n_states));
    for (Index s = 0; s < n_states; ++s) {
        Index best = 0;
        for (Index a = 1; a < n_actions; ++a)
            if (q(s * n_actions + a) > q(s * n_actions + best))
                best = a;
        actions[static_cast<std::size_t>(s)] = best;
    }
    return Policy::deterministic(actions, n_actions);
}

Policy entropy_regularized_improvement(const QTable& q, Index n_actions, double lambda) {
    require(lambda > 0.0, "entropy_regularized_improvement: lambda must be positive");
    require(n_actions >= 1 && q.size() % n_actions == 0,
            "entropy_regularized_improvement: bad Q-table shape");
    const Eigen::Map<const RowMajorMatrix> qs(q.data(), q.size() / n_actions, n_actions);
    Matrix probs(qs.rows(), n_actions);
    for (Index s = 0; s < qs.rows(); ++s) {
        const double top = qs.row(s).maxCoeff();
        probs.row(s) = ((qs.row(s).array() - top) / lambda).exp().matrix();
        probs.row(s) /= probs.row(s).sum();
    }
    return Policy(std::move(probs));
}

Vector policy_entropy(const Policy& policy) {
    Vector h = Vector::Zero(policy.n_states());
    for (Index s = 0; s < policy.n_states(); ++s)
        for (Index a = 0; a < policy.n_actions(); ++a) {
            const double p = policy(s, a);
            if (p > 0.0)
                h(s) -= p * std::log(p);
        }
    return h;
}

TabularMdp entropy_augmented_mdp(const TabularMdp& mdp, const Policy& policy, double lambda) {
    require(lambda >= 0.0, "entropy_augmented_mdp: lambda must be non-negative");
    const Vector bonus = mdp.discount() * lambda * (mdp.transition() * policy_entropy(policy));
    Matrix reward = mdp.reward();
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a)
            reward(s, a) += bonus(mdp.pair(s, a));
    const double r_max = std::max(mdp.r_max(), reward.cwiseAbs().maxCoeff());
    return TabularMdp(mdp.transition(), std::move(reward), mdp.discount(), r_max);
}

Vector soft_state_values(const Policy& policy, const QTable& soft_q, double lambda) {
    require(soft_q.size() == policy.n_states() * policy.n_actions(),
            "soft_state_values: shape mismatch");
    Vector v = Vector::Zero(policy.n_states());
    for (Index s = 0; s < policy.n_states(); ++s)
        for (Index a = 0; a < policy.n_actions(); ++a) {
            const double p = policy(s, a);
            if (p > 0.0)
                v(s) += p * (soft_q(s * policy.n_actions() + a) - lambda * std::log(p));
        }
    return v;
}

PolicyIterationResult policy_iteration_gntd(const TabularMdp& mdp, Index eval_steps, double lambda,
                                            const GntdConfig& config,
                                            const PolicyIterationOptions& options, Rng& rng) {
    require(eval_steps >= 1, "policy_iteration_gntd: eval_steps must be >= 1");
    require(lambda > 0.0, "policy_iteration_gntd: lambda must be positive");
    require(options.max_rounds >= 1, "policy_iteration_gntd: max_rounds must be >= 1");
    if (options.evaluation == EvaluationMode::stochastic)
        config.validate();

    Policy policy = Policy::uniform(mdp.n_states(), mdp.n_actions());
    LinearApprox approx(FeatureMap::identity(mdp.n_states(), mdp.n_actions()));
    std::vector<PolicyIterationRound> rounds;

    for (Index round = 0; round < options.max_rounds; ++round) {
        const StationaryDistribution mu = stationary_distribution(mdp, policy);
        const TabularMdp soft = entropy_augmented_mdp(mdp, policy, lambda);
        const QTable before = approx.value_table();
        const QTable exact = exact_q_pi(soft, policy);

        switch (options.evaluation) {
        case EvaluationMode::exact:
            approx = approx.with_params(exact);
            break;
        case EvaluationMode::population:
            for (Index k = 0; k < eval_steps; ++k)
                approx = population_gntd_step(approx, soft, policy, mu, config.beta,
                                              config.sigma_min_rel);
            break;
        case EvaluationMode::stochastic:
            for (Index k = 0; k < eval_steps; ++k) {
                const auto batch = sample_batch(soft, policy, mu, config.batch_size, rng);
                approx = stochastic_gntd_step(approx, std::span<const Transition>(batch),
                                              soft.discount(), config);
            }
            break;
        }

        const QTable after = approx.value_table();
        rounds.push_back({round, mu_norm(after - before, mu),
                          soft_state_values(policy, exact, lambda).mean(),
                          policy_entropy(policy).mean()});
        policy = entropy_regularized_improvement(after, mdp.n_actions(), lambda);
        if (rounds.back().q_change < options.change_tol)
            break;
    }
    return {std::move(policy), approx.value_table(), std::move(rounds)};
}

} // namespace gntd
