#pragma once

#include "gntd/kfac.hpp"
#include "gntd/solvers.hpp"

#include <type_traits>
#include <utility>

namespace gntd {

/// Frozen or momentum-tracked copy of the live parameters.
struct TargetState {
    Vector target_params;
    double tau = 1.0;
};

enum class QLearnMode { gntd, gndqn, td, dqn };

struct QLearnConfig {
    GntdConfig gntd;
    /// Momentum coefficient; only read in gndqn and dqn modes.
    double tau = 1.0;
    QLearnMode mode = QLearnMode::gntd;
    /// Use the Kronecker-factored direction instead of the dense solve.
    /// Only valid for MlpApprox.
    bool use_kfac = false;
};

/// theta_targ' = theta' (gntd, td) or (1 - tau) theta_targ + tau theta' (gndqn, dqn).
TargetState advance_target(const TargetState& target, const Vector& live, QLearnMode mode);

/// delta = Q(s,a; theta) - (r + gamma max_a' Q(s',a'; theta_targ)). The
/// tuple's a_next is ignored.
template <QApproximator A>
double qlearn_td_error(const A& approx, const A& target_approx, const Transition& xi, double gamma) {
    double best = target_approx.value(xi.s_next, 0);
    for (Index a = 1; a < target_approx.n_actions(); ++a)
        best = std::max(best, target_approx.value(xi.s_next, a));
    return approx.value(xi.s, xi.a) - (xi.r + gamma * best);
}

template <QApproximator A>
double qlearn_td_error(const A& approx, const TargetState& target, const Transition& xi,
                       double gamma) {
    return qlearn_td_error(approx, approx.with_params(target.target_params), xi, gamma);
}

/**
 * One Q-learning update. Gradients of Q(s,a) are taken at the live
 * parameters; only the bootstrap max uses the target parameters.
 * gntd/gndqn take a damped Gauss-Newton step, td/dqn a semi-gradient step.
 */
template <QApproximator A>
std::pair<A, TargetState> gntd_qlearn_step(const A& approx, const TargetState& target,
                                           std::span<const WeightedTransition> batch, double gamma,
                                           const QLearnConfig& config) {
    config.gntd.validate();
    require(config.tau > 0.0 && config.tau <= 1.0, "gntd_qlearn_step: tau must lie in (0, 1]");
    require(target.target_params.size() == approx.num_params(),
            "gntd_qlearn_step: target shape mismatch");
    const A target_approx = approx.with_params(target.target_params);
    const bool gauss_newton = config.mode == QLearnMode::gntd || config.mode == QLearnMode::gndqn;

    A next = approx;
    if constexpr (std::is_same_v<A, MlpApprox>) {
        if (config.use_kfac && gauss_newton) {
            Vector deltas(static_cast<Index>(batch.size()));
            for (std::size_t i = 0; i < batch.size(); ++i)
                deltas(static_cast<Index>(i)) =
                    qlearn_td_error(approx, target_approx, batch[i].xi, gamma);
            next = kfac_step(approx, batch, deltas, config.gntd.beta, config.gntd.omega);
            return {next, advance_target({target.target_params, config.tau}, next.params(),
                                         config.mode)};
        }
    } else {
        require(!config.use_kfac, "gntd_qlearn_step: the K-FAC path requires an MLP approximator");
    }

    const SampleCurvature c = detail::accumulate(approx, batch, [&](const Transition& xi) {
        return qlearn_td_error(approx, target_approx, xi, gamma);
    });
    if (gauss_newton)
        next = approx.with_params(approx.params() +
                                  config.gntd.beta * gauss_newton_direction(c, config.gntd));
    else
        next = approx.with_params(approx.params() - config.gntd.beta * c.g);
    return {next, advance_target({target.target_params, config.tau}, next.params(), config.mode)};
}

template <QApproximator A>
std::pair<A, TargetState> gntd_qlearn_step(const A& approx, const TargetState& target,
                                           std::span<const Transition> batch, double gamma,
                                           const QLearnConfig& config) {
    const auto weighted = detail::uniform_weights(batch);
    return gntd_qlearn_step(approx, target, std::span<const WeightedTransition>(weighted), gamma,
                            config);
}

/// Deterministic argmax policy; ties go to the lowest action index.
Policy greedy_policy(const QTable& q, Index n_actions);

/// pi(a|s) proportional to exp(Q(s,a) / lambda).
Policy entropy_regularized_improvement(const QTable& q, Index n_actions, double lambda);

/// Shannon entropy of pi(.|s) for every state.
Vector policy_entropy(const Policy& policy);

/// Same dynamics, reward r(s,a) + gamma lambda E_{s'}[H(pi(.|s'))], whose
/// Q^pi is the entropy-regularized (soft) Q-function of pi.
TabularMdp entropy_augmented_mdp(const TabularMdp& mdp, const Policy& policy, double lambda);

/// V(s) = sum_a pi(a|s) (Q(s,a) - lambda log pi(a|s)).
Vector soft_state_values(const Policy& policy, const QTable& soft_q, double lambda);

enum class EvaluationMode {
    /// eval_steps population GNTD steps (warm-started across rounds).
    population,
    /// eval_steps stochastic GNTD steps on sampled batches.
    stochastic,
    /// Exact linear solve, for oracle comparisons.
    exact,
};

struct PolicyIterationOptions {
    EvaluationMode evaluation = EvaluationMode::population;
    Index max_rounds = 200;
    double change_tol = 1e-8;
};

struct PolicyIterationRound {
    Index round = 0;
    /// ||Q_after - Q_before||_mu for this round's evaluation.
    double q_change = 0.0;
    /// Mean over states of the exact soft value of the evaluated policy.
    double soft_value = 0.0;
    double mean_entropy = 0.0;
};

struct PolicyIterationResult {
    Policy policy;
    QTable q;
    std::vector<PolicyIterationRound> rounds;
};

/**
 * Tabular entropy-regularized policy iteration: evaluate the soft
 * Q-function of the current policy with eval_steps GNTD steps, replace the
 * policy by the softmax of Q / lambda, repeat until the evaluation moves Q
 * by less than change_tol in mu-norm or max_rounds is reached.
 */
PolicyIterationResult policy_iteration_gntd(const TabularMdp& mdp, Index eval_steps, double lambda,
                                            const GntdConfig& config,
                                            const PolicyIterationOptions& options, Rng& rng);

} // namespace gntd
