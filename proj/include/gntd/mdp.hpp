#pragma once

#include "gntd/types.hpp"

#include <random>
#include <utility>
#include <vector>

namespace gntd {

using Rng = std::mt19937_64;

/**
 * Finite discounted MDP.
 *
 * The transition tensor is stored as an (n_states * n_actions) x n_states
 * matrix whose row s * n_actions + a is P(. | s, a). Rewards are stored as
 * an n_states x n_actions table. Construction validates every invariant and
 * throws ContractViolation on failure.
 */
class TabularMdp {
public:
    TabularMdp(Matrix transition, Matrix reward, double discount, double r_max);

    Index n_states() const { return reward_.rows(); }
    Index n_actions() const { return reward_.cols(); }
    Index n_pairs() const { return reward_.size(); }
    double discount() const { return discount_; }
    double r_max() const { return r_max_; }

    const Matrix& transition() const { return transition_; }
    const Matrix& reward() const { return reward_; }

    Index pair(Index s, Index a) const { return s * n_actions() + a; }
    double p(Index s, Index a, Index s_next) const { return transition_(pair(s, a), s_next); }

    /// Reward table flattened in (s,a) lexicographic order.
    Vector reward_vector() const;

private:
    Matrix transition_;
    Matrix reward_;
    double discount_;
    double r_max_;
};

/// Row-stochastic n_states x n_actions table pi(a|s).
class Policy {
public:
    explicit Policy(Matrix probs);

    static Policy uniform(Index n_states, Index n_actions);
    static Policy deterministic(const std::vector<Index>& actions, Index n_actions);

    Index n_states() const { return probs_.rows(); }
    Index n_actions() const { return probs_.cols(); }
    double operator()(Index s, Index a) const { return probs_(s, a); }
    const Matrix& probs() const { return probs_; }

private:
    Matrix probs_;
};

struct Transition {
    Index s = 0;
    Index a = 0;
    double r = 0.0;
    Index s_next = 0;
    /// Ignored by the Q-learning routines, which maximize over next actions.
    Index a_next = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

struct WeightedTransition {
    Transition xi;
    double weight = 0.0;
};

/// (s,a) -> (s',a') transition matrix under pi, shape |S||A| x |S||A|.
Matrix state_action_transition(const TabularMdp& mdp, const Policy& policy);

QTable bellman_operator(const TabularMdp& mdp, const Policy& policy, const QTable& q);

/// Ties in the max are irrelevant for the value; greedy extraction breaks
/// them by lowest action index.
QTable optimal_bellman_operator(const TabularMdp& mdp, const QTable& q);

/// Solves (I - gamma P^pi) Q = r by LU.
QTable exact_q_pi(const TabularMdp& mdp, const Policy& policy);

/// Value iteration from zero, stopping once successive iterates are within
/// tol * (1 - gamma) / gamma in sup norm, so the result is tol-close to Q*.
QTable exact_q_star(const TabularMdp& mdp, double tol = 1e-12);

/// Left fixed vector of the (s,a) chain by power iteration from the uniform
/// vector. Throws PeriodicOrReducibleChain when ||mu M - mu||_1 > tol after
/// max_iter steps.
StationaryDistribution stationary_distribution(const TabularMdp& mdp, const Policy& policy,
                                               double tol = 1e-12, long max_iter = 1'000'000);

/// Pairs with zero stationary mass.
std::vector<Index> unsupported_pairs(const StationaryDistribution& mu, double threshold = 0.0);

std::vector<Transition> sample_batch(const TabularMdp& mdp, const Policy& policy,
                                     const StationaryDistribution& mu, Index n, Rng& rng);

/// Every (s,a,s',a') tuple, including zero-weight ones, with weight
/// mu(s,a) P(s'|s,a) pi(a'|s').
std::vector<WeightedTransition> enumerate_expectation_batch(const TabularMdp& mdp,
                                                            const Policy& policy,
                                                            const StationaryDistribution& mu,
                                                            Index max_tuples = 4'000'000);

/// Index drawn from an unnormalized non-negative weight vector.
Index sample_categorical(const Eigen::Ref<const Vector>& weights, Rng& rng);

} // namespace gntd
