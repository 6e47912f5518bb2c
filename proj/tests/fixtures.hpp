#pragma once

#include "gntd/harness.hpp"

#include <doctest.h>

namespace fixtures {

using namespace gntd;

// Two states, two actions: a=0 stays, a=1 swaps. r(0,.)=1, r(1,.)=0.
inline TabularMdp chain2(double gamma = 0.5) {
    Matrix p(4, 2);
    p << 1, 0,
         0, 1,
         0, 1,
         1, 0;
    Matrix r(2, 2);
    r << 1, 1,
         0, 0;
    return TabularMdp(p, r, gamma, 1.0);
}

inline Policy uniform(const TabularMdp& mdp) { return Policy::uniform(mdp.n_states(), mdp.n_actions()); }

inline TabularMdp random_mdp(std::uint64_t seed, Index n_states, Index n_actions, double gamma = 0.9) {
    return harness::generate_random_mdp(seed, n_states, n_actions, 1.0, 1.0, gamma);
}

inline Policy random_policy(Index n_states, Index n_actions, Rng& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix probs(n_states, n_actions);
    for (Index s = 0; s < n_states; ++s) {
        for (Index a = 0; a < n_actions; ++a)
            probs(s, a) = u(rng);
        probs.row(s) /= probs.row(s).sum();
    }
    return Policy(probs);
}

inline double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Slow but obvious reference for (T^pi Q)(s,a).
inline QTable bellman_by_loops(const TabularMdp& mdp, const Policy& pi, const QTable& q) {
    QTable out(mdp.n_pairs());
    for (Index s = 0; s < mdp.n_states(); ++s)
        for (Index a = 0; a < mdp.n_actions(); ++a) {
            double v = mdp.reward()(s, a);
            for (Index t = 0; t < mdp.n_states(); ++t)
                for (Index b = 0; b < mdp.n_actions(); ++b)
                    v += mdp.discount() * mdp.p(s, a, t) * pi(t, b) * q(mdp.pair(t, b));
            out(mdp.pair(s, a)) = v;
        }
    return out;
}

} // namespace fixtures
