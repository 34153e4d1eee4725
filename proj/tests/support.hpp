#pragma once

// Shared fixtures and independent brute-force oracles for the test suites.
// Everything here is deliberately written against the definitions, not the
// library's solver paths, so the two can disagree when one is wrong.

#include <cmath>
#include <vector>

#include "dicelab/dataset.hpp"
#include "dicelab/envs.hpp"
#include "dicelab/mdp.hpp"

namespace dicelab::testing {

inline TabularMdp empty_mdp(int num_states, int num_actions, double discount = 0.9) {
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.transition.assign(static_cast<size_t>(num_actions),
                          Eigen::MatrixXd::Zero(num_states, num_states));
    mdp.termination = Eigen::MatrixXd::Zero(num_states, num_actions);
    mdp.reward = Eigen::MatrixXd::Zero(num_states, num_actions);
    mdp.initial_dist = Eigen::VectorXd::Zero(num_states);
    mdp.discount = discount;
    return mdp;
}

/// One state, one action, self loop forever (no termination).
inline TabularMdp self_loop_mdp(double discount = 0.9, double reward = 1.0) {
    TabularMdp mdp = empty_mdp(1, 1, discount);
    mdp.transition[0](0, 0) = 1.0;
    mdp.reward(0, 0) = reward;
    mdp.initial_dist(0) = 1.0;
    return mdp;
}

/// One state, one action, terminates immediately.
inline TabularMdp one_step_mdp(double discount = 0.5, double reward = 1.0) {
    TabularMdp mdp = empty_mdp(1, 1, discount);
    mdp.termination(0, 0) = 1.0;
    mdp.reward(0, 0) = reward;
    mdp.initial_dist(0) = 1.0;
    return mdp;
}

/// One state, one action, geometric termination with probability p.
inline TabularMdp geometric_mdp(double p, double discount = 0.9) {
    TabularMdp mdp = empty_mdp(1, 1, discount);
    mdp.termination(0, 0) = p;
    mdp.transition[0](0, 0) = 1.0 - p;
    mdp.initial_dist(0) = 1.0;
    return mdp;
}

/// s0 -> s1 deterministically, then terminate.
inline TabularMdp two_state_chain(double discount = 0.9) {
    TabularMdp mdp = empty_mdp(2, 1, discount);
    mdp.transition[0](0, 1) = 1.0;
    mdp.termination(1, 0) = 1.0;
    mdp.initial_dist(0) = 1.0;
    return mdp;
}

inline Policy single_action_policy(int num_states) {
    Policy p;
    p.probs = Eigen::MatrixXd::Ones(num_states, 1);
    return p;
}

/// Dense random MDP: every transition entry positive, a floor of termination
/// mass at every pair, full-support initial distribution. Keeps every oracle
/// precondition satisfiable for property sweeps.
inline TabularMdp random_mdp(int num_states, int num_actions, std::uint64_t seed,
                             double discount = 0.9, double term_floor = 0.05) {
    SplitMix64 rng(seed);
    TabularMdp mdp = empty_mdp(num_states, num_actions, discount);
    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            Eigen::VectorXd row(num_states);
            for (int s2 = 0; s2 < num_states; ++s2) row(s2) = 0.05 + rng.next_double();
            const double term = term_floor * (0.5 + rng.next_double());
            row *= (1.0 - term) / row.sum();
            for (int s2 = 0; s2 < num_states; ++s2)
                mdp.transition[static_cast<size_t>(a)](s, s2) = row(s2);
            mdp.termination(s, a) = term;
            mdp.reward(s, a) = 2.0 * rng.next_double() - 1.0;
        }
    }
    Eigen::VectorXd nu(num_states);
    for (int s = 0; s < num_states; ++s) nu(s) = 0.1 + rng.next_double();
    mdp.initial_dist = nu / nu.sum();
    return mdp;
}

inline Policy random_policy(int num_states, int num_actions, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Policy p;
    p.probs = Eigen::MatrixXd(num_states, num_actions);
    for (int s = 0; s < num_states; ++s) {
        double total = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            p.probs(s, a) = 0.1 + rng.next_double();
            total += p.probs(s, a);
        }
        p.probs.row(s) /= total;
    }
    return p;
}

/// Truncated Neumann series (1-gamma) sum_{j<=horizon} gamma^j (P_pi^T)^j nu,
/// an implementation-independent route to the discounted occupancy.
inline Eigen::VectorXd neumann_discounted(const TabularMdp& mdp, const Policy& policy,
                                          int horizon) {
    const MarkovChain chain = build_chain(mdp, policy);
    Eigen::VectorXd p = mdp.initial_dist;
    Eigen::VectorXd total = p;
    double g = 1.0;
    for (int j = 1; j <= horizon; ++j) {
        p = chain.p_pi.transpose() * p;
        g *= mdp.discount;
        total += g * p;
    }
    return (1.0 - mdp.discount) * total;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    MeanStderr out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                                static_cast<double>(xs.size()));
    }
    return out;
}

}  // namespace dicelab::testing
