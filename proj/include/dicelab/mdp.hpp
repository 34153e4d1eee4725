#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dicelab/errors.hpp"
#include "dicelab/rng.hpp"

namespace dicelab {

inline constexpr int kTerminal = -1;
inline constexpr double kProbTol = 1e-12;

/// Finite episodic MDP. Termination is kept as explicit per-(s,a) mass next
/// to a sub-stochastic transition tensor among the ordinary states, so
/// transition[a].row(s).sum() + termination(s,a) == 1 for every pair.
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    std::vector<Eigen::MatrixXd> transition;  // [action](state, next_state)
    Eigen::MatrixXd termination;              // (state, action)
    Eigen::MatrixXd reward;                   // (state, action)
    Eigen::VectorXd initial_dist;             // over states
    double discount = 0.95;

    /// Throws InputError when a probability invariant fails.
    void validate() const;

    TabularMdp with_discount(double gamma) const {
        TabularMdp copy = *this;
        copy.discount = gamma;
        return copy;
    }
};

/// Stochastic policy: probs(s, a) = probability of action a in state s.
struct Policy {
    Eigen::MatrixXd probs;

    int num_states() const { return static_cast<int>(probs.rows()); }
    int num_actions() const { return static_cast<int>(probs.cols()); }
    void validate() const;
    std::string hash() const;
};

/// Uniform policy over num_actions actions.
Policy uniform_policy(int num_states, int num_actions);

/// (1 - eps) * base + eps * uniform. eps in [0, 1].
Policy mix_with_uniform(const Policy& base, double eps);

/// Temperature softening: probs proportional to base^(1/temperature).
/// temperature 1 is the identity; larger values flatten the policy, the
/// tabular stand-in for widening a continuous policy's variance.
Policy soften(const Policy& base, double temperature);

/// The behaviour chain induced by a policy, with termination folded out of
/// p_pi and the restart convention applied on top.
struct MarkovChain {
    Eigen::MatrixXd p_pi;           // sub-stochastic among ordinary states
    Eigen::VectorXd term_prob;      // per-state termination mass
    Eigen::MatrixXd restart_chain;  // p_pi + term_prob * initial_dist^T, row-stochastic
};

MarkovChain build_chain(const TabularMdp& mdp, const Policy& policy);

struct TrajectoryStep {
    int state;
    int action;
    double reward;
    int next_state;  // kTerminal when the step ended the episode
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool terminated = false;  // false means truncated at max_len
};

/// Samples one trajectory from initial_dist. Pure function of
/// (mdp, policy, seed); identical seeds give bitwise-identical output.
Trajectory sample_trajectory(const TabularMdp& mdp, const Policy& policy,
                             std::uint64_t rng_seed, int max_len = 100);

namespace detail {
void check_policy_match(const TabularMdp& mdp, const Policy& policy);
}

}  // namespace dicelab
