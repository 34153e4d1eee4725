#pragma once

#include <string>

#include "dicelab/mdp.hpp"

namespace dicelab {

/// A named environment together with its hand-specified target policy.
struct Environment {
    std::string name;
    TabularMdp mdp;
    Policy target;
};

/// Resolve an environment spec string. Built-in generators:
///   chain:N        N-state left-to-right chain, slip 0.1
///   loop:N         N-state ring with an exit at state 0
///   gridworld:WxH  W-by-H grid, goal in the far corner, slip 0.1
/// Anything else is treated as a path to an environment JSON file.
/// Built-ins are fully deterministic given the string.
Environment load_environment(const std::string& spec);

bool is_builtin_env(const std::string& spec);

/// Environment JSON: {num_states, num_actions, transition, termination,
/// reward, initial_dist, discount} with transition nested
/// [state][action][next_state]; optional "target_policy" matrix
/// (defaults to uniform).
Environment load_environment_json(const std::string& path);
void save_environment_json(const Environment& env, const std::string& path);

}  // namespace dicelab
