#include "dicelab/envs.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dicelab {

namespace {

using nlohmann::ordered_json;

constexpr double kSlip = 0.1;

TabularMdp empty_mdp(int num_states, int num_actions) {
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.transition.assign(static_cast<size_t>(num_actions),
                          Eigen::MatrixXd::Zero(num_states, num_states));
    mdp.termination = Eigen::MatrixXd::Zero(num_states, num_actions);
    mdp.reward = Eigen::MatrixXd::Zero(num_states, num_actions);
    mdp.initial_dist = Eigen::VectorXd::Zero(num_states);
    return mdp;
}

/// chain:N. Actions: 0 advances right, 1 stays. Either action slips into the
/// other outcome with probability kSlip, so termination (advancing past the
/// last state) is reachable under any policy. Rewards depend on the state
/// only: -0.01 per step, +1 at the last state. Start at state 0.
Environment make_chain(int n) {
    Environment env;
    env.mdp = empty_mdp(n, 2);
    for (int s = 0; s < n; ++s) {
        const bool last = (s == n - 1);
        // action 0: advance
        if (last) {
            env.mdp.termination(s, 0) = 1.0 - kSlip;
        } else {
            env.mdp.transition[0](s, s + 1) = 1.0 - kSlip;
        }
        env.mdp.transition[0](s, s) = kSlip;
        // action 1: stay, slipping forward
        env.mdp.transition[1](s, s) = 1.0 - kSlip;
        if (last) {
            env.mdp.termination(s, 1) = kSlip;
        } else {
            env.mdp.transition[1](s, s + 1) = kSlip;
        }
        env.mdp.reward(s, 0) = last ? 1.0 : -0.01;
        env.mdp.reward(s, 1) = last ? 1.0 : -0.01;
    }
    env.mdp.initial_dist(0) = 1.0;
    env.target.probs = Eigen::MatrixXd(n, 2);
    env.target.probs.col(0).setConstant(0.9);
    env.target.probs.col(1).setConstant(0.1);
    return env;
}

/// loop:N. A ring; action 0 moves clockwise, 1 counter-clockwise, slipping in
/// place with probability kSlip. State 0 is the exit: both actions there
/// terminate with probability 0.25 before the move resolves. Reward +1 at the
/// state opposite the exit.
Environment make_loop(int n) {
    Environment env;
    env.mdp = empty_mdp(n, 2);
    const int reward_state = n / 2;
    for (int s = 0; s < n; ++s) {
        const double exit_mass = (s == 0) ? 0.25 : 0.0;
        const double move_mass = 1.0 - exit_mass;
        const int cw = (s + 1) % n;
        const int ccw = (s + n - 1) % n;
        env.mdp.termination(s, 0) = exit_mass;
        env.mdp.termination(s, 1) = exit_mass;
        env.mdp.transition[0](s, cw) += move_mass * (1.0 - kSlip);
        env.mdp.transition[0](s, s) += move_mass * kSlip;
        env.mdp.transition[1](s, ccw) += move_mass * (1.0 - kSlip);
        env.mdp.transition[1](s, s) += move_mass * kSlip;
        env.mdp.reward(s, 0) = (s == reward_state) ? 1.0 : 0.0;
        env.mdp.reward(s, 1) = (s == reward_state) ? 1.0 : 0.0;
    }
    env.mdp.initial_dist(0) = 1.0;
    env.target.probs = Eigen::MatrixXd(n, 2);
    env.target.probs.col(0).setConstant(0.85);
    env.target.probs.col(1).setConstant(0.15);
    return env;
}

/// gridworld:WxH. Actions up/right/down/left; off-grid moves stay put; every
/// move slips in place with probability kSlip. The goal is the far corner:
/// any action taken there earns +1 and terminates. Step cost -0.01. Start at
/// the near corner. The target policy leans right/down toward the goal.
Environment make_gridworld(int w, int h) {
    const int n = w * h;
    Environment env;
    env.mdp = empty_mdp(n, 4);
    const int goal = n - 1;
    const int dx[4] = {0, 1, 0, -1};
    const int dy[4] = {-1, 0, 1, 0};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int s = y * w + x;
            for (int a = 0; a < 4; ++a) {
                if (s == goal) {
                    env.mdp.termination(s, a) = 1.0;
                    env.mdp.reward(s, a) = 1.0;
                    continue;
                }
                int nx = x + dx[a];
                int ny = y + dy[a];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) {
                    nx = x;
                    ny = y;
                }
                const int dest = ny * w + nx;
                env.mdp.transition[static_cast<size_t>(a)](s, dest) += 1.0 - kSlip;
                env.mdp.transition[static_cast<size_t>(a)](s, s) += kSlip;
                env.mdp.reward(s, a) = -0.01;
            }
        }
    }
    env.mdp.initial_dist(0) = 1.0;
    env.target.probs = Eigen::MatrixXd(n, 4);
    env.target.probs.col(0).setConstant(0.05);  // up
    env.target.probs.col(1).setConstant(0.45);  // right
    env.target.probs.col(2).setConstant(0.45);  // down
    env.target.probs.col(3).setConstant(0.05);  // left
    return env;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j) {
    const int rows = static_cast<int>(j.size());
    if (rows == 0) throw ParseError("environment json: empty matrix");
    const int cols = static_cast<int>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j.at(static_cast<size_t>(r)).size()) != cols)
            throw ParseError("environment json: ragged matrix");
        for (int c = 0; c < cols; ++c)
            m(r, c) = j.at(static_cast<size_t>(r)).at(static_cast<size_t>(c)).get<double>();
    }
    return m;
}

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json out = ordered_json::array();
    for (int r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(row);
    }
    return out;
}

}  // namespace

bool is_builtin_env(const std::string& spec) {
    return spec.rfind("chain:", 0) == 0 || spec.rfind("loop:", 0) == 0 ||
           spec.rfind("gridworld:", 0) == 0;
}

Environment load_environment(const std::string& spec) {
    Environment env;
    if (spec.rfind("chain:", 0) == 0) {
        const int n = std::stoi(spec.substr(6));
        if (n < 2) throw InputError("chain:N needs N >= 2");
        env = make_chain(n);
    } else if (spec.rfind("loop:", 0) == 0) {
        const int n = std::stoi(spec.substr(5));
        if (n < 3) throw InputError("loop:N needs N >= 3");
        env = make_loop(n);
    } else if (spec.rfind("gridworld:", 0) == 0) {
        const std::string dims = spec.substr(10);
        const auto x = dims.find('x');
        if (x == std::string::npos) throw InputError("gridworld spec must look like WxH");
        const int w = std::stoi(dims.substr(0, x));
        const int h = std::stoi(dims.substr(x + 1));
        if (w < 2 || h < 2) throw InputError("gridworld needs W,H >= 2");
        env = make_gridworld(w, h);
    } else {
        return load_environment_json(spec);
    }
    env.name = spec;
    env.mdp.validate();
    env.target.validate();
    return env;
}

Environment load_environment_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open environment file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("environment json: " + std::string(e.what()));
    }
    Environment env;
    env.name = path;
    const int num_states = j.at("num_states").get<int>();
    const int num_actions = j.at("num_actions").get<int>();
    env.mdp = empty_mdp(num_states, num_actions);
    const auto& trans = j.at("transition");
    if (static_cast<int>(trans.size()) != num_states)
        throw ParseError("environment json: transition must have num_states rows");
    for (int s = 0; s < num_states; ++s) {
        const auto& per_action = trans.at(static_cast<size_t>(s));
        if (static_cast<int>(per_action.size()) != num_actions)
            throw ParseError("environment json: transition[s] must have num_actions rows");
        for (int a = 0; a < num_actions; ++a) {
            const auto& row = per_action.at(static_cast<size_t>(a));
            if (static_cast<int>(row.size()) != num_states)
                throw ParseError("environment json: transition[s][a] must have num_states entries");
            for (int s2 = 0; s2 < num_states; ++s2)
                env.mdp.transition[static_cast<size_t>(a)](s, s2) =
                    row.at(static_cast<size_t>(s2)).get<double>();
        }
    }
    env.mdp.termination = matrix_from_json(j.at("termination"));
    env.mdp.reward = matrix_from_json(j.at("reward"));
    const auto& init = j.at("initial_dist");
    env.mdp.initial_dist = Eigen::VectorXd(num_states);
    for (int s = 0; s < num_states; ++s)
        env.mdp.initial_dist(s) = init.at(static_cast<size_t>(s)).get<double>();
    env.mdp.discount = j.at("discount").get<double>();
    if (j.contains("target_policy")) {
        env.target.probs = matrix_from_json(j.at("target_policy"));
    } else {
        env.target = uniform_policy(num_states, num_actions);
    }
    env.mdp.validate();
    env.target.validate();
    return env;
}

void save_environment_json(const Environment& env, const std::string& path) {
    ordered_json j;
    j["num_states"] = env.mdp.num_states;
    j["num_actions"] = env.mdp.num_actions;
    ordered_json trans = ordered_json::array();
    for (int s = 0; s < env.mdp.num_states; ++s) {
        ordered_json per_action = ordered_json::array();
        for (int a = 0; a < env.mdp.num_actions; ++a) {
            ordered_json row = ordered_json::array();
            for (int s2 = 0; s2 < env.mdp.num_states; ++s2)
                row.push_back(env.mdp.transition[static_cast<size_t>(a)](s, s2));
            per_action.push_back(row);
        }
        trans.push_back(per_action);
    }
    j["transition"] = trans;
    j["termination"] = matrix_to_json(env.mdp.termination);
    j["reward"] = matrix_to_json(env.mdp.reward);
    ordered_json init = ordered_json::array();
    for (int s = 0; s < env.mdp.num_states; ++s) init.push_back(env.mdp.initial_dist(s));
    j["initial_dist"] = init;
    j["discount"] = env.mdp.discount;
    j["target_policy"] = matrix_to_json(env.target.probs);
    std::ofstream out(path);
    if (!out) throw InputError("cannot write environment file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dicelab
