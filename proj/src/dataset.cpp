#include "dicelab/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dicelab {

namespace {

using nlohmann::ordered_json;

void check_support(const Policy& behaviour, const Policy& target) {
    for (int s = 0; s < target.num_states(); ++s) {
        for (int a = 0; a < target.num_actions(); ++a) {
            if (target.probs(s, a) > 0.0 && behaviour.probs(s, a) <= 0.0) {
                std::ostringstream msg;
                msg << "behaviour policy has zero mass at (s=" << s << ", a=" << a
                    << ") where the target policy is positive";
                throw InputError(msg.str());
            }
        }
    }
}

ordered_json record_to_json(const TransitionRecord& r) {
    ordered_json j;
    j["traj"] = r.traj_id;
    j["time"] = r.time;
    j["state"] = r.state;
    j["action"] = r.action;
    j["reward"] = r.reward;
    if (r.next_state == kTerminal) {
        j["next_state"] = nullptr;
    } else {
        j["next_state"] = r.next_state;
    }
    j["rho_step"] = r.rho_step;
    j["rho_prod"] = r.rho_prod;
    return j;
}

TransitionRecord record_from_json(const ordered_json& j) {
    TransitionRecord r;
    r.traj_id = j.at("traj").get<int>();
    r.time = j.at("time").get<int>();
    r.state = j.at("state").get<int>();
    r.action = j.at("action").get<int>();
    r.reward = j.at("reward").get<double>();
    r.next_state = j.at("next_state").is_null() ? kTerminal : j.at("next_state").get<int>();
    r.rho_step = j.at("rho_step").get<double>();
    r.rho_prod = j.at("rho_prod").get<double>();
    return r;
}

}  // namespace

TruncationPolicy truncation_policy_from_string(const std::string& s) {
    if (s == "include") return TruncationPolicy::kInclude;
    if (s == "exclude") return TruncationPolicy::kExclude;
    if (s == "error") return TruncationPolicy::kError;
    throw InputError("unknown truncation policy: " + s);
}

std::string to_string(TruncationPolicy p) {
    switch (p) {
        case TruncationPolicy::kInclude: return "include";
        case TruncationPolicy::kExclude: return "exclude";
        case TruncationPolicy::kError: return "error";
    }
    return "include";
}

int TrajectoryDataset::num_completed_trajectories() const {
    int completed = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        const bool last_of_traj =
            (i + 1 == records.size()) || (records[i + 1].traj_id != records[i].traj_id);
        if (last_of_traj && records[i].next_state == kTerminal) ++completed;
    }
    return completed;
}

double TrajectoryDataset::n_over_k() const {
    const int k = num_completed_trajectories();
    if (k == 0) throw InputError("dataset has no completed trajectories");
    return static_cast<double>(records.size()) / static_cast<double>(k);
}

double TrajectoryDataset::mean_completed_length() const {
    int k = 0;
    std::int64_t steps = 0;
    int current = -1;
    std::int64_t current_len = 0;
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].traj_id != current) {
            current = records[i].traj_id;
            current_len = 0;
        }
        ++current_len;
        const bool last_of_traj =
            (i + 1 == records.size()) || (records[i + 1].traj_id != records[i].traj_id);
        if (last_of_traj && records[i].next_state == kTerminal) {
            ++k;
            steps += current_len;
        }
    }
    if (k == 0) throw InputError("dataset has no completed trajectories");
    return static_cast<double>(steps) / static_cast<double>(k);
}

void TrajectoryDataset::validate() const {
    int expected_traj = 0;
    int expected_time = 0;
    double expected_prod = 1.0;
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto fail = [&](const std::string& what) {
            throw IntegrityError("dataset record " + std::to_string(i) + ": " + what);
        };
        if (r.state < 0 || r.state >= num_states) fail("state out of range");
        if (r.action < 0 || r.action >= num_actions) fail("action out of range");
        if (r.next_state != kTerminal && (r.next_state < 0 || r.next_state >= num_states))
            fail("next_state out of range");
        if (!std::isfinite(r.rho_step) || r.rho_step < 0.0) fail("rho_step not finite");
        if (!std::isfinite(r.rho_prod) || r.rho_prod < 0.0) fail("rho_prod not finite");

        if (i > 0 && r.traj_id == expected_traj + 1 && r.time == 0) {
            // new trajectory
            expected_traj = r.traj_id;
            expected_time = 0;
            expected_prod = 1.0;
        }
        if (r.traj_id != expected_traj) fail("trajectory ids not contiguous");
        if (r.time != expected_time) fail("time indices not contiguous");
        if (r.time == 0 && r.rho_prod != 1.0) fail("rho_prod must be exactly 1 at time 0");
        if (r.time > 0) {
            const double scale = std::max(1.0, std::abs(expected_prod));
            if (std::abs(r.rho_prod - expected_prod) > 1e-12 * scale)
                fail("rho_prod breaks the telescoping identity");
        }
        if (r.time > 0 && records[i - 1].next_state != r.state)
            fail("state does not continue the previous transition");
        expected_time = r.time + 1;
        expected_prod = r.rho_prod * r.rho_step;
    }
    const int traj_count = records.empty() ? 0 : records.back().traj_id + 1;
    if (traj_count != num_trajectories)
        throw IntegrityError("dataset header num_trajectories " +
                             std::to_string(num_trajectories) + " does not match records (" +
                             std::to_string(traj_count) + ")");
}

TrajectoryDataset generate(const TabularMdp& mdp, const Policy& behaviour,
                           const Policy& target, int num_trajectories, int max_len,
                           std::uint64_t seed, TruncationPolicy truncation) {
    detail::check_policy_match(mdp, behaviour);
    detail::check_policy_match(mdp, target);
    if (num_trajectories < 0) throw InputError("generate: num_trajectories must be >= 0");
    check_support(behaviour, target);

    TrajectoryDataset dataset;
    dataset.num_states = mdp.num_states;
    dataset.num_actions = mdp.num_actions;
    dataset.seed = seed;
    dataset.behaviour_hash = behaviour.hash();
    dataset.target_hash = target.hash();
    dataset.truncation = to_string(truncation);

    int kept = 0;
    for (int i = 0; i < num_trajectories; ++i) {
        const Trajectory traj =
            sample_trajectory(mdp, behaviour, derive_seed(seed, static_cast<std::uint64_t>(i)),
                              max_len);
        if (!traj.terminated) {
            if (truncation == TruncationPolicy::kError)
                throw ModelError("generate: trajectory " + std::to_string(i) +
                                 " truncated at max_len=" + std::to_string(max_len) +
                                 " with truncation=error");
            if (truncation == TruncationPolicy::kExclude) continue;
        }
        double rho_prod = 1.0;
        for (size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& step = traj.steps[t];
            TransitionRecord r;
            r.state = step.state;
            r.action = step.action;
            r.reward = step.reward;
            r.next_state = step.next_state;
            r.time = static_cast<int>(t);
            r.rho_step = target.probs(step.state, step.action) /
                         behaviour.probs(step.state, step.action);
            r.rho_prod = rho_prod;
            r.traj_id = kept;
            dataset.records.push_back(r);
            rho_prod *= r.rho_step;
        }
        ++kept;
    }
    dataset.num_trajectories = kept;
    return dataset;
}

void save(const TrajectoryDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write dataset: " + path);
    ordered_json header;
    header["version"] = 1;
    header["num_states"] = dataset.num_states;
    header["num_actions"] = dataset.num_actions;
    header["num_trajectories"] = dataset.num_trajectories;
    header["seed"] = dataset.seed;
    header["behaviour_hash"] = dataset.behaviour_hash;
    header["target_hash"] = dataset.target_hash;
    header["env"] = dataset.env_spec;
    header["behaviour_eps"] = dataset.behaviour_eps;
    header["var_scale"] = dataset.var_scale;
    header["truncation"] = dataset.truncation;
    out << header.dump() << "\n";
    for (const auto& r : dataset.records) out << record_to_json(r).dump() << "\n";
}

TrajectoryDataset load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset: " + path);
    std::string line;
    int line_no = 0;
    TrajectoryDataset dataset;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": " +
                             std::string(e.what()));
        }
        try {
            if (!have_header) {
                dataset.num_states = j.at("num_states").get<int>();
                dataset.num_actions = j.at("num_actions").get<int>();
                dataset.num_trajectories = j.at("num_trajectories").get<int>();
                dataset.seed = j.at("seed").get<std::uint64_t>();
                dataset.behaviour_hash = j.at("behaviour_hash").get<std::string>();
                dataset.target_hash = j.at("target_hash").get<std::string>();
                dataset.env_spec = j.value("env", std::string());
                dataset.behaviour_eps = j.value("behaviour_eps", 0.0);
                dataset.var_scale = j.value("var_scale", 1.0);
                dataset.truncation = j.value("truncation", std::string("include"));
                have_header = true;
            } else {
                dataset.records.push_back(record_from_json(j));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": " +
                             std::string(e.what()));
        }
    }
    if (!have_header) throw ParseError("dataset file has no header line");
    dataset.validate();
    return dataset;
}

std::map<int, std::vector<int>> index_by_state(const TrajectoryDataset& dataset) {
    std::map<int, std::vector<int>> index;
    for (int i = 0; i < dataset.num_records(); ++i)
        index[dataset.records[static_cast<size_t>(i)].state].push_back(i);
    return index;
}

RestartStream::RestartStream(const TabularMdp& mdp, const Policy& behaviour,
                             const Policy& target, std::uint64_t seed)
    : mdp_(mdp), behaviour_(behaviour), target_(target), rng_(seed) {
    detail::check_policy_match(mdp, behaviour);
    detail::check_policy_match(mdp, target);
    check_support(behaviour, target);
    state_ = sample_categorical(
        std::span<const double>(mdp_.initial_dist.data(),
                                static_cast<size_t>(mdp_.initial_dist.size())),
        rng_.next_double());
}

TransitionRecord RestartStream::next() {
    TransitionRecord r;
    r.state = state_;
    r.time = time_;
    r.rho_prod = rho_prod_;
    r.traj_id = traj_id_;

    const Eigen::VectorXd action_probs = behaviour_.probs.row(state_).transpose();
    r.action = sample_categorical(
        std::span<const double>(action_probs.data(), static_cast<size_t>(action_probs.size())),
        rng_.next_double());
    r.reward = mdp_.reward(state_, r.action);
    r.rho_step = target_.probs(state_, r.action) / behaviour_.probs(state_, r.action);

    const auto& p = mdp_.transition[static_cast<size_t>(r.action)];
    const double u = rng_.next_double();
    double cum = 0.0;
    int next = kTerminal;
    int last_positive = kTerminal;
    bool drawn = false;
    for (int s2 = 0; s2 < mdp_.num_states; ++s2) {
        if (p(state_, s2) > 0.0) last_positive = s2;
        cum += p(state_, s2);
        if (u < cum) {
            next = s2;
            drawn = true;
            break;
        }
    }
    if (!drawn && mdp_.termination(state_, r.action) <= 0.0) next = last_positive;
    r.next_state = next;

    if (next == kTerminal) {
        ++traj_id_;
        time_ = 0;
        rho_prod_ = 1.0;
        state_ = sample_categorical(
            std::span<const double>(mdp_.initial_dist.data(),
                                    static_cast<size_t>(mdp_.initial_dist.size())),
            rng_.next_double());
    } else {
        ++time_;
        rho_prod_ *= r.rho_step;
        state_ = next;
    }
    return r;
}

}  // namespace dicelab
