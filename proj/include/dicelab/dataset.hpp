#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dicelab/mdp.hpp"

namespace dicelab {

/// One logged transition. time is the step index inside its trajectory;
/// rho_prod is the product of rho_step over the strictly earlier steps of the
/// same trajectory (1 at time 0). The discount is deliberately not baked in:
/// gamma^time is applied at estimation time so one dataset serves every
/// discount sweep point.
struct TransitionRecord {
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = kTerminal;
    int time = 0;
    double rho_step = 1.0;  // pi(a|s) / mu(a|s)
    double rho_prod = 1.0;  // product of rho_step over earlier steps
    int traj_id = 0;

    bool operator==(const TransitionRecord&) const = default;
};

enum class TruncationPolicy { kInclude, kExclude, kError };

TruncationPolicy truncation_policy_from_string(const std::string& s);
std::string to_string(TruncationPolicy p);

/// Off-policy trajectory dataset flattened to transition records.
/// num_trajectories counts the trajectories present (truncated ones included
/// when the generation policy kept them); the n/K multiplier used by the
/// estimators divides by *completed* trajectories only.
struct TrajectoryDataset {
    std::vector<TransitionRecord> records;
    int num_trajectories = 0;
    int num_states = 0;
    int num_actions = 0;
    std::uint64_t seed = 0;
    std::string behaviour_hash;
    std::string target_hash;
    std::string env_spec;         // provenance; empty when hand-built
    double behaviour_eps = 0.0;   // provenance
    double var_scale = 1.0;       // provenance
    std::string truncation = "include";

    int num_records() const { return static_cast<int>(records.size()); }
    int num_completed_trajectories() const;
    /// n / K with n = all records and K = completed trajectories.
    double n_over_k() const;
    /// Mean length of the completed trajectories.
    double mean_completed_length() const;

    /// Checks traj-id/time contiguity, the rho telescoping identity and
    /// finite ratios; throws IntegrityError on violation.
    void validate() const;

    bool operator==(const TrajectoryDataset&) const = default;
};

/// Samples num_trajectories trajectories under behaviour, annotated with the
/// IS ratios against target. Trajectory i uses derive_seed(seed, i). Requires
/// behaviour support to cover target support; violations name the offending
/// state-action pair.
TrajectoryDataset generate(const TabularMdp& mdp, const Policy& behaviour,
                           const Policy& target, int num_trajectories, int max_len,
                           std::uint64_t seed,
                           TruncationPolicy truncation = TruncationPolicy::kInclude);

/// JSON Lines: a header object then one record per line. load() re-validates
/// all dataset invariants.
void save(const TrajectoryDataset& dataset, const std::string& path);
TrajectoryDataset load(const std::string& path);

/// I_s: record positions grouped by state. States never visited are absent.
std::map<int, std::vector<int>> index_by_state(const TrajectoryDataset& dataset);

/// Endless restart-process stream: runs the behaviour policy, restarting from
/// the initial distribution upon termination, and emits each visited state
/// with its within-trajectory time and IS-ratio product. This is the data
/// process of the incremental updater.
class RestartStream {
public:
    RestartStream(const TabularMdp& mdp, const Policy& behaviour, const Policy& target,
                  std::uint64_t seed);

    TransitionRecord next();

private:
    const TabularMdp& mdp_;
    const Policy& behaviour_;
    const Policy& target_;
    SplitMix64 rng_;
    int state_;
    int time_ = 0;
    double rho_prod_ = 1.0;
    int traj_id_ = 0;
};

}  // namespace dicelab
