#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dicelab/estimators.hpp"
#include "dicelab/oracle.hpp"

namespace dicelab {

/// One concrete estimator configuration inside a sweep.
struct EstimatorPoint {
    std::string name;  // avg-dice | avg-dice-linear | td | cop-td | avg-reward
    double lambda1 = 0.001;
    double lambda2 = 0.5;
    double lr = 0.0005;
    int epochs = 10;
    int batch_size = 512;
    std::string features = "onehot";  // onehot | random:<d>
    std::string h = "empirical";      // empirical | oracle | <number>

    /// Compact identifier used in file names, the aggregate CSV and plots.
    std::string id() const;
};

/// Estimator spec as written in the config: scalar or list per
/// hyperparameter; lists cross-multiply into EstimatorPoints.
struct EstimatorSpec {
    std::string name;
    std::vector<double> lambda1s{0.001};
    std::vector<double> lambda2s{0.5};
    std::vector<double> lrs{0.0005};
    int epochs = 10;
    int batch_size = 512;
    std::string features = "onehot";
    std::string h = "empirical";

    std::vector<EstimatorPoint> expand() const;
};

/// Sweep configuration. Axes cross-multiply; size points come from
/// num_trajs x max_lens, with dataset_sizes (when given) either checked for
/// consistency or used to derive the missing axis.
struct ExperimentConfig {
    std::vector<std::string> envs;
    std::vector<double> gammas{0.95};
    std::vector<int> num_trajs;
    std::vector<int> max_lens{100};
    std::vector<std::int64_t> dataset_sizes;  // optional
    std::vector<double> behaviour_epss{0.3};
    std::vector<EstimatorSpec> estimators;
    std::vector<std::uint64_t> seeds{0};
    std::string out_dir = "sweep-out";
    std::string truncation = "include";

    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json(const std::string& text);
    void validate() const;
};

struct LogPoint {
    std::int64_t step = 0;
    double j_hat = 0.0;
    double squared_error = 0.0;
};

/// Result of one (sweep point, seed) run.
struct RunResult {
    std::string point_id;
    std::string env;
    std::string estimator_id;
    std::string estimator_name;
    double gamma = 0.0;
    double eps = 0.0;
    int num_traj = 0;
    int max_len = 0;
    std::uint64_t seed = 0;
    std::vector<LogPoint> series;
    double final_squared_error = 0.0;
    double final_max_ratio_error = 0.0;
    double final_mass = 0.0;
    double wall_seconds = 0.0;
    bool failed = false;
    std::string error;
};

/// Full logging series of one estimator run against an oracle; the per-row
/// mass and max-ratio-error columns of the eval CSV live alongside the
/// (step, j_hat, squared_error) series.
struct EvalRun {
    std::vector<LogPoint> series;
    std::vector<double> mass_series;
    std::vector<double> max_ratio_error_series;
    double j_hat = 0.0;
    double final_mass = 0.0;
    double final_max_ratio_error = 0.0;
};

/// Runs one estimator point on one dataset, logging at cadence
/// max(1, total/200). target/initial_dist feed the TD and COP-TD baselines.
EvalRun evaluate_estimator(const EstimatorPoint& est, const TrajectoryDataset& dataset,
                           const OracleReport& oracle, const Policy& target,
                           const Eigen::VectorXd& initial_dist, double gamma,
                           std::uint64_t train_seed);

/// step,j_hat,j_true,squared_error,mass,max_ratio_error rows.
void write_eval_csv(const std::string& path, const EvalRun& run, double j_true);

/// Behaviour construction used across the toolchain: mix the target with the
/// uniform policy at weight eps, then soften by var_scale.
Policy make_behaviour(const Policy& target, double eps, double var_scale);

/// Runs the full cross product, one worker task per (point, seed). Writes
/// per-run curve CSVs under <out_dir>/runs/, the aggregate CSV at
/// <out_dir>/aggregate.csv and a manifest.json. The aggregate file contains
/// no timing and is byte-identical across re-runs of the same config.
/// DICELAB_THREADS bounds the worker pool (default: hardware concurrency).
std::vector<RunResult> run_sweep(const ExperimentConfig& config);

struct SelectedPoint {
    std::map<std::string, std::string> fields;  // estimator hyperparameter columns
    double mean_final_squared_error = 0.0;
};

/// Hyperparameter point minimizing mean final squared error across all
/// aggregate rows sharing it; ties broken by smaller lr, then lambda1, then
/// lambda2.
SelectedPoint select_best(const std::string& aggregate_csv_path);

/// Tidy long-format curve data: env, estimator, step, mean_log10_mse, stderr,
/// aggregated over seeds. Failed runs are excluded.
void emit_plot_data(const std::vector<RunResult>& results, const std::string& path);

/// Reconstructs run results from a sweep output directory (manifest + run
/// CSVs) for post-hoc plot-data emission.
std::vector<RunResult> load_sweep_results(const std::string& out_dir);

/// Worker-pool width: DICELAB_THREADS when set (clamped to >= 1), otherwise
/// hardware concurrency.
int sweep_thread_count();

}  // namespace dicelab
