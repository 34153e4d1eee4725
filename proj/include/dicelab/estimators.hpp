#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "dicelab/dataset.hpp"

namespace dicelab {

/// Learning-rate schedule. Polynomial decay a/(1+t)^p with p in (0.5, 1]
/// satisfies the stochastic-approximation step conditions; constant is the
/// batch-training default.
struct StepSchedule {
    enum class Kind { kConstant, kPolynomial };
    Kind kind = Kind::kConstant;
    double a = 0.0005;
    double p = 0.75;

    static StepSchedule constant(double a) { return {Kind::kConstant, a, 0.0}; }
    static StepSchedule polynomial(double a, double p) { return {Kind::kPolynomial, a, p}; }

    double operator()(std::int64_t t) const {
        if (kind == Kind::kConstant) return a;
        return a / std::pow(1.0 + static_cast<double>(t), p);
    }
};

/// Periodic training logger: called every log_every steps (and on the final
/// step) with the current per-state ratio table and return estimate. An empty
/// ratio vector means the estimator has no per-state ratio (TD, avg-reward).
using TrainCallback =
    std::function<void(std::int64_t step, const Eigen::VectorXd& ratio, double j_hat)>;

/// Per-state counting form of the average correction:
///   c[s] = (n/K) (1-gamma) * mean over I_s of gamma^time * rho_prod,
/// with n all records, K completed trajectories, and c[s] = 0 (flagged) for
/// states never visited.
struct TabularCorrection {
    std::vector<std::int64_t> count;
    std::vector<double> weighted_sum;
    std::vector<double> c;
    std::int64_t n = 0;
    int k = 0;
    double gamma = 0.0;
    std::vector<int> unvisited_states;

    Eigen::VectorXd ratio_vector() const;
};

TabularCorrection tabular_average_dice(const TrajectoryDataset& dataset, double gamma,
                                       int num_states);

/// Prefix-scan variant for MSE-vs-step curves: emits the estimate computed on
/// records[0..t] at the logging cadence. Returns the full-dataset result.
TabularCorrection tabular_average_dice_curve(const TrajectoryDataset& dataset, double gamma,
                                             int num_states, std::int64_t log_every,
                                             const TrainCallback& cb);

/// (1/n) sum_t ratio[S_t] R_t. The scaling factors live inside the ratio
/// table (both the tabular c and the linear H(1-gamma)Phi theta include them).
double estimate_j(const TrajectoryDataset& dataset, const Eigen::VectorXd& ratio_per_state);

/// What an estimator is allowed to know about the environment besides the
/// dataset: sizes and the initial distribution.
struct MdpMeta {
    int num_states = 0;
    int num_actions = 0;
    Eigen::VectorXd initial_dist;

    static MdpMeta of(const TabularMdp& mdp) {
        return {mdp.num_states, mdp.num_actions, mdp.initial_dist};
    }
};

/// State of the incremental linear updater (theta, eta) with its fixed
/// horizon multiplier H and regularizers. Features are shared immutably.
struct LinearDiceState {
    Eigen::VectorXd theta;
    double eta = 0.0;
    std::shared_ptr<const Eigen::MatrixXd> features;
    double H = 1.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    StepSchedule schedule;
    std::int64_t step_count = 0;

    static LinearDiceState init(std::shared_ptr<const Eigen::MatrixXd> features, double H,
                                double lambda1, double lambda2, StepSchedule schedule);

    /// One incremental update from record (state, time, rho_prod). Both theta
    /// and eta are advanced from the pre-update values (Jacobi style):
    ///   eta   += alpha lambda2 (H(1-gamma) phi^T theta - 1 - eta)
    ///   theta -= alpha (phi (phi^T theta - y) + lambda2 eta H(1-gamma) phi
    ///                   + lambda1 theta)
    /// Throws NumericalError carrying the step index on non-finite values.
    void step(const TransitionRecord& record, double gamma);
};

LinearDiceState linear_dice_step(LinearDiceState state, const TransitionRecord& record,
                                 double gamma);

/// Density-ratio estimate with its return estimate and run diagnostics
/// (empirical mass, H used, steps, final loss where applicable).
struct RatioEstimate {
    Eigen::VectorXd ratio;
    double j_hat = 0.0;
    std::map<std::string, double> diagnostics;
};

/// Mini-batch saddle-point training of the regression loss: per batch one
/// descent step on theta and one ascent step on eta, both from pre-update
/// values. The distribution-regularizer multiplier is H(1-gamma); pass
/// H = dataset.n_over_k() for the empirical form of the loss. The returned
/// ratio is H(1-gamma) Phi theta.
RatioEstimate batch_linear_dice(const TrajectoryDataset& dataset,
                                const Eigen::MatrixXd& features, double H, double lambda1,
                                double lambda2, double lr, int epochs, int batch_size,
                                std::uint64_t seed, double gamma,
                                std::int64_t log_every = 0, const TrainCallback& cb = {});

/// Tabular off-policy TD baseline. Semi-gradient update per record with the
/// bootstrap target computed exactly under the target policy,
///   Q(s,a) += alpha (r + gamma E_{a'~pi} Q(s',a') - Q(s,a)),
/// Q(terminal) = 0. j_hat = (1-gamma) E_{s~nu, a~pi} Q(s,a). The dataset's
/// state distribution is not corrected; the residual J error under shift is
/// what the harness records.
struct TdEstimate {
    Eigen::MatrixXd q;
    double j_hat = 0.0;
    std::map<std::string, double> diagnostics;
};

TdEstimate off_policy_td(const TrajectoryDataset& dataset, const MdpMeta& meta,
                         const Policy& target, StepSchedule lr, int epochs,
                         std::uint64_t seed, double gamma, std::int64_t log_every = 0,
                         const TrainCallback& cb = {});

/// Resolution of the COP-TD restart term. kInitialOverSampling uses
/// nu(s')/d_hat(s'), which zeroes the TD error at the true ratio under the
/// backward recursion; kInitialLiteral uses nu(s') as written.
enum class CopTdRestartTerm { kInitialOverSampling, kInitialLiteral };

/// COP-TD style ratio TD baseline over the flat restart sequence: each
/// arrival at s' is updated by
///   w(s') += alpha (gamma rho w(s) + (1-gamma) nu_hat(s') - w(s')),
/// where trajectory starts count as restart arrivals without the bootstrap
/// term. w is projected to >= 0 after each step.
RatioEstimate cop_td(const TrajectoryDataset& dataset, const MdpMeta& meta, StepSchedule lr,
                     int epochs, std::uint64_t seed, double gamma,
                     CopTdRestartTerm restart_term = CopTdRestartTerm::kInitialOverSampling,
                     std::int64_t log_every = 0, const TrainCallback& cb = {});

/// (1/n) sum_t R_t; the behaviour policy's objective. Errors on an empty
/// dataset.
double average_reward_baseline(const TrajectoryDataset& dataset);

/// Prefix-curve variant of the average reward for harness plots.
double average_reward_curve(const TrajectoryDataset& dataset, std::int64_t log_every,
                            const TrainCallback& cb);

/// Feature constructions for the linear estimator.
Eigen::MatrixXd make_onehot_features(int num_states);
/// Entries scale * N(0,1) from the seeded generator.
Eigen::MatrixXd make_random_features(int num_states, int dim, std::uint64_t seed,
                                     double scale = 1.0);

/// gamma^time, switching to log space for long horizons.
double discount_pow(double gamma, int time);

}  // namespace dicelab
