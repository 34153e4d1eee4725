#include "dicelab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dicelab {

namespace {

/// Per-state reward sums; lets training loops recompute j_hat in O(S).
Eigen::VectorXd reward_sums(const TrajectoryDataset& dataset, int num_states) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(num_states);
    for (const auto& r : dataset.records) sums(r.state) += r.reward;
    return sums;
}

Eigen::VectorXd state_counts(const TrajectoryDataset& dataset, int num_states) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_states);
    for (const auto& r : dataset.records) counts(r.state) += 1.0;
    return counts;
}

void shuffle_indices(std::vector<int>& idx, SplitMix64& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(rng.next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

bool should_log(std::int64_t step, std::int64_t total, std::int64_t log_every) {
    return log_every > 0 && (step % log_every == 0 || step == total);
}

}  // namespace

double discount_pow(double gamma, int time) {
    if (time <= 500) return std::pow(gamma, time);
    return std::exp(static_cast<double>(time) * std::log(gamma));
}

Eigen::VectorXd TabularCorrection::ratio_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<int>(c.size()));
}

TabularCorrection tabular_average_dice(const TrajectoryDataset& dataset, double gamma,
                                       int num_states) {
    return tabular_average_dice_curve(dataset, gamma, num_states, 0, {});
}

TabularCorrection tabular_average_dice_curve(const TrajectoryDataset& dataset, double gamma,
                                             int num_states, std::int64_t log_every,
                                             const TrainCallback& cb) {
    if (dataset.num_records() == 0 || dataset.num_completed_trajectories() == 0)
        throw InputError("tabular_average_dice: dataset has no completed trajectories");

    TabularCorrection out;
    out.count.assign(static_cast<size_t>(num_states), 0);
    out.weighted_sum.assign(static_cast<size_t>(num_states), 0.0);
    out.c.assign(static_cast<size_t>(num_states), 0.0);
    out.gamma = gamma;

    Eigen::VectorXd reward_sum = Eigen::VectorXd::Zero(num_states);
    const std::int64_t total = dataset.num_records();
    std::int64_t n = 0;
    int completed = 0;

    const auto prefix_estimate = [&](Eigen::VectorXd* ratio, double* j_hat) {
        ratio->setZero(num_states);
        *j_hat = 0.0;
        if (completed == 0) return;
        const double multiplier = (static_cast<double>(n) / completed) * (1.0 - gamma);
        for (int s = 0; s < num_states; ++s) {
            if (out.count[static_cast<size_t>(s)] == 0) continue;
            (*ratio)(s) = multiplier * out.weighted_sum[static_cast<size_t>(s)] /
                          static_cast<double>(out.count[static_cast<size_t>(s)]);
            *j_hat += (*ratio)(s)*reward_sum(s);
        }
        *j_hat /= static_cast<double>(n);
    };

    Eigen::VectorXd ratio(num_states);
    for (const auto& r : dataset.records) {
        out.count[static_cast<size_t>(r.state)] += 1;
        out.weighted_sum[static_cast<size_t>(r.state)] +=
            discount_pow(gamma, r.time) * r.rho_prod;
        reward_sum(r.state) += r.reward;
        ++n;
        if (r.next_state == kTerminal) ++completed;
        if (cb && should_log(n, total, log_every)) {
            double j_hat = 0.0;
            prefix_estimate(&ratio, &j_hat);
            cb(n, ratio, j_hat);
        }
    }

    out.n = n;
    out.k = completed;
    const double multiplier = (static_cast<double>(n) / completed) * (1.0 - gamma);
    for (int s = 0; s < num_states; ++s) {
        if (out.count[static_cast<size_t>(s)] == 0) {
            out.unvisited_states.push_back(s);
            continue;
        }
        out.c[static_cast<size_t>(s)] = multiplier * out.weighted_sum[static_cast<size_t>(s)] /
                                        static_cast<double>(out.count[static_cast<size_t>(s)]);
    }
    return out;
}

double estimate_j(const TrajectoryDataset& dataset, const Eigen::VectorXd& ratio_per_state) {
    if (dataset.num_records() == 0) return 0.0;
    double total = 0.0;
    for (const auto& r : dataset.records) {
        if (r.state >= ratio_per_state.size())
            throw InputError("estimate_j: ratio table does not cover state " +
                             std::to_string(r.state));
        total += ratio_per_state(r.state) * r.reward;
    }
    return total / static_cast<double>(dataset.num_records());
}

LinearDiceState LinearDiceState::init(std::shared_ptr<const Eigen::MatrixXd> features,
                                      double H, double lambda1, double lambda2,
                                      StepSchedule schedule) {
    if (!features) throw InputError("LinearDiceState: null features");
    if (H <= 0.0) throw InputError("LinearDiceState: H must be positive");
    if (lambda1 < 0.0 || lambda2 < 0.0)
        throw InputError("LinearDiceState: regularizers must be nonnegative");
    LinearDiceState state;
    state.theta = Eigen::VectorXd::Zero(features->cols());
    state.eta = 0.0;
    state.features = std::move(features);
    state.H = H;
    state.lambda1 = lambda1;
    state.lambda2 = lambda2;
    state.schedule = schedule;
    return state;
}

void LinearDiceState::step(const TransitionRecord& record, double gamma) {
    if (record.state < 0 || record.state >= features->rows())
        throw InputError("linear_dice_step: record state outside feature table");
    const double alpha = schedule(step_count);
    const auto phi = features->row(record.state).transpose();
    const double y = discount_pow(gamma, record.time) * record.rho_prod;
    const double pred = phi.dot(theta);
    const double m = H * (1.0 - gamma);

    const double eta_next = eta + alpha * lambda2 * (m * pred - 1.0 - eta);
    const Eigen::VectorXd theta_next =
        theta - alpha * ((pred - y) * phi + lambda2 * eta * m * phi + lambda1 * theta);

    if (!std::isfinite(eta_next) || !theta_next.allFinite()) {
        std::ostringstream msg;
        msg << "linear_dice_step: non-finite update at step " << step_count;
        throw NumericalError(msg.str());
    }
    eta = eta_next;
    theta = theta_next;
    ++step_count;
}

LinearDiceState linear_dice_step(LinearDiceState state, const TransitionRecord& record,
                                 double gamma) {
    state.step(record, gamma);
    return state;
}

RatioEstimate batch_linear_dice(const TrajectoryDataset& dataset,
                                const Eigen::MatrixXd& features, double H, double lambda1,
                                double lambda2, double lr, int epochs, int batch_size,
                                std::uint64_t seed, double gamma, std::int64_t log_every,
                                const TrainCallback& cb) {
    if (batch_size < 1) throw InputError("batch_linear_dice: batch_size must be >= 1");
    if (epochs < 0) throw InputError("batch_linear_dice: epochs must be >= 0");
    const int n = dataset.num_records();
    const int num_states = static_cast<int>(features.rows());
    const int dim = static_cast<int>(features.cols());
    if (epochs > 0 && n == 0) throw InputError("batch_linear_dice: empty dataset");

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
    double eta = 0.0;
    const double m = H * (1.0 - gamma);

    const Eigen::VectorXd reward_sum = reward_sums(dataset, num_states);
    const Eigen::VectorXd counts = state_counts(dataset, num_states);

    // Targets are fixed by the dataset; precompute them once.
    std::vector<double> y(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& r = dataset.records[static_cast<size_t>(i)];
        if (r.state >= num_states)
            throw InputError("batch_linear_dice: record state outside feature table");
        y[static_cast<size_t>(i)] = discount_pow(gamma, r.time) * r.rho_prod;
    }

    const auto ratio_of = [&](const Eigen::VectorXd& th) -> Eigen::VectorXd {
        return m * (features * th);
    };
    const auto j_of = [&](const Eigen::VectorXd& ratio) {
        return n == 0 ? 0.0 : ratio.dot(reward_sum) / static_cast<double>(n);
    };

    SplitMix64 rng(seed);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const std::int64_t batches_per_epoch = n == 0 ? 0 : (n + batch_size - 1) / batch_size;
    const std::int64_t total_steps = batches_per_epoch * epochs;
    std::int64_t step = 0;
    double last_loss = 0.0;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (int start = 0; start < n; start += batch_size) {
            const int end = std::min(n, start + batch_size);
            const int b = end - start;
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
            Eigen::VectorXd phi_mean = Eigen::VectorXd::Zero(dim);
            double pred_mean = 0.0;
            double sq_loss = 0.0;
            for (int i = start; i < end; ++i) {
                const auto& r = dataset.records[static_cast<size_t>(order[static_cast<size_t>(i)])];
                const auto phi = features.row(r.state).transpose();
                const double pred = phi.dot(theta);
                const double err = pred - y[static_cast<size_t>(order[static_cast<size_t>(i)])];
                grad += err * phi;
                phi_mean += phi;
                pred_mean += pred;
                sq_loss += 0.5 * err * err;
            }
            grad /= b;
            phi_mean /= b;
            pred_mean /= b;
            sq_loss /= b;

            // Saddle-point treatment: one descent step on theta, one ascent
            // step on eta, both evaluated at the pre-update point.
            const double eta_next = eta + lr * lambda2 * (m * pred_mean - 1.0 - eta);
            const Eigen::VectorXd theta_next =
                theta - lr * (grad + lambda2 * eta * m * phi_mean + lambda1 * theta);
            eta = eta_next;
            theta = theta_next;
            ++step;

            last_loss = sq_loss + 0.5 * lambda1 * theta.squaredNorm() +
                        lambda2 * (eta * (m * pred_mean - 1.0) - 0.5 * eta * eta);
            if (!std::isfinite(last_loss) || !theta.allFinite())
                throw NumericalError("batch_linear_dice: training diverged at step " +
                                     std::to_string(step));
            if (cb && should_log(step, total_steps, log_every)) {
                const Eigen::VectorXd ratio = ratio_of(theta);
                cb(step, ratio, j_of(ratio));
            }
        }
    }

    RatioEstimate out;
    out.ratio = ratio_of(theta);
    out.j_hat = j_of(out.ratio);
    out.diagnostics["h"] = H;
    out.diagnostics["steps"] = static_cast<double>(step);
    out.diagnostics["final_loss"] = last_loss;
    out.diagnostics["eta"] = eta;
    out.diagnostics["empirical_mass"] =
        n == 0 ? 0.0 : out.ratio.dot(counts) / static_cast<double>(n);
    out.diagnostics["feature_bound"] = features.rowwise().norm().maxCoeff();
    return out;
}

TdEstimate off_policy_td(const TrajectoryDataset& dataset, const MdpMeta& meta,
                         const Policy& target, StepSchedule lr, int epochs,
                         std::uint64_t seed, double gamma, std::int64_t log_every,
                         const TrainCallback& cb) {
    if (target.num_states() != meta.num_states || target.num_actions() != meta.num_actions)
        throw InputError("off_policy_td: target policy does not match meta");
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(meta.num_states, meta.num_actions);

    const auto j_of = [&]() {
        double j = 0.0;
        for (int s = 0; s < meta.num_states; ++s)
            j += meta.initial_dist(s) * target.probs.row(s).dot(q.row(s));
        return (1.0 - gamma) * j;
    };

    const int n = dataset.num_records();
    SplitMix64 rng(seed);
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const std::int64_t total_steps = static_cast<std::int64_t>(n) * epochs;
    std::int64_t step = 0;
    const Eigen::VectorXd empty;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (int i : order) {
            const auto& r = dataset.records[static_cast<size_t>(i)];
            // Bootstrap target under the target policy, exact expectation
            // over the next action; terminal states bootstrap at zero.
            const double next_v = r.next_state == kTerminal
                                      ? 0.0
                                      : target.probs.row(r.next_state).dot(q.row(r.next_state));
            const double alpha = lr(step);
            q(r.state, r.action) +=
                alpha * (r.reward + gamma * next_v - q(r.state, r.action));
            ++step;
            if (cb && should_log(step, total_steps, log_every)) cb(step, empty, j_of());
        }
    }

    TdEstimate out;
    out.q = q;
    out.j_hat = j_of();
    out.diagnostics["steps"] = static_cast<double>(step);
    return out;
}

RatioEstimate cop_td(const TrajectoryDataset& dataset, const MdpMeta& meta, StepSchedule lr,
                     int epochs, std::uint64_t seed, double gamma,
                     CopTdRestartTerm restart_term, std::int64_t log_every,
                     const TrainCallback& cb) {
    const int n = dataset.num_records();
    if (n == 0) throw InputError("cop_td: empty dataset");
    const int num_states = meta.num_states;

    const Eigen::VectorXd counts = state_counts(dataset, num_states);
    const Eigen::VectorXd reward_sum = reward_sums(dataset, num_states);
    Eigen::VectorXd nu_hat(num_states);
    for (int s = 0; s < num_states; ++s) {
        if (restart_term == CopTdRestartTerm::kInitialLiteral) {
            nu_hat(s) = meta.initial_dist(s);
        } else {
            // Initial distribution over the sampling distribution; states
            // never sampled get 0 (they are only touched as next states of
            // a truncated tail, where the correction has no effect).
            nu_hat(s) = counts(s) > 0.0
                            ? meta.initial_dist(s) * static_cast<double>(n) / counts(s)
                            : 0.0;
        }
    }

    // Arrivals at s' in the flat restart sequence. Real transitions carry the
    // bootstrap term gamma rho w(s); trajectory starts are restart arrivals,
    // whose inflow is the (1-gamma) nu_hat term alone. Including both makes
    // the zero-TD solution the true ratio under the backward recursion.
    struct Arrival {
        int state;
        int source;  // -1 for restart arrivals
        double rho;
    };
    std::vector<Arrival> arrivals;
    arrivals.reserve(static_cast<size_t>(n) + 1);
    for (const auto& r : dataset.records) {
        if (r.time == 0) arrivals.push_back({r.state, -1, 0.0});
        if (r.next_state != kTerminal) arrivals.push_back({r.next_state, r.state, r.rho_step});
    }

    Eigen::VectorXd w = Eigen::VectorXd::Ones(num_states);
    const auto j_of = [&]() { return w.dot(reward_sum) / static_cast<double>(n); };

    SplitMix64 rng(seed);
    std::vector<int> order(arrivals.size());
    std::iota(order.begin(), order.end(), 0);
    const std::int64_t total_steps = static_cast<std::int64_t>(arrivals.size()) * epochs;
    std::int64_t step = 0;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_indices(order, rng);
        for (int i : order) {
            const auto& arr = arrivals[static_cast<size_t>(i)];
            const double alpha = lr(step);
            ++step;
            const double boot = arr.source >= 0 ? gamma * arr.rho * w(arr.source) : 0.0;
            const double td = boot + (1.0 - gamma) * nu_hat(arr.state) - w(arr.state);
            w(arr.state) = std::max(0.0, w(arr.state) + alpha * td);
            if (cb && should_log(step, total_steps, log_every)) cb(step, w, j_of());
        }
    }

    RatioEstimate out;
    out.ratio = w;
    out.j_hat = j_of();
    out.diagnostics["steps"] = static_cast<double>(step);
    out.diagnostics["empirical_mass"] = w.dot(counts) / static_cast<double>(n);
    return out;
}

double average_reward_baseline(const TrajectoryDataset& dataset) {
    if (dataset.num_records() == 0) throw InputError("average_reward_baseline: empty dataset");
    double total = 0.0;
    for (const auto& r : dataset.records) total += r.reward;
    return total / static_cast<double>(dataset.num_records());
}

double average_reward_curve(const TrajectoryDataset& dataset, std::int64_t log_every,
                            const TrainCallback& cb) {
    if (dataset.num_records() == 0) throw InputError("average_reward_baseline: empty dataset");
    double total = 0.0;
    std::int64_t t = 0;
    const std::int64_t total_steps = dataset.num_records();
    const Eigen::VectorXd empty;
    for (const auto& r : dataset.records) {
        total += r.reward;
        ++t;
        if (cb && should_log(t, total_steps, log_every))
            cb(t, empty, total / static_cast<double>(t));
    }
    return total / static_cast<double>(total_steps);
}

Eigen::MatrixXd make_onehot_features(int num_states) {
    return Eigen::MatrixXd::Identity(num_states, num_states);
}

Eigen::MatrixXd make_random_features(int num_states, int dim, std::uint64_t seed,
                                     double scale) {
    if (dim < 1 || dim > num_states)
        throw InputError("make_random_features: need 1 <= dim <= num_states");
    SplitMix64 rng(seed);
    Eigen::MatrixXd phi(num_states, dim);
    for (int s = 0; s < num_states; ++s)
        for (int k = 0; k < dim; ++k) phi(s, k) = scale * sample_normal(rng);
    return phi;
}

}  // namespace dicelab
