#include <doctest.h>

#include <cmath>

#include "dicelab/envs.hpp"
#include "dicelab/estimators.hpp"
#include "dicelab/oracle.hpp"
#include "support.hpp"

using namespace dicelab;
using namespace dicelab::testing;

namespace {

TransitionRecord make_record(int state, int time, double rho_step, double rho_prod,
                             int next_state, int traj_id, double reward = 0.0) {
    TransitionRecord r;
    r.state = state;
    r.action = 0;
    r.reward = reward;
    r.next_state = next_state;
    r.time = time;
    r.rho_step = rho_step;
    r.rho_prod = rho_prod;
    r.traj_id = traj_id;
    return r;
}

/// Independent counting route for the average correction, written directly
/// against the definition (no shared code with the library path).
Eigen::VectorXd brute_force_correction(const TrajectoryDataset& ds, double gamma,
                                       int num_states) {
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(num_states);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_states);
    int completed = 0;
    for (size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        sums(r.state) += std::pow(gamma, r.time) * r.rho_prod;
        counts(r.state) += 1.0;
        if (r.next_state == kTerminal) ++completed;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(num_states);
    for (int s = 0; s < num_states; ++s)
        if (counts(s) > 0)
            c(s) = (static_cast<double>(ds.records.size()) / completed) * (1.0 - gamma) *
                   sums(s) / counts(s);
    return c;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("tabular_average_dice: hand-computed tiny datasets") {
    SUBCASE("single one-record trajectory") {
        TrajectoryDataset ds;
        ds.num_states = 1;
        ds.num_actions = 1;
        ds.num_trajectories = 1;
        ds.records = {make_record(0, 0, 1.0, 1.0, kTerminal, 0)};
        const TabularCorrection c = tabular_average_dice(ds, 0.5, 1);
        CHECK(c.c[0] == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(c.n == 1);
        CHECK(c.k == 1);
    }
    SUBCASE("on-policy self-loop of length 3") {
        TrajectoryDataset ds;
        ds.num_states = 1;
        ds.num_actions = 1;
        ds.num_trajectories = 1;
        ds.records = {make_record(0, 0, 1.0, 1.0, 0, 0),
                      make_record(0, 1, 1.0, 1.0, 0, 0),
                      make_record(0, 2, 1.0, 1.0, kTerminal, 0)};
        // c = (3/1) * 0.5 * mean(1, 0.5, 0.25) = 0.875
        const TabularCorrection c = tabular_average_dice(ds, 0.5, 1);
        CHECK(c.c[0] == doctest::Approx(0.875).epsilon(1e-15));
    }
    SUBCASE("unvisited states get zero and a diagnostic flag") {
        TrajectoryDataset ds;
        ds.num_states = 3;
        ds.num_actions = 1;
        ds.num_trajectories = 1;
        ds.records = {make_record(1, 0, 1.0, 1.0, kTerminal, 0)};
        const TabularCorrection c = tabular_average_dice(ds, 0.5, 3);
        CHECK(c.c[0] == 0.0);
        CHECK(c.c[2] == 0.0);
        CHECK(c.unvisited_states == std::vector<int>{0, 2});
    }
    SUBCASE("dataset without completed trajectories is rejected") {
        TrajectoryDataset ds;
        ds.num_states = 1;
        ds.num_actions = 1;
        ds.num_trajectories = 1;
        ds.records = {make_record(0, 0, 1.0, 1.0, 0, 0)};
        CHECK_THROWS_AS(tabular_average_dice(ds, 0.5, 1), InputError);
    }
}

TEST_CASE("tabular_average_dice: matches the brute-force loop and the mass identity") {
    const Environment env = load_environment("chain:5");
    const Policy mu = mix_with_uniform(env.target, 0.3);
    const TrajectoryDataset ds = generate(env.mdp, mu, env.target, 500, 200, /*seed=*/31);
    const double gamma = 0.9;
    const TabularCorrection c = tabular_average_dice(ds, gamma, 5);

    const Eigen::VectorXd brute = brute_force_correction(ds, gamma, 5);
    CHECK((c.ratio_vector() - brute).cwiseAbs().maxCoeff() <= 1e-12);

    std::int64_t count_total = 0;
    for (auto v : c.count) count_total += v;
    CHECK(count_total == ds.num_records());
    for (double v : c.c) CHECK(v >= 0.0);

    // Sum_s d_hat(s) c(s) == (1-gamma) (1/K) sum_t gamma^time rho_prod, exactly.
    double lhs = 0.0;
    for (int s = 0; s < 5; ++s)
        lhs += (static_cast<double>(c.count[static_cast<size_t>(s)]) / c.n) *
               c.c[static_cast<size_t>(s)];
    double rhs = 0.0;
    for (const auto& r : ds.records) rhs += std::pow(gamma, r.time) * r.rho_prod;
    rhs *= (1.0 - gamma) / c.k;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("tabular_average_dice: consistency ladder toward the oracle ratio") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const OracleReport oracle = compute_report(mdp, base.target, mu);

    std::vector<double> errors;
    for (int k : {100, 1000, 10000, 50000}) {
        const TrajectoryDataset ds =
            generate(mdp, mu, base.target, k, 200, derive_seed(606, static_cast<std::uint64_t>(k)));
        const TabularCorrection c = tabular_average_dice(ds, 0.9, 5);
        double max_rel = 0.0;
        for (int s = 0; s < 5; ++s)
            max_rel = std::max(max_rel,
                               std::abs(c.c[static_cast<size_t>(s)] - oracle.density_ratio(s)) /
                                   oracle.density_ratio(s));
        errors.push_back(max_rel);
    }
    int inversions = 0;
    for (size_t i = 1; i < errors.size(); ++i)
        if (errors[i] > errors[i - 1]) ++inversions;
    CHECK(inversions <= 1);
    CHECK(errors.back() <= 0.05);
}

TEST_CASE("tabular_average_dice: empirical mass converges to 1 - E_pi[gamma^T]") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const auto [len_pi, gamma_mass_pi] = expected_quantities(mdp, base.target);
    (void)len_pi;
    std::vector<double> masses;
    for (int rep = 0; rep < 400; ++rep) {
        const TrajectoryDataset ds = generate(mdp, mu, base.target, 20, 200,
                                              derive_seed(3111, static_cast<std::uint64_t>(rep)));
        const TabularCorrection c = tabular_average_dice(ds, 0.9, 5);
        double mass = 0.0;
        for (int s = 0; s < 5; ++s)
            mass += (static_cast<double>(c.count[static_cast<size_t>(s)]) / c.n) *
                    c.c[static_cast<size_t>(s)];
        masses.push_back(mass);
    }
    const MeanStderr stat = mean_stderr(masses);
    CHECK(std::abs(stat.mean - (1.0 - gamma_mass_pi)) <= 3.0 * stat.stderr_);
}

TEST_CASE("estimate_j: trivial cases") {
    const Environment env = load_environment("chain:5");
    const Policy mu = mix_with_uniform(env.target, 0.3);
    const TrajectoryDataset ds = generate(env.mdp, mu, env.target, 100, 200, 41);
    SUBCASE("zero ratio gives zero") {
        CHECK(estimate_j(ds, Eigen::VectorXd::Zero(5)) == 0.0);
    }
    SUBCASE("unit ratio degenerates to the average-reward baseline") {
        CHECK(estimate_j(ds, Eigen::VectorXd::Ones(5)) ==
              doctest::Approx(average_reward_baseline(ds)).epsilon(1e-15));
    }
    SUBCASE("ratio table must cover visited states") {
        CHECK_THROWS_AS(estimate_j(ds, Eigen::VectorXd::Ones(2)), InputError);
    }
}

TEST_CASE("estimate_j: oracle ratio is unbiased for J on on-policy datasets") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const OracleReport oracle = compute_report(mdp, base.target, base.target);
    std::vector<double> js;
    for (int rep = 0; rep < 1000; ++rep) {
        const TrajectoryDataset ds = generate(mdp, base.target, base.target, 10, 200,
                                              derive_seed(8712, static_cast<std::uint64_t>(rep)));
        js.push_back(estimate_j(ds, oracle.density_ratio));
    }
    const MeanStderr stat = mean_stderr(js);
    CHECK(std::abs(stat.mean - oracle.j_pi) <= 3.0 * stat.stderr_);
}

TEST_CASE("linear_dice_step: frozen arithmetic") {
    SUBCASE("plain scalar SGD step") {
        auto features = std::make_shared<Eigen::MatrixXd>(make_onehot_features(3));
        LinearDiceState state = LinearDiceState::init(features, 1.0, 0.0, 0.0,
                                                      StepSchedule::constant(0.5));
        state.step(make_record(1, 0, 1.0, 1.0, kTerminal, 0), 0.5);
        CHECK(state.theta(0) == 0.0);
        CHECK(state.theta(1) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(state.theta(2) == 0.0);
        CHECK(state.step_count == 1);
    }
    SUBCASE("zero learning rate leaves the state unchanged") {
        auto features = std::make_shared<Eigen::MatrixXd>(make_random_features(3, 2, 5));
        LinearDiceState state =
            LinearDiceState::init(features, 2.0, 0.01, 0.5, StepSchedule::constant(0.0));
        state.theta << 0.3, -0.2;
        state.eta = 0.7;
        const LinearDiceState next = linear_dice_step(state, make_record(2, 1, 1.1, 0.9, 0, 0),
                                                      0.9);
        CHECK(next.theta == state.theta);
        CHECK(next.eta == state.eta);
        CHECK(next.step_count == 1);
    }
    SUBCASE("theta and eta advance simultaneously from pre-update values") {
        // One state, phi = 1, H(1-gamma) = 1, alpha = 0.1:
        //   eta'   = 2 + 0.1*0.5*(1*1 - 1 - 2)          = 1.9
        //   theta' = 1 - 0.1*((1-1)*1 + 0.5*2*1 + 0.1*1) = 0.89  (uses eta = 2)
        auto features = std::make_shared<Eigen::MatrixXd>(make_onehot_features(1));
        LinearDiceState state =
            LinearDiceState::init(features, 4.0, 0.1, 0.5, StepSchedule::constant(0.1));
        state.theta(0) = 1.0;
        state.eta = 2.0;
        state.step(make_record(0, 0, 1.0, 1.0, kTerminal, 0), 0.75);
        CHECK(state.eta == doctest::Approx(1.9).epsilon(1e-15));
        CHECK(state.theta(0) == doctest::Approx(0.89).epsilon(1e-15));
    }
    SUBCASE("non-finite updates raise with the step index") {
        auto features =
            std::make_shared<Eigen::MatrixXd>(Eigen::MatrixXd::Constant(1, 1, 1e308));
        LinearDiceState state =
            LinearDiceState::init(features, 1.0, 0.0, 0.0, StepSchedule::constant(1.0));
        // First step lands at 1e308; the second multiplies two such values.
        state.step(make_record(0, 0, 1.0, 1.0, kTerminal, 0), 0.9);
        CHECK_THROWS_WITH_AS(state.step(make_record(0, 0, 1.0, 1.0, kTerminal, 0), 0.9),
                             doctest::Contains("step 1"), NumericalError);
    }
}

TEST_CASE("linear_dice_step: schedule satisfies the step-size conditions numerically") {
    const StepSchedule s = StepSchedule::polynomial(0.1, 0.75);
    CHECK(s(0) == doctest::Approx(0.1));
    CHECK(s(99) == doctest::Approx(0.1 / std::pow(100.0, 0.75)));
    // eventually nonincreasing
    for (int t = 1; t < 1000; ++t) CHECK(s(t) <= s(t - 1));
}

TEST_CASE("linear_dice_step: stream iterates approach the closed-form fixed point") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const OracleReport oracle = compute_report(mdp, base.target, mu);
    auto features = std::make_shared<Eigen::MatrixXd>(make_random_features(5, 2, 77, 2.0));
    const auto sys = assemble_fixed_point(*features, oracle.d_mu, oracle.density_ratio,
                                          oracle.expected_len_mu, 0.9, 0.001, 0.5,
                                          oracle.expected_len_mu);
    LinearDiceState state = LinearDiceState::init(features, oracle.expected_len_mu, 0.001, 0.5,
                                                  StepSchedule::polynomial(0.1, 0.75));
    RestartStream stream(mdp, mu, base.target, 2718);
    const auto distance = [&]() {
        Eigen::VectorXd x(3);
        x << state.theta, state.eta;
        return (x - sys.solution).cwiseAbs().maxCoeff();
    };
    for (int t = 0; t < 2000; ++t) state.step(stream.next(), 0.9);
    const double early = distance();
    for (int t = 2000; t < 300000; ++t) state.step(stream.next(), 0.9);
    CHECK(distance() < early);
    CHECK(distance() <= 0.05);
}

TEST_CASE("batch_linear_dice: one-hot least squares equals the tabular correction") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const TrajectoryDataset ds = generate(mdp, mu, base.target, 100, 200, 13);
    const TabularCorrection tab = tabular_average_dice(ds, 0.9, 5);

    // Full-batch gradient descent on the unregularized loss converges to the
    // per-state mean of the targets.
    const RatioEstimate lin =
        batch_linear_dice(ds, make_onehot_features(5), ds.n_over_k(), 0.0, 0.0,
                          /*lr=*/1.0, /*epochs=*/300, /*batch_size=*/ds.num_records(),
                          /*seed=*/1, 0.9);
    CHECK((lin.ratio - tab.ratio_vector()).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(lin.j_hat == doctest::Approx(estimate_j(ds, tab.ratio_vector())).epsilon(1e-3));
}

TEST_CASE("batch_linear_dice: zero epochs returns the zero initialization") {
    const Environment env = load_environment("chain:5");
    const TrajectoryDataset ds = generate(env.mdp, env.target, env.target, 10, 100, 3);
    const RatioEstimate est = batch_linear_dice(ds, make_onehot_features(5), ds.n_over_k(),
                                                0.001, 0.5, 0.0005, 0, 512, 1, 0.95);
    CHECK(est.ratio.cwiseAbs().maxCoeff() == 0.0);
    CHECK(est.j_hat == 0.0);
    CHECK(est.diagnostics.at("steps") == 0.0);
}

TEST_CASE("batch_linear_dice: defaults train on a 4000-transition dataset with finite loss") {
    const Environment base = load_environment("chain:13");
    const TabularMdp mdp = base.mdp.with_discount(0.95);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    // 40 trajectories x length cap 100 mirrors the tuning dataset shape.
    const TrajectoryDataset ds = generate(mdp, mu, base.target, 40, 100, 23);
    const RatioEstimate est =
        batch_linear_dice(ds, make_onehot_features(13), ds.n_over_k(), 0.001, 0.5, 0.0005,
                          /*epochs=*/10, /*batch_size=*/512, /*seed=*/5, 0.95);
    CHECK(std::isfinite(est.diagnostics.at("final_loss")));
    CHECK(std::isfinite(est.j_hat));
    CHECK(est.diagnostics.at("feature_bound") == doctest::Approx(1.0));
    CHECK(est.diagnostics.at("steps") > 0.0);
}

TEST_CASE("batch_linear_dice: divergent learning rate raises a numerical error") {
    const Environment env = load_environment("chain:5");
    const TrajectoryDataset ds = generate(env.mdp, env.target, env.target, 50, 100, 3);
    CHECK_THROWS_AS(batch_linear_dice(ds, make_onehot_features(5), ds.n_over_k(), 0.0, 0.5,
                                      /*lr=*/1e6, /*epochs=*/50, /*batch_size=*/16, 1, 0.9),
                    NumericalError);
}

TEST_CASE("off_policy_td: zero rewards give zero Q and J") {
    TabularMdp mdp = random_mdp(4, 2, 19);
    mdp.reward.setZero();
    const Policy target = random_policy(4, 2, 20);
    const Policy mu = mix_with_uniform(target, 0.5);
    const TrajectoryDataset ds = generate(mdp, mu, target, 100, 50, 6);
    const TdEstimate est = off_policy_td(ds, MdpMeta::of(mdp), target,
                                         StepSchedule::constant(0.1), 5, 3, 0.9);
    CHECK(est.q.cwiseAbs().maxCoeff() == 0.0);
    CHECK(est.j_hat == 0.0);
}

TEST_CASE("off_policy_td: converges to oracle q on on-policy data") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const TrajectoryDataset ds = generate(mdp, base.target, base.target, 20000, 200, 29);
    const Eigen::MatrixXd q_true = q_values(mdp, base.target);
    const TdEstimate est = off_policy_td(ds, MdpMeta::of(mdp), base.target,
                                         StepSchedule::polynomial(0.5, 0.51), /*epochs=*/20,
                                         /*seed=*/30, 0.9);
    CHECK((est.q - q_true).cwiseAbs().maxCoeff() <= 1e-2);
    const double j_true = j_pi(mdp, base.target);
    CHECK(std::abs(est.j_hat - j_true) <= 1e-2);
}

TEST_CASE("cop_td: gamma=0 fixed point is the initial-over-sampling ratio") {
    const Environment base = load_environment("chain:5");
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const TrajectoryDataset ds = generate(base.mdp, mu, base.target, 2000, 200, 37);
    const RatioEstimate est =
        cop_td(ds, MdpMeta::of(base.mdp), StepSchedule::polynomial(0.5, 0.51), /*epochs=*/60,
               /*seed=*/38, /*gamma=*/0.0);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(5);
    for (const auto& r : ds.records) counts(r.state) += 1.0;
    for (int s = 0; s < 5; ++s) {
        const double expected =
            base.mdp.initial_dist(s) * ds.num_records() / counts(s);
        CHECK(est.ratio(s) == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("cop_td: tracks the oracle ratio within 0.1 on on-policy data") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const OracleReport oracle = compute_report(mdp, base.target, base.target);
    const TrajectoryDataset ds = generate(mdp, base.target, base.target, 20000, 200, 47);
    const RatioEstimate est =
        cop_td(ds, MdpMeta::of(mdp), StepSchedule::polynomial(0.2, 0.51), /*epochs=*/40,
               /*seed=*/48, 0.9);
    CHECK((est.ratio - oracle.density_ratio).cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("cop_td: literal restart term is the configurable alternative") {
    // With gamma=0 the literal variant's fixed point is nu itself rather than
    // nu over the sampling distribution.
    const Environment base = load_environment("chain:5");
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const TrajectoryDataset ds = generate(base.mdp, mu, base.target, 2000, 200, 67);
    const RatioEstimate est =
        cop_td(ds, MdpMeta::of(base.mdp), StepSchedule::polynomial(0.5, 0.51), /*epochs=*/60,
               /*seed=*/68, /*gamma=*/0.0, CopTdRestartTerm::kInitialLiteral);
    for (int s = 0; s < 5; ++s)
        CHECK(est.ratio(s) == doctest::Approx(base.mdp.initial_dist(s)).epsilon(0.02));
}

TEST_CASE("average_reward_baseline: trivial and oracle-consistency checks") {
    SUBCASE("constant rewards") {
        TrajectoryDataset ds;
        ds.num_states = 1;
        ds.num_actions = 1;
        ds.num_trajectories = 1;
        ds.records = {make_record(0, 0, 1.0, 1.0, 0, 0, 0.25),
                      make_record(0, 1, 1.0, 1.0, kTerminal, 0, 0.25)};
        CHECK(average_reward_baseline(ds) == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("empty dataset is rejected") {
        TrajectoryDataset ds;
        CHECK_THROWS_AS(average_reward_baseline(ds), InputError);
    }
    SUBCASE("large behaviour dataset matches sum_s d_mu(s) r_mu(s)") {
        const Environment base = load_environment("chain:5");
        const Policy mu = mix_with_uniform(base.target, 0.3);
        const Eigen::VectorXd d_mu = undiscounted_stationary(base.mdp, mu);
        const Eigen::VectorXd r_mu =
            (base.mdp.reward.array() * mu.probs.array()).rowwise().sum();
        const double truth = d_mu.dot(r_mu);
        std::vector<double> samples;
        for (int rep = 0; rep < 200; ++rep) {
            const TrajectoryDataset ds =
                generate(base.mdp, mu, base.target, 100, 200,
                         derive_seed(9000, static_cast<std::uint64_t>(rep)));
            samples.push_back(average_reward_baseline(ds));
        }
        const MeanStderr stat = mean_stderr(samples);
        CHECK(std::abs(stat.mean - truth) <= 3.0 * stat.stderr_);
    }
}

TEST_CASE("fenchel identity: closed-form maximizer matches a grid search to 1e-9") {
    const Environment base = load_environment("chain:5");
    const Policy mu = mix_with_uniform(base.target, 0.3);
    for (std::uint64_t pair = 0; pair < 20; ++pair) {
        const TrajectoryDataset ds =
            generate(base.mdp, mu, base.target, 30, 200, derive_seed(1100, pair));
        const Eigen::MatrixXd phi = make_random_features(5, 3, derive_seed(1200, pair));
        SplitMix64 rng(derive_seed(1300, pair));
        Eigen::VectorXd theta(3);
        for (int i = 0; i < 3; ++i) theta(i) = 4.0 * rng.next_double() - 2.0;

        const double multiplier = ds.n_over_k() * (1.0 - 0.9);
        double mean_f = 0.0;
        for (const auto& r : ds.records) mean_f += phi.row(r.state).dot(theta);
        mean_f /= ds.num_records();

        const double eta_closed = multiplier * mean_f - 1.0;

        // Independent route: coarse grid plus a parabolic vertex through the
        // best three points (exact for a quadratic objective).
        const double lambda2 = 0.5;
        const auto objective = [&](double eta) {
            return lambda2 * (eta * (multiplier * mean_f - 1.0) - 0.5 * eta * eta);
        };
        double best = -20.0;
        for (double eta = -20.0; eta <= 20.0; eta += 0.01) {
            if (objective(eta) > objective(best)) best = eta;
        }
        const double h = 0.01;
        const double lo = objective(best - h), mid = objective(best), hi = objective(best + h);
        const double eta_grid = best + 0.5 * h * (lo - hi) / (lo - 2.0 * mid + hi);
        CHECK(std::abs(eta_grid - eta_closed) <= 1e-9);

        // Inner maximum equals the square-penalty form.
        const double inner_max = objective(eta_closed);
        const double square_form =
            0.5 * lambda2 * (multiplier * mean_f - 1.0) * (multiplier * mean_f - 1.0);
        CHECK(inner_max == doctest::Approx(square_form).epsilon(1e-9));
    }
}

TEST_CASE("discount_pow: continuous across the log-space switch") {
    CHECK(discount_pow(0.99, 0) == 1.0);
    CHECK(discount_pow(0.99, 500) == doctest::Approx(std::pow(0.99, 500)).epsilon(1e-12));
    CHECK(discount_pow(0.99, 501) ==
          doctest::Approx(std::pow(0.99, 500) * 0.99).epsilon(1e-10));
    CHECK(discount_pow(0.5, 2000) >= 0.0);
}

}  // TEST_SUITE("estimators")
