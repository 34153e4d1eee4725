#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dicelab/dataset.hpp"
#include "dicelab/envs.hpp"
#include "dicelab/oracle.hpp"
#include "support.hpp"

using namespace dicelab;
using namespace dicelab::testing;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("generate: on-policy data has unit ratios everywhere") {
    const Environment env = load_environment("chain:5");
    const TrajectoryDataset ds =
        generate(env.mdp, env.target, env.target, 50, 100, /*seed=*/3);
    ds.validate();
    for (const auto& r : ds.records) {
        CHECK(r.rho_step == 1.0);
        CHECK(r.rho_prod == 1.0);
    }
}

TEST_CASE("generate: single one-step trajectory") {
    const TrajectoryDataset ds =
        generate(one_step_mdp(), single_action_policy(1), single_action_policy(1), 1, 10, 0);
    REQUIRE(ds.num_records() == 1);
    CHECK(ds.records[0].time == 0);
    CHECK(ds.records[0].rho_prod == 1.0);
    CHECK(ds.records[0].next_state == kTerminal);
    CHECK(ds.num_completed_trajectories() == 1);
    CHECK(ds.n_over_k() == 1.0);
}

TEST_CASE("generate: rejects behaviour that misses target support") {
    TabularMdp mdp = empty_mdp(1, 2);
    mdp.transition[0](0, 0) = 1.0;
    mdp.termination(0, 1) = 1.0;
    mdp.initial_dist(0) = 1.0;
    Policy target;
    target.probs = Eigen::MatrixXd(1, 2);
    target.probs << 0.5, 0.5;
    Policy behaviour;
    behaviour.probs = Eigen::MatrixXd(1, 2);
    behaviour.probs << 0.0, 1.0;
    CHECK_THROWS_WITH_AS(generate(mdp, behaviour, target, 5, 10, 0),
                         doctest::Contains("(s=0, a=0)"), InputError);
}

TEST_CASE("generate: fixed seed produces byte-identical JSONL") {
    const Environment env = load_environment("chain:5");
    const Policy mu = mix_with_uniform(env.target, 0.3);
    TrajectoryDataset a = generate(env.mdp, mu, env.target, 100, 100, /*seed=*/9);
    TrajectoryDataset b = generate(env.mdp, mu, env.target, 100, 100, /*seed=*/9);
    a.env_spec = b.env_spec = "chain:5";
    a.behaviour_eps = b.behaviour_eps = 0.3;
    save(a, "det_a.jsonl");
    save(b, "det_b.jsonl");
    CHECK(slurp("det_a.jsonl") == slurp("det_b.jsonl"));
    std::remove("det_a.jsonl");
    std::remove("det_b.jsonl");
}

TEST_CASE("truncation policies") {
    // Geometric termination with small p and a short cap: truncation is common.
    const TabularMdp mdp = geometric_mdp(0.15);
    const Policy pi = single_action_policy(1);
    SUBCASE("include keeps truncated trajectories flagged by their last record") {
        const TrajectoryDataset ds =
            generate(mdp, pi, pi, 200, 5, 1, TruncationPolicy::kInclude);
        ds.validate();
        CHECK(ds.num_trajectories == 200);
        CHECK(ds.num_completed_trajectories() < 200);
        CHECK(ds.num_completed_trajectories() > 0);
    }
    SUBCASE("exclude drops them and renumbers contiguously") {
        const TrajectoryDataset ds =
            generate(mdp, pi, pi, 200, 5, 1, TruncationPolicy::kExclude);
        ds.validate();
        CHECK(ds.num_trajectories == ds.num_completed_trajectories());
        CHECK(ds.num_trajectories < 200);
    }
    SUBCASE("error raises") {
        CHECK_THROWS_AS(generate(mdp, pi, pi, 200, 5, 1, TruncationPolicy::kError),
                        ModelError);
    }
    SUBCASE("mean_completed_length and n_over_k disagree only through truncated records") {
        const TrajectoryDataset inc =
            generate(mdp, pi, pi, 200, 5, 1, TruncationPolicy::kInclude);
        CHECK(inc.n_over_k() >= inc.mean_completed_length());
        const TrajectoryDataset exc =
            generate(mdp, pi, pi, 200, 5, 1, TruncationPolicy::kExclude);
        CHECK(exc.n_over_k() == doctest::Approx(exc.mean_completed_length()).epsilon(1e-15));
    }
}

TEST_CASE("save/load: empty dataset round-trips as a header-only file") {
    TrajectoryDataset ds;
    ds.num_states = 3;
    ds.num_actions = 2;
    ds.seed = 5;
    ds.behaviour_hash = "aa";
    ds.target_hash = "bb";
    save(ds, "empty.jsonl");
    std::ifstream in("empty.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1);
    const TrajectoryDataset back = load("empty.jsonl");
    CHECK(back == ds);
    std::remove("empty.jsonl");
}

TEST_CASE("save/load: round-trip equality on generated datasets") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TabularMdp mdp = random_mdp(4, 2, seed);
        const Policy target = random_policy(4, 2, seed + 1);
        const Policy behaviour = mix_with_uniform(target, 0.4);
        TrajectoryDataset ds = generate(mdp, behaviour, target, 50, 30, seed);
        ds.env_spec = "test-env";
        ds.behaviour_eps = 0.4;
        save(ds, "roundtrip.jsonl");
        const TrajectoryDataset back = load("roundtrip.jsonl");
        CHECK(back == ds);
    }
    std::remove("roundtrip.jsonl");
}

TEST_CASE("load: parse errors carry the line number") {
    {
        std::ofstream out("bad.jsonl");
        out << R"({"version":1,"num_states":1,"num_actions":1,"num_trajectories":0,)"
            << R"("seed":0,"behaviour_hash":"x","target_hash":"y"})" << "\n";
        out << "not json\n";
    }
    CHECK_THROWS_WITH_AS(load("bad.jsonl"), doctest::Contains("line 2"), ParseError);
    std::remove("bad.jsonl");
}

TEST_CASE("load: integrity violations are rejected") {
    const TabularMdp mdp = geometric_mdp(0.4);
    const Policy pi = single_action_policy(1);
    TrajectoryDataset ds = generate(mdp, pi, pi, 5, 20, 2);
    SUBCASE("tampered rho_prod breaks the telescoping identity") {
        REQUIRE(ds.num_records() >= 2);
        for (auto& r : ds.records) {
            if (r.time >= 1) {
                r.rho_prod += 0.5;
                break;
            }
        }
        save(ds, "tampered.jsonl");
        CHECK_THROWS_AS(load("tampered.jsonl"), IntegrityError);
        std::remove("tampered.jsonl");
    }
    SUBCASE("non-contiguous trajectory ids are rejected") {
        for (auto& r : ds.records) r.traj_id *= 2;
        ds.num_trajectories = ds.records.back().traj_id + 1;
        save(ds, "gappy.jsonl");
        CHECK_THROWS_AS(load("gappy.jsonl"), IntegrityError);
        std::remove("gappy.jsonl");
    }
    SUBCASE("rho_prod must be exactly 1 at time zero") {
        ds.records[0].rho_prod = 1.0000001;
        save(ds, "badstart.jsonl");
        CHECK_THROWS_AS(load("badstart.jsonl"), IntegrityError);
        std::remove("badstart.jsonl");
    }
}

TEST_CASE("index_by_state partitions record positions") {
    SUBCASE("single state gets every position") {
        const TrajectoryDataset ds =
            generate(geometric_mdp(0.3), single_action_policy(1), single_action_policy(1), 20,
                     50, 4);
        const auto index = index_by_state(ds);
        REQUIRE(index.size() == 1);
        CHECK(static_cast<int>(index.at(0).size()) == ds.num_records());
    }
    SUBCASE("random dataset: lists are disjoint, cover 0..n-1, unvisited absent") {
        const TabularMdp mdp = random_mdp(6, 2, 8);
        const Policy target = random_policy(6, 2, 9);
        const TrajectoryDataset ds =
            generate(mdp, mix_with_uniform(target, 0.2), target, 40, 30, 8);
        const auto index = index_by_state(ds);
        std::set<int> seen;
        for (const auto& [state, positions] : index) {
            CHECK(!positions.empty());
            for (int p : positions) {
                CHECK(ds.records[static_cast<size_t>(p)].state == state);
                CHECK(!seen.count(p));
                seen.insert(p);
            }
        }
        CHECK(static_cast<int>(seen.size()) == ds.num_records());
    }
}

TEST_CASE("empirical sampling distribution converges to d_mu at n=1e6") {
    const Environment env = load_environment("chain:5");
    const Policy mu = mix_with_uniform(env.target, 0.3);
    const Eigen::VectorXd d_mu = undiscounted_stationary(env.mdp, mu);
    // ~150k trajectories of mean length ~7 give over 1e6 records.
    const TrajectoryDataset ds = generate(env.mdp, mu, env.target, 150000, 200, /*seed=*/17);
    REQUIRE(ds.num_records() >= 1000000);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(5);
    for (const auto& r : ds.records) counts(r.state) += 1.0;
    const Eigen::VectorXd d_hat = counts / static_cast<double>(ds.num_records());
    CHECK((d_hat - d_mu).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("d_hat_pi_gamma is unbiased for the discounted occupancy (1000 datasets, K=10)") {
    const Environment base = load_environment("chain:5");
    const TabularMdp mdp = base.mdp.with_discount(0.9);
    const Policy mu = mix_with_uniform(base.target, 0.3);
    const Eigen::VectorXd d_pi_gamma = discounted_stationary(mdp, base.target);

    const int datasets = 1000, k = 10;
    std::vector<std::vector<double>> samples(5);
    for (int rep = 0; rep < datasets; ++rep) {
        const TrajectoryDataset ds = generate(mdp, mu, base.target, k, 200,
                                              derive_seed(4242, static_cast<std::uint64_t>(rep)));
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(5);
        for (const auto& r : ds.records)
            acc(r.state) += std::pow(0.9, r.time) * r.rho_prod;
        for (int s = 0; s < 5; ++s) samples[static_cast<size_t>(s)].push_back(acc(s) / k);
    }
    for (int s = 0; s < 5; ++s) {
        const MeanStderr stat = mean_stderr(samples[static_cast<size_t>(s)]);
        const double truth = d_pi_gamma(s) / (1.0 - 0.9);
        CHECK(std::abs(stat.mean - truth) <= 3.0 * stat.stderr_);
    }
}

TEST_CASE("RestartStream: telescoping and restart bookkeeping") {
    const Environment env = load_environment("loop:8");
    const Policy mu = mix_with_uniform(env.target, 0.3);
    RestartStream stream(env.mdp, mu, env.target, 55);
    TransitionRecord prev = stream.next();
    CHECK(prev.time == 0);
    CHECK(prev.rho_prod == 1.0);
    int restarts = 0;
    for (int i = 0; i < 5000; ++i) {
        const TransitionRecord r = stream.next();
        if (r.time == 0) {
            ++restarts;
            CHECK(r.rho_prod == 1.0);
            CHECK(prev.next_state == kTerminal);
            CHECK(r.traj_id == prev.traj_id + 1);
        } else {
            CHECK(r.time == prev.time + 1);
            CHECK(r.state == prev.next_state);
            CHECK(r.rho_prod ==
                  doctest::Approx(prev.rho_prod * prev.rho_step).epsilon(1e-12));
        }
        prev = r;
    }
    CHECK(restarts > 50);
}

}  // TEST_SUITE("dataset")
