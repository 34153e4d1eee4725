#include "dicelab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dicelab/envs.hpp"
#include "dicelab/oracle.hpp"
#include "dicelab/text.hpp"

namespace dicelab {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const std::vector<std::string> kEstimatorNames = {"avg-dice", "avg-dice-linear", "td",
                                                  "cop-td", "avg-reward"};

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == ':' || c == '/' || c == ',' || c == ' ') c = '-';
    }
    return s;
}

std::vector<double> to_double_list(const ordered_json& j) {
    std::vector<double> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<double>());
    } else {
        out.push_back(j.get<double>());
    }
    return out;
}

std::vector<int> to_int_list(const ordered_json& j) {
    std::vector<int> out;
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(v.get<int>());
    } else {
        out.push_back(j.get<int>());
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

struct SweepPointInfo {
    std::string env;
    double gamma = 0.0;
    double eps = 0.0;
    int num_traj = 0;
    int max_len = 0;
    EstimatorPoint est;
    std::string id;
};

struct OracleBundle {
    TabularMdp mdp;
    Policy target;
    Policy behaviour;
    OracleReport report;
};

}  // namespace

Policy make_behaviour(const Policy& target, double eps, double var_scale) {
    return soften(mix_with_uniform(target, eps), var_scale);
}

EvalRun evaluate_estimator(const EstimatorPoint& est, const TrajectoryDataset& dataset,
                           const OracleReport& oracle, const Policy& target,
                           const Eigen::VectorXd& initial_dist, double gamma,
                           std::uint64_t train_seed) {
    const int num_states = dataset.num_states;
    const int n = dataset.num_records();

    Eigen::VectorXd counts = Eigen::VectorXd::Zero(num_states);
    for (const auto& r : dataset.records) counts(r.state) += 1.0;

    EvalRun run;
    const auto on_log = [&](std::int64_t step, const Eigen::VectorXd& ratio, double j_hat) {
        LogPoint p;
        p.step = step;
        p.j_hat = j_hat;
        p.squared_error = (j_hat - oracle.j_pi) * (j_hat - oracle.j_pi);
        run.series.push_back(p);
        double mass = std::numeric_limits<double>::quiet_NaN();
        double max_err = std::numeric_limits<double>::quiet_NaN();
        if (ratio.size() == num_states && n > 0) {
            mass = ratio.dot(counts) / static_cast<double>(n);
            max_err = 0.0;
            for (int s = 0; s < num_states; ++s)
                if (oracle.d_mu(s) > 0.0)
                    max_err = std::max(max_err, std::abs(ratio(s) - oracle.density_ratio(s)));
        }
        run.mass_series.push_back(mass);
        run.max_ratio_error_series.push_back(max_err);
    };

    const auto resolve_h = [&]() {
        if (est.h == "empirical") return dataset.n_over_k();
        if (est.h == "oracle") return oracle.expected_len_mu;
        const double v = std::stod(est.h);
        if (v <= 0.0) throw InputError("estimator h must be positive");
        return v;
    };

    if (est.name == "avg-dice") {
        const std::int64_t log_every = std::max<std::int64_t>(1, n / 200);
        const auto correction =
            tabular_average_dice_curve(dataset, gamma, num_states, log_every, on_log);
        run.j_hat = estimate_j(dataset, correction.ratio_vector());
    } else if (est.name == "avg-dice-linear") {
        Eigen::MatrixXd features;
        if (est.features == "onehot") {
            features = make_onehot_features(num_states);
        } else if (est.features.rfind("random:", 0) == 0) {
            const int dim = std::stoi(est.features.substr(7));
            features = make_random_features(num_states, dim, derive_seed(train_seed, 0xFEA7));
        } else {
            throw InputError("unknown features spec: " + est.features);
        }
        const std::int64_t batches =
            static_cast<std::int64_t>((n + est.batch_size - 1) / est.batch_size) * est.epochs;
        const std::int64_t log_every = std::max<std::int64_t>(1, batches / 200);
        const auto result = batch_linear_dice(dataset, features, resolve_h(), est.lambda1,
                                              est.lambda2, est.lr, est.epochs, est.batch_size,
                                              train_seed, gamma, log_every, on_log);
        run.j_hat = result.j_hat;
    } else if (est.name == "td") {
        MdpMeta meta{num_states, dataset.num_actions, initial_dist};
        const std::int64_t steps = static_cast<std::int64_t>(n) * est.epochs;
        const std::int64_t log_every = std::max<std::int64_t>(1, steps / 200);
        const auto result = off_policy_td(dataset, meta, target, StepSchedule::constant(est.lr),
                                          est.epochs, train_seed, gamma, log_every, on_log);
        run.j_hat = result.j_hat;
    } else if (est.name == "cop-td") {
        MdpMeta meta{num_states, dataset.num_actions, initial_dist};
        const std::int64_t steps = static_cast<std::int64_t>(n) * est.epochs;
        const std::int64_t log_every = std::max<std::int64_t>(1, steps / 200);
        const auto result = cop_td(dataset, meta, StepSchedule::constant(est.lr), est.epochs,
                                   train_seed, gamma, CopTdRestartTerm::kInitialOverSampling,
                                   log_every, on_log);
        run.j_hat = result.j_hat;
    } else if (est.name == "avg-reward") {
        const std::int64_t log_every = std::max<std::int64_t>(1, n / 200);
        run.j_hat = average_reward_curve(dataset, log_every, on_log);
    } else {
        throw InputError("unknown estimator: " + est.name);
    }

    if (run.series.empty()) {
        // epochs=0 style runs still get one final row.
        on_log(0, Eigen::VectorXd(), run.j_hat);
    }
    run.final_mass = run.mass_series.back();
    run.final_max_ratio_error = run.max_ratio_error_series.back();
    return run;
}

void write_eval_csv(const std::string& path, const EvalRun& run, double j_true) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write run csv: " + path);
    out << "step,j_hat,j_true,squared_error,mass,max_ratio_error\n";
    for (size_t i = 0; i < run.series.size(); ++i) {
        const auto& p = run.series[i];
        out << p.step << "," << format_double(p.j_hat) << "," << format_double(j_true) << ","
            << format_double(p.squared_error) << "," << format_double(run.mass_series[i])
            << "," << format_double(run.max_ratio_error_series[i]) << "\n";
    }
}

std::string EstimatorPoint::id() const {
    std::ostringstream os;
    os << name;
    if (name == "avg-dice-linear") {
        os << "_l1-" << format_double(lambda1) << "_l2-" << format_double(lambda2) << "_lr-"
           << format_double(lr) << "_ep-" << epochs << "_bs-" << batch_size << "_f-"
           << sanitize(features) << "_h-" << sanitize(h);
    } else if (name == "td" || name == "cop-td") {
        os << "_lr-" << format_double(lr) << "_ep-" << epochs;
    }
    return os.str();
}

std::vector<EstimatorPoint> EstimatorSpec::expand() const {
    std::vector<EstimatorPoint> out;
    EstimatorPoint base;
    base.name = name;
    base.epochs = epochs;
    base.batch_size = batch_size;
    base.features = features;
    base.h = h;
    if (name == "avg-dice" || name == "avg-reward") {
        out.push_back(base);
    } else if (name == "td" || name == "cop-td") {
        for (double lr : lrs) {
            EstimatorPoint p = base;
            p.lr = lr;
            out.push_back(p);
        }
    } else if (name == "avg-dice-linear") {
        for (double l1 : lambda1s)
            for (double l2 : lambda2s)
                for (double lr : lrs) {
                    EstimatorPoint p = base;
                    p.lambda1 = l1;
                    p.lambda2 = l2;
                    p.lr = lr;
                    out.push_back(p);
                }
    } else {
        throw InputError("unknown estimator: " + name);
    }
    return out;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config: " + std::string(e.what()));
    }
    ExperimentConfig cfg;
    cfg.num_trajs.clear();
    cfg.max_lens.clear();
    if (j.contains("env")) cfg.envs.push_back(j.at("env").get<std::string>());
    if (j.contains("envs"))
        for (const auto& e : j.at("envs")) cfg.envs.push_back(e.get<std::string>());
    if (j.contains("gammas")) cfg.gammas = to_double_list(j.at("gammas"));
    if (j.contains("num_trajs")) cfg.num_trajs = to_int_list(j.at("num_trajs"));
    if (j.contains("max_lens")) cfg.max_lens = to_int_list(j.at("max_lens"));
    if (j.contains("dataset_sizes"))
        for (int v : to_int_list(j.at("dataset_sizes"))) cfg.dataset_sizes.push_back(v);
    if (j.contains("behaviour_eps")) cfg.behaviour_epss = to_double_list(j.at("behaviour_eps"));
    if (j.contains("seeds")) {
        cfg.seeds.clear();
        if (j.at("seeds").is_array()) {
            for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
        } else {
            cfg.seeds.push_back(j.at("seeds").get<std::uint64_t>());
        }
    }
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("truncation")) cfg.truncation = j.at("truncation").get<std::string>();
    if (j.contains("estimators")) {
        for (const auto& e : j.at("estimators")) {
            EstimatorSpec spec;
            spec.name = e.at("name").get<std::string>();
            if (e.contains("lambda1")) spec.lambda1s = to_double_list(e.at("lambda1"));
            if (e.contains("lambda2")) spec.lambda2s = to_double_list(e.at("lambda2"));
            if (e.contains("lr")) spec.lrs = to_double_list(e.at("lr"));
            if (e.contains("epochs")) spec.epochs = e.at("epochs").get<int>();
            if (e.contains("batch_size")) spec.batch_size = e.at("batch_size").get<int>();
            if (e.contains("features")) spec.features = e.at("features").get<std::string>();
            if (e.contains("h")) spec.h = e.at("h").get<std::string>();
            cfg.estimators.push_back(spec);
        }
    }
    if (cfg.max_lens.empty() && cfg.dataset_sizes.empty()) cfg.max_lens = {100};
    return cfg;
}

void ExperimentConfig::validate() const {
    if (envs.empty()) throw InputError("config: envs must be non-empty");
    if (gammas.empty()) throw InputError("config: gammas must be non-empty");
    if (behaviour_epss.empty()) throw InputError("config: behaviour_eps must be non-empty");
    if (estimators.empty()) throw InputError("config: estimators must be non-empty");
    if (seeds.empty()) throw InputError("config: seeds must be non-empty");
    if (num_trajs.empty() && dataset_sizes.empty())
        throw InputError("config: need num_trajs or dataset_sizes");
    if (num_trajs.empty() && !dataset_sizes.empty() && max_lens.empty())
        throw InputError("config: dataset_sizes needs max_lens (or num_trajs) to derive points");
    for (const auto& e : estimators) {
        if (std::find(kEstimatorNames.begin(), kEstimatorNames.end(), e.name) ==
            kEstimatorNames.end())
            throw InputError("config: unknown estimator " + e.name);
    }
    truncation_policy_from_string(truncation);
    for (double g : gammas)
        if (!(g > 0.0 && g < 1.0)) throw InputError("config: gamma must lie in (0,1)");
}

namespace {

struct SizePoint {
    int num_traj;
    int max_len;
};

std::vector<SizePoint> size_points(const ExperimentConfig& cfg) {
    std::vector<SizePoint> points;
    if (!cfg.num_trajs.empty() && !cfg.max_lens.empty()) {
        for (int k : cfg.num_trajs)
            for (int len : cfg.max_lens) {
                if (!cfg.dataset_sizes.empty()) {
                    const std::int64_t product = static_cast<std::int64_t>(k) * len;
                    if (std::find(cfg.dataset_sizes.begin(), cfg.dataset_sizes.end(),
                                  product) == cfg.dataset_sizes.end())
                        throw InputError(
                            "config: num_traj x max_len = " + std::to_string(product) +
                            " not present in dataset_sizes");
                }
                points.push_back({k, len});
            }
    } else if (!cfg.num_trajs.empty()) {
        for (int k : cfg.num_trajs)
            for (std::int64_t size : cfg.dataset_sizes) {
                if (size % k != 0)
                    throw InputError("config: dataset_size not divisible by num_traj");
                points.push_back({k, static_cast<int>(size / k)});
            }
    } else {
        for (std::int64_t size : cfg.dataset_sizes)
            for (int len : cfg.max_lens) {
                if (size % len != 0)
                    throw InputError("config: dataset_size not divisible by max_len");
                points.push_back({static_cast<int>(size / len), len});
            }
    }
    return points;
}

}  // namespace

int sweep_thread_count() {
    if (const char* env = std::getenv("DICELAB_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (...) {
            return 1;
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<RunResult> run_sweep(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);
    fs::create_directories(fs::path(config.out_dir) / "runs");

    // Enumerate sweep points deterministically.
    std::vector<SweepPointInfo> points;
    for (const auto& env : config.envs)
        for (double gamma : config.gammas)
            for (double eps : config.behaviour_epss)
                for (const auto& size : size_points(config))
                    for (const auto& spec : config.estimators)
                        for (const auto& est : spec.expand()) {
                            SweepPointInfo p;
                            p.env = env;
                            p.gamma = gamma;
                            p.eps = eps;
                            p.num_traj = size.num_traj;
                            p.max_len = size.max_len;
                            p.est = est;
                            std::ostringstream id;
                            id << sanitize(env) << "_g" << format_double(gamma) << "_e"
                               << format_double(eps) << "_K" << size.num_traj << "_L"
                               << size.max_len << "_" << est.id();
                            p.id = id.str();
                            points.push_back(p);
                        }

    // Oracles per (env, gamma, eps), computed once up front.
    std::map<std::string, OracleBundle> oracles;
    for (const auto& p : points) {
        std::ostringstream key;
        key << p.env << "|" << format_double(p.gamma) << "|" << format_double(p.eps);
        if (oracles.count(key.str())) continue;
        const Environment env = load_environment(p.env);
        OracleBundle bundle;
        bundle.mdp = env.mdp.with_discount(p.gamma);
        bundle.target = env.target;
        bundle.behaviour = make_behaviour(env.target, p.eps, 1.0);
        bundle.report = compute_report(bundle.mdp, bundle.target, bundle.behaviour);
        oracles.emplace(key.str(), std::move(bundle));
    }

    struct Task {
        const SweepPointInfo* point;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& p : points)
        for (std::uint64_t seed : config.seeds) tasks.push_back({&p, seed});

    const TruncationPolicy truncation = truncation_policy_from_string(config.truncation);
    std::vector<RunResult> results(tasks.size());

    const auto run_task = [&](size_t idx) {
        const Task& task = tasks[idx];
        const SweepPointInfo& p = *task.point;
        RunResult& res = results[idx];
        res.point_id = p.id;
        res.env = p.env;
        res.estimator_id = p.est.id();
        res.estimator_name = p.est.name;
        res.gamma = p.gamma;
        res.eps = p.eps;
        res.num_traj = p.num_traj;
        res.max_len = p.max_len;
        res.seed = task.seed;
        const auto start = std::chrono::steady_clock::now();
        try {
            std::ostringstream key;
            key << p.env << "|" << format_double(p.gamma) << "|" << format_double(p.eps);
            const OracleBundle& bundle = oracles.at(key.str());
            TrajectoryDataset dataset =
                generate(bundle.mdp, bundle.behaviour, bundle.target, p.num_traj, p.max_len,
                         task.seed, truncation);
            dataset.env_spec = p.env;
            dataset.behaviour_eps = p.eps;
            const EvalRun run = evaluate_estimator(
                p.est, dataset, bundle.report, bundle.target, bundle.mdp.initial_dist, p.gamma,
                derive_seed(task.seed, 0x7Ea1));
            res.series = run.series;
            res.final_squared_error = run.series.back().squared_error;
            res.final_max_ratio_error = run.final_max_ratio_error;
            res.final_mass = run.final_mass;
            const fs::path csv_path = fs::path(config.out_dir) / "runs" /
                                      (p.id + "_seed" + std::to_string(task.seed) + ".csv");
            write_eval_csv(csv_path.string(), run, bundle.report.j_pi);
        } catch (const std::exception& e) {
            res.failed = true;
            res.error = e.what();
        }
        res.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const int num_threads = std::min<int>(sweep_thread_count(), static_cast<int>(tasks.size()));
    if (num_threads <= 1) {
        for (size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> workers;
        workers.reserve(static_cast<size_t>(num_threads));
        for (int t = 0; t < num_threads; ++t) {
            workers.emplace_back([&]() {
                while (true) {
                    const size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    run_task(i);
                }
            });
        }
        for (auto& w : workers) w.join();
    }

    // Aggregate (byte-stable: fixed order, no timing columns).
    std::ofstream agg(fs::path(config.out_dir) / "aggregate.csv");
    agg << "env,estimator,estimator_id,gamma,eps,num_traj,max_len,lambda1,lambda2,lr,epochs,"
           "batch_size,features,h,seeds,failures,mean_final_squared_error,"
           "stderr_final_squared_error,mean_final_max_ratio_error,mean_final_mass\n";
    size_t offset = 0;
    for (const auto& p : points) {
        std::vector<double> sq, ratio_err, mass;
        int failures = 0;
        for (size_t k = 0; k < config.seeds.size(); ++k) {
            const RunResult& r = results[offset + k];
            if (r.failed) {
                ++failures;
                continue;
            }
            sq.push_back(r.final_squared_error);
            ratio_err.push_back(r.final_max_ratio_error);
            mass.push_back(r.final_mass);
        }
        offset += config.seeds.size();
        agg << p.env << "," << p.est.name << "," << p.est.id() << "," << format_double(p.gamma)
            << "," << format_double(p.eps) << "," << p.num_traj << "," << p.max_len << ","
            << format_double(p.est.lambda1) << "," << format_double(p.est.lambda2) << ","
            << format_double(p.est.lr) << "," << p.est.epochs << "," << p.est.batch_size << ","
            << p.est.features << "," << p.est.h << "," << config.seeds.size() << "," << failures
            << "," << format_double(mean_of(sq)) << "," << format_double(stderr_of(sq)) << ","
            << format_double(mean_of(ratio_err)) << "," << format_double(mean_of(mass)) << "\n";
    }
    agg.close();

    // Manifest (contains timings; not part of the determinism contract).
    ordered_json manifest;
    manifest["out_dir"] = config.out_dir;
    manifest["runs"] = ordered_json::array();
    for (const auto& r : results) {
        ordered_json jr;
        jr["point_id"] = r.point_id;
        jr["env"] = r.env;
        jr["estimator_id"] = r.estimator_id;
        jr["estimator_name"] = r.estimator_name;
        jr["gamma"] = r.gamma;
        jr["eps"] = r.eps;
        jr["num_traj"] = r.num_traj;
        jr["max_len"] = r.max_len;
        jr["seed"] = r.seed;
        jr["failed"] = r.failed;
        jr["error"] = r.error;
        jr["wall_seconds"] = r.wall_seconds;
        jr["csv"] = r.failed ? "" : ("runs/" + r.point_id + "_seed" + std::to_string(r.seed) +
                                     ".csv");
        manifest["runs"].push_back(jr);
    }
    std::ofstream mf(fs::path(config.out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";

    return results;
}

SelectedPoint select_best(const std::string& aggregate_csv_path) {
    std::ifstream in(aggregate_csv_path);
    if (!in) throw InputError("cannot open aggregate csv: " + aggregate_csv_path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("aggregate csv is empty");
    std::vector<std::string> header;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) header.push_back(cell);
    }
    const auto col = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ParseError("aggregate csv missing column " + name);
        return static_cast<size_t>(it - header.begin());
    };
    const size_t c_est = col("estimator");
    const size_t c_l1 = col("lambda1");
    const size_t c_l2 = col("lambda2");
    const size_t c_lr = col("lr");
    const size_t c_epochs = col("epochs");
    const size_t c_bs = col("batch_size");
    const size_t c_feat = col("features");
    const size_t c_h = col("h");
    const size_t c_err = col("mean_final_squared_error");

    struct Group {
        std::map<std::string, std::string> fields;
        std::vector<double> errors;
    };
    std::map<std::string, Group> groups;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw ParseError("aggregate csv row has wrong column count");
        ++rows;
        const std::string key = cells[c_est] + "|" + cells[c_l1] + "|" + cells[c_l2] + "|" +
                                cells[c_lr] + "|" + cells[c_epochs] + "|" + cells[c_bs] + "|" +
                                cells[c_feat] + "|" + cells[c_h];
        auto& group = groups[key];
        if (group.fields.empty()) {
            group.fields["estimator"] = cells[c_est];
            group.fields["lambda1"] = cells[c_l1];
            group.fields["lambda2"] = cells[c_l2];
            group.fields["lr"] = cells[c_lr];
            group.fields["epochs"] = cells[c_epochs];
            group.fields["batch_size"] = cells[c_bs];
            group.fields["features"] = cells[c_feat];
            group.fields["h"] = cells[c_h];
        }
        const double err = std::stod(cells[c_err]);
        group.errors.push_back(std::isnan(err) ? std::numeric_limits<double>::infinity() : err);
    }
    if (rows == 0) throw InputError("aggregate csv has no data rows");

    const SelectedPoint* best = nullptr;
    std::vector<SelectedPoint> candidates;
    for (const auto& [key, group] : groups) {
        SelectedPoint p;
        p.fields = group.fields;
        p.mean_final_squared_error = mean_of(group.errors);
        candidates.push_back(p);
    }
    const auto tie_key = [](const SelectedPoint& p) {
        return std::make_tuple(std::stod(p.fields.at("lr")), std::stod(p.fields.at("lambda1")),
                               std::stod(p.fields.at("lambda2")));
    };
    for (const auto& c : candidates) {
        if (!best || c.mean_final_squared_error < best->mean_final_squared_error ||
            (c.mean_final_squared_error == best->mean_final_squared_error &&
             tie_key(c) < tie_key(*best)))
            best = &c;
    }
    return *best;
}

void emit_plot_data(const std::vector<RunResult>& results, const std::string& path) {
    // (env, estimator, step) -> log10 mse samples across seeds.
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::vector<double>> cells;
    for (const auto& r : results) {
        if (r.failed) continue;
        for (const auto& p : r.series) {
            const double clamped = std::max(p.squared_error, 1e-300);
            cells[{r.env, r.estimator_id, p.step}].push_back(std::log10(clamped));
        }
    }
    std::ofstream out(path);
    if (!out) throw InputError("cannot write plot data: " + path);
    out << "env,estimator,step,mean_log10_mse,stderr\n";
    for (const auto& [key, values] : cells) {
        out << std::get<0>(key) << "," << std::get<1>(key) << "," << std::get<2>(key) << ","
            << format_double(mean_of(values)) << "," << format_double(stderr_of(values))
            << "\n";
    }
}

std::vector<RunResult> load_sweep_results(const std::string& out_dir) {
    std::ifstream mf(fs::path(out_dir) / "manifest.json");
    if (!mf) throw InputError("cannot open manifest in " + out_dir);
    ordered_json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("manifest: " + std::string(e.what()));
    }
    std::vector<RunResult> results;
    for (const auto& jr : manifest.at("runs")) {
        RunResult r;
        r.point_id = jr.at("point_id").get<std::string>();
        r.env = jr.at("env").get<std::string>();
        r.estimator_id = jr.at("estimator_id").get<std::string>();
        r.estimator_name = jr.at("estimator_name").get<std::string>();
        r.gamma = jr.at("gamma").get<double>();
        r.eps = jr.at("eps").get<double>();
        r.num_traj = jr.at("num_traj").get<int>();
        r.max_len = jr.at("max_len").get<int>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.failed = jr.at("failed").get<bool>();
        r.error = jr.at("error").get<std::string>();
        r.wall_seconds = jr.at("wall_seconds").get<double>();
        if (!r.failed) {
            const std::string csv = jr.at("csv").get<std::string>();
            std::ifstream run_in(fs::path(out_dir) / csv);
            if (!run_in) throw InputError("cannot open run csv: " + csv);
            std::string line;
            std::getline(run_in, line);  // header
            while (std::getline(run_in, line)) {
                if (line.empty()) continue;
                std::istringstream ls(line);
                std::string cell;
                LogPoint p;
                std::getline(ls, cell, ',');
                p.step = std::stoll(cell);
                std::getline(ls, cell, ',');
                p.j_hat = std::stod(cell);
                std::getline(ls, cell, ',');  // j_true
                std::getline(ls, cell, ',');
                p.squared_error = std::stod(cell);
                r.series.push_back(p);
            }
            if (!r.series.empty()) r.final_squared_error = r.series.back().squared_error;
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace dicelab
