#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "dicelab/envs.hpp"
#include "dicelab/harness.hpp"
#include "dicelab/text.hpp"

namespace {

using namespace dicelab;

struct EnvSetup {
    Environment env;
    Policy behaviour;
};

EnvSetup resolve_env(const std::string& spec, double eps, double var_scale) {
    EnvSetup setup{load_environment(spec), {}};
    setup.behaviour = make_behaviour(setup.env.target, eps, var_scale);
    return setup;
}

int cmd_dataset_gen(const std::string& env_spec, double eps, double var_scale, int num_traj,
                    int max_len, std::uint64_t seed, const std::string& out,
                    const std::string& truncation) {
    const EnvSetup setup = resolve_env(env_spec, eps, var_scale);
    TrajectoryDataset dataset =
        generate(setup.env.mdp, setup.behaviour, setup.env.target, num_traj, max_len, seed,
                 truncation_policy_from_string(truncation));
    dataset.env_spec = env_spec;
    dataset.behaviour_eps = eps;
    dataset.var_scale = var_scale;
    save(dataset, out);
    std::cout << "wrote " << dataset.num_records() << " transitions ("
              << dataset.num_trajectories << " trajectories, "
              << dataset.num_completed_trajectories() << " completed) to " << out << "\n";
    return 0;
}

int cmd_oracle_compute(const std::string& env_spec, double eps, double var_scale, double gamma,
                       const std::string& out) {
    EnvSetup setup = resolve_env(env_spec, eps, var_scale);
    TabularMdp mdp = gamma > 0.0 ? setup.env.mdp.with_discount(gamma) : setup.env.mdp;
    const OracleReport report = compute_report(mdp, setup.env.target, setup.behaviour);
    save_report_json(report, out);
    std::cout << "j_pi=" << format_double(report.j_pi)
              << " E_mu[T]=" << format_double(report.expected_len_mu)
              << " E_pi[gamma^T]=" << format_double(report.gamma_mass_pi) << " -> " << out
              << "\n";
    return 0;
}

int cmd_eval(const EstimatorPoint& est, double gamma, const std::string& dataset_path,
             const std::string& oracle_path, const std::string& out) {
    const TrajectoryDataset dataset = load(dataset_path);
    if (dataset.env_spec.empty())
        throw InputError(
            "dataset carries no environment provenance; regenerate it with `dicelab dataset "
            "gen`");
    const EnvSetup setup =
        resolve_env(dataset.env_spec, dataset.behaviour_eps, dataset.var_scale);
    if (setup.behaviour.hash() != dataset.behaviour_hash ||
        setup.env.target.hash() != dataset.target_hash)
        throw IntegrityError("dataset policy hashes do not match the reconstructed policies");

    OracleReport report;
    if (!oracle_path.empty()) {
        report = load_report_json(oracle_path);
    } else {
        report = compute_report(setup.env.mdp.with_discount(gamma), setup.env.target,
                                setup.behaviour);
    }

    const EvalRun run = evaluate_estimator(est, dataset, report, setup.env.target,
                                           setup.env.mdp.initial_dist, gamma,
                                           derive_seed(dataset.seed, 0x7Ea1));
    write_eval_csv(out, run, report.j_pi);
    std::cout << "estimator=" << est.id() << " j_hat=" << format_double(run.j_hat)
              << " j_true=" << format_double(report.j_pi) << " squared_error="
              << format_double((run.j_hat - report.j_pi) * (run.j_hat - report.j_pi))
              << " max_ratio_error=" << format_double(run.final_max_ratio_error) << " -> "
              << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Average-DICE off-policy evaluation toolkit"};
    app.require_subcommand(1);

    // dataset gen
    auto* dataset_cmd = app.add_subcommand("dataset", "dataset operations");
    dataset_cmd->require_subcommand(1);
    auto* gen = dataset_cmd->add_subcommand("gen", "generate an off-policy dataset");
    std::string gen_env, gen_out, gen_trunc = "include";
    double gen_eps = 0.3, gen_var = 1.0;
    int gen_traj = 40, gen_len = 100;
    std::uint64_t gen_seed = 0;
    gen->add_option("--env", gen_env, "environment spec (chain:N, loop:N, gridworld:WxH, or JSON path)")
        ->required();
    gen->add_option("--behaviour-eps", gen_eps, "uniform mixing weight of the behaviour policy");
    gen->add_option("--var-scale", gen_var, "behaviour temperature (tabular variance analogue)");
    gen->add_option("--num-traj", gen_traj, "number of trajectories")->required();
    gen->add_option("--max-len", gen_len, "trajectory length cap");
    gen->add_option("--seed", gen_seed, "run seed");
    gen->add_option("--out", gen_out, "output JSONL path")->required();
    gen->add_option("--truncation", gen_trunc, "include|exclude|error");

    // oracle compute
    auto* oracle_cmd = app.add_subcommand("oracle", "oracle operations");
    oracle_cmd->require_subcommand(1);
    auto* compute = oracle_cmd->add_subcommand("compute", "compute exact quantities");
    std::string orc_env, orc_out;
    double orc_eps = 0.3, orc_var = 1.0, orc_gamma = -1.0;
    compute->add_option("--env", orc_env, "environment spec")->required();
    compute->add_option("--behaviour-eps", orc_eps, "uniform mixing weight");
    compute->add_option("--var-scale", orc_var, "behaviour temperature");
    compute->add_option("--gamma", orc_gamma, "discount override (default: environment's)");
    compute->add_option("--out", orc_out, "output JSON path")->required();

    // eval ( --h is a real option here, so help stays on --help alone)
    auto* eval = app.add_subcommand("eval", "run one estimator on a dataset");
    eval->set_help_flag("--help", "print help");
    EstimatorPoint est;
    double eval_gamma = 0.95;
    std::string eval_dataset, eval_oracle, eval_out;
    eval->add_option("--estimator", est.name, "avg-dice|avg-dice-linear|td|cop-td|avg-reward")
        ->required();
    eval->add_option("--gamma", eval_gamma, "evaluation discount");
    eval->add_option("--lambda1", est.lambda1, "parameter regularizer");
    eval->add_option("--lambda2", est.lambda2, "distribution regularizer");
    eval->add_option("--lr", est.lr, "learning rate");
    eval->add_option("--epochs", est.epochs, "training epochs");
    eval->add_option("--batch-size", est.batch_size, "mini-batch size");
    eval->add_option("--features", est.features, "onehot|random:<d>");
    eval->add_option("--h", est.h, "empirical|oracle|<number>");
    eval->add_option("--dataset", eval_dataset, "input dataset JSONL")->required();
    eval->add_option("--oracle", eval_oracle, "oracle report JSON (default: recompute)");
    eval->add_option("--out", eval_out, "output CSV path")->required();

    // sweep run / select / plotdata
    auto* sweep = app.add_subcommand("sweep", "config-driven experiment sweeps");
    sweep->require_subcommand(1);
    auto* sweep_run_cmd = sweep->add_subcommand("run", "run a sweep config");
    std::string sweep_config;
    sweep_run_cmd->add_option("config", sweep_config, "config JSON path")->required();
    auto* sweep_select = sweep->add_subcommand("select", "pick the best hyperparameter point");
    std::string select_csv, select_out;
    sweep_select->add_option("--aggregate", select_csv, "aggregate CSV path")->required();
    sweep_select->add_option("--out", select_out, "optional JSON output path");
    auto* sweep_plot = sweep->add_subcommand("plotdata", "emit tidy plot data from a sweep");
    std::string plot_dir, plot_out;
    sweep_plot->add_option("--dir", plot_dir, "sweep output directory")->required();
    sweep_plot->add_option("--out", plot_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_dataset_gen(gen_env, gen_eps, gen_var, gen_traj, gen_len, gen_seed,
                                   gen_out, gen_trunc);
        if (compute->parsed())
            return cmd_oracle_compute(orc_env, orc_eps, orc_var, orc_gamma, orc_out);
        if (eval->parsed()) return cmd_eval(est, eval_gamma, eval_dataset, eval_oracle, eval_out);
        if (sweep_run_cmd->parsed()) {
            const ExperimentConfig config = ExperimentConfig::from_json_file(sweep_config);
            const auto results = run_sweep(config);
            int failures = 0;
            for (const auto& r : results) failures += r.failed ? 1 : 0;
            std::cout << "ran " << results.size() << " runs (" << failures << " failed); wrote "
                      << config.out_dir << "/aggregate.csv\n";
            return failures == static_cast<int>(results.size()) && !results.empty() ? 1 : 0;
        }
        if (sweep_select->parsed()) {
            const SelectedPoint best = select_best(select_csv);
            nlohmann::ordered_json j;
            for (const auto& [k, v] : best.fields) j[k] = v;
            j["mean_final_squared_error"] = best.mean_final_squared_error;
            const std::string text = j.dump(2);
            std::cout << text << "\n";
            if (!select_out.empty()) {
                std::ofstream out(select_out);
                out << text << "\n";
            }
            return 0;
        }
        if (sweep_plot->parsed()) {
            emit_plot_data(load_sweep_results(plot_dir), plot_out);
            std::cout << "wrote " << plot_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
