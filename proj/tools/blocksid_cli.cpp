// Command-line front end: gen, solve, check, sweep.

#include <charconv>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "blocksid/blocksid.hpp"

namespace {

using namespace blocksid;

struct GeneratorOptions {
    std::string generator = "synthetic";
    Index n = 100;
    Index w = 2;
    Index N = 10;
    double dt = 0.2;
    Index agents = 20;
    Index degree = 3;
    Index n_i = 5;
    Index m_i = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--generator", generator, "synthetic | mass_spring | multi_agent")
            ->check(CLI::IsMember({"synthetic", "mass_spring", "multi_agent"}));
        cmd->add_option("--n", n, "synthetic: state dimension (m = n)");
        cmd->add_option("--w", w, "synthetic: band width");
        cmd->add_option("--N", N, "mass_spring: number of masses");
        cmd->add_option("--dt", dt, "mass_spring/multi_agent: Euler sampling time");
        cmd->add_option("--agents", agents, "multi_agent: number of agents");
        cmd->add_option("--degree", degree, "multi_agent: neighbors per agent");
        cmd->add_option("--n-i", n_i, "multi_agent: state size per agent");
        cmd->add_option("--m-i", m_i, "multi_agent: input size per agent");
    }

    GeneratorSpec spec() const {
        if (generator == "mass_spring") return MassSpringParams{N, dt};
        if (generator == "multi_agent") return MultiAgentParams{agents, degree, n_i, m_i, dt};
        return SyntheticParams{n, w};
    }
};

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_file(path, text);
}

double parse_lambda(const std::string& text) {
    double value = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || !(value >= 0.0))
        throw Error(Errc::invalid_argument, "--lambda expects 'schedule' or a nonnegative number, got '" + text + "'");
    return value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse block-structured LTI identification toolkit"};
    app.require_subcommand(1);

    // gen
    GeneratorOptions gen_opts;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_batch;
    int gen_T = 3;
    Index gen_d = 100;
    auto* gen = app.add_subcommand("gen", "Generate a benchmark model (and optionally a trajectory batch)");
    gen_opts.attach(gen);
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "model JSON path (default: stdout)");
    gen->add_option("--batch", gen_batch, "also write a trajectory batch CSV here");
    gen->add_option("--T", gen_T, "batch horizon")->check(CLI::Range(2, 1000000));
    gen->add_option("--d", gen_d, "batch trajectory count")->check(CLI::PositiveNumber);

    // solve
    std::string solve_model, solve_batch, solve_out, solve_lambda = "schedule", solve_estimator = "block_reg";
    std::uint64_t solve_seed = 0;
    int solve_T = 3;
    Index solve_d = 100;
    EstimatorConfig solve_cfg;
    std::string step_policy = "backtracking";
    auto* solve = app.add_subcommand("solve", "Estimate Theta from a model (simulated) or a batch file");
    solve->add_option("--model", solve_model, "model JSON; supplies the block partition and Theta*");
    solve->add_option("--batch", solve_batch, "batch CSV; unit blocks unless --model is also given");
    solve->add_option("--T", solve_T, "horizon when simulating from --model")->check(CLI::Range(2, 1000000));
    solve->add_option("--d", solve_d, "trajectory count when simulating")->check(CLI::PositiveNumber);
    solve->add_option("--seed", solve_seed, "batch seed when simulating");
    solve->add_option("--lambda", solve_lambda, "regularization weight, or 'schedule' for sqrt(2(D^2 + D log(nbar+mbar))/d)");
    solve->add_option("--estimator", solve_estimator, "block_reg | least_squares")
        ->check(CLI::IsMember({"block_reg", "least_squares"}));
    solve->add_option("--max-iter", solve_cfg.max_iter, "iteration cap per column block");
    solve->add_option("--kkt-tol", solve_cfg.kkt_tol, "KKT residual stopping tolerance");
    solve->add_option("--zero-tol", solve_cfg.zero_tol, "support threshold");
    solve->add_option("--step-policy", step_policy, "fixed | backtracking")
        ->check(CLI::IsMember({"fixed", "backtracking"}));
    solve->add_option("--workers", solve_cfg.workers, "threads over column blocks");
    solve->add_option("--out", solve_out, "estimate JSON path (default: stdout)");

    // check
    GeneratorOptions check_opts;
    std::string check_model, check_out;
    std::uint64_t check_seed = 0;
    int check_T = 3;
    auto* check = app.add_subcommand("check", "Report the identifiability assumptions of a model");
    check->add_option("--model", check_model, "model JSON (otherwise generated from the flags below)");
    check_opts.attach(check);
    check->add_option("--seed", check_seed, "generator seed when no --model is given");
    check->add_option("--T", check_T, "horizon")->check(CLI::Range(2, 1000000));
    check->add_option("--out", check_out, "report JSON path (default: stdout)");

    // sweep
    std::string sweep_config, sweep_out;
    std::optional<std::uint64_t> sweep_seed;
    std::optional<int> sweep_workers;
    bool sweep_timing = false;
    auto* sweep = app.add_subcommand("sweep", "Run a configured experiment sweep and write CSV records");
    sweep->add_option("--config", sweep_config, "experiment config JSON")->required();
    sweep->add_option("--seed", sweep_seed, "replace the config's seed list with this seed");
    sweep->add_option("--out", sweep_out, "CSV path (overrides output_path; '-' for stdout)");
    sweep->add_option("--workers", sweep_workers, "concurrent sweep points")->check(CLI::PositiveNumber);
    sweep->add_flag("--timing", sweep_timing, "fill wall_time_seconds (output is then not reproducible)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const auto spec = gen_opts.spec();
            const auto model = generate(spec, gen_seed);
            emit(io::model_to_string(model), gen_out);
            if (!gen_batch.empty()) {
                const auto batch = simulate_batch(model, gen_T, gen_d, batch_seed(gen_seed, gen_T));
                io::save_batch_csv(batch, model.n(), gen_batch);
            }
        } else if (solve->parsed()) {
            if (solve_model.empty() && solve_batch.empty())
                throw Error(Errc::invalid_argument, "solve needs --model and/or --batch");
            std::optional<SystemModel> model;
            if (!solve_model.empty()) model = io::load_model(solve_model);
            TrajectoryBatch batch;
            BlockPartition partition;
            if (!solve_batch.empty()) {
                batch = io::load_batch_csv(solve_batch);
                const Index p = batch.X.cols();
                const Index n = batch.Y.cols();
                partition = model ? model->partition : BlockPartition::unit(n, p - n);
            } else {
                batch = simulate_batch(*model, solve_T, solve_d, batch_seed(solve_seed, solve_T));
                partition = model->partition;
            }
            solve_cfg.step_policy = step_policy == "fixed" ? StepPolicy::fixed_lipschitz : StepPolicy::backtracking;
            io::EstimateFile file;
            file.estimator = solve_estimator;
            if (solve_estimator == "least_squares") {
                file.theta_hat = solve_least_squares(batch);
                file.lambda_d = 0.0;
                file.support = support_pattern(file.theta_hat, partition, solve_cfg.zero_tol);
                file.kkt_residual = kkt_residual(file.theta_hat, batch, partition, 0.0);
                file.objective = block_objective(file.theta_hat, batch, partition, 0.0);
            } else {
                solve_cfg.lambda_d =
                    solve_lambda == "schedule" ? lambda_schedule(partition, batch.d()) : parse_lambda(solve_lambda);
                const auto result = solve_block_regularized(batch, partition, solve_cfg);
                file.theta_hat = result.theta_hat;
                file.support = result.support;
                file.lambda_d = solve_cfg.lambda_d;
                file.kkt_residual = result.kkt_residual;
                file.objective = result.objective;
                file.converged = result.converged;
            }
            emit(io::estimate_to_json(file).dump(1) + "\n", solve_out);
        } else if (check->parsed()) {
            const auto model = check_model.empty() ? generate(check_opts.spec(), check_seed) : io::load_model(check_model);
            const auto report = check_assumptions(model, check_T);
            emit(io::assumption_report_to_json(report).dump(1) + "\n", check_out);
        } else if (sweep->parsed()) {
            auto config = io::load_experiment_config(sweep_config);
            if (sweep_seed) config.seeds = {*sweep_seed};
            config.workers = resolve_workers(sweep_workers, config.workers);
            if (sweep_timing) config.record_wall_time = true;
            const std::string out = sweep_out.empty() ? config.output_path : sweep_out;
            const auto records = run_experiment(config);
            emit(records_to_csv(records), out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
