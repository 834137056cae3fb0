#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/io.hpp"
#include "blocksid/lti.hpp"
#include "blocksid/metrics.hpp"
#include "blocksid/solver.hpp"
#include "blocksid/theory.hpp"

namespace blocksid {

struct SyntheticParams {
    Index n = 100;
    Index w = 2;
};

struct MassSpringParams {
    Index N = 10;
    double dt = 0.2;
};

struct MultiAgentParams {
    Index agents = 20;
    Index degree = 3;
    Index n_i = 5;
    Index m_i = 5;
    double dt = 0.2;
};

using GeneratorSpec = std::variant<SyntheticParams, MassSpringParams, MultiAgentParams>;

inline std::string generator_name(const GeneratorSpec& g) {
    struct {
        std::string operator()(const SyntheticParams&) const { return "synthetic"; }
        std::string operator()(const MassSpringParams&) const { return "mass_spring"; }
        std::string operator()(const MultiAgentParams&) const { return "multi_agent"; }
    } visitor;
    return std::visit(visitor, g);
}

inline std::string generator_params(const GeneratorSpec& g) {
    struct {
        std::string operator()(const SyntheticParams& p) const {
            return "n=" + std::to_string(p.n) + ";w=" + std::to_string(p.w);
        }
        std::string operator()(const MassSpringParams& p) const {
            return "N=" + std::to_string(p.N) + ";dt=" + io::format_double(p.dt);
        }
        std::string operator()(const MultiAgentParams& p) const {
            return "agents=" + std::to_string(p.agents) + ";degree=" + std::to_string(p.degree) +
                   ";n_i=" + std::to_string(p.n_i) + ";m_i=" + std::to_string(p.m_i) +
                   ";dt=" + io::format_double(p.dt);
        }
    } visitor;
    return std::visit(visitor, g);
}

inline SystemModel generate(const GeneratorSpec& g, std::uint64_t seed) {
    struct {
        std::uint64_t seed;
        SystemModel operator()(const SyntheticParams& p) const { return gen_synthetic(p.n, p.w, seed); }
        SystemModel operator()(const MassSpringParams& p) const { return gen_mass_spring(p.N, p.dt); }
        SystemModel operator()(const MultiAgentParams& p) const {
            return gen_multi_agent(p.agents, p.degree, p.n_i, p.m_i, p.dt, seed);
        }
    } visitor{seed};
    return std::visit(visitor, g);
}

enum class EstimatorKind { block_reg, least_squares };

inline const char* estimator_name(EstimatorKind k) {
    return k == EstimatorKind::block_reg ? "block_reg" : "least_squares";
}

struct ExperimentConfig {
    GeneratorSpec generator = SyntheticParams{};
    std::vector<int> T_list{3};
    std::vector<Index> d_list{100};
    std::vector<std::uint64_t> seeds{1};
    std::optional<double> fixed_lambda;  // empty: use lambda_schedule
    std::vector<EstimatorKind> estimators{EstimatorKind::block_reg};
    std::string output_path;
    int workers = 1;
    bool record_wall_time = false;
    EstimatorConfig solver;  // lambda_d is overwritten per sweep point

    void validate() const {
        if (T_list.empty() || d_list.empty() || seeds.empty() || estimators.empty())
            throw Error(Errc::invalid_argument, "sweep lists must be nonempty");
        for (int T : T_list)
            if (T < 2) throw Error(Errc::invalid_argument, "T entries must be at least 2");
        for (Index d : d_list)
            if (d < 1) throw Error(Errc::invalid_argument, "d entries must be at least 1");
        if (fixed_lambda && !(*fixed_lambda >= 0.0))
            throw Error(Errc::invalid_argument, "fixed lambda must be nonnegative");
        if (workers < 1) throw Error(Errc::invalid_argument, "workers must be at least 1");
    }
};

struct ExperimentRecord {
    std::string generator;
    std::string generator_params;
    Index n = 0;
    Index m = 0;
    int T = 0;
    Index d = 0;
    std::uint64_t seed = 0;
    std::string estimator;
    std::string status;  // "ok", "not_converged" or "undefined"
    double lambda_d = 0.0;
    Index mismatch = 0;
    double rme = 0.0;
    double rst = 0.0;
    double linf = 0.0;
    double op_norm = 0.0;
    double normalized_2 = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;
    bool converged = false;
    std::optional<double> wall_time_seconds;
};

inline const std::vector<std::string>& record_columns() {
    static const std::vector<std::string> columns{
        "generator", "generator_params", "n",      "m",     "T",     "d",
        "seed",      "estimator",        "status", "lambda_d", "mismatch", "rme",
        "rst",       "linf",             "op_norm", "normalized_2", "kappa", "gamma",
        "converged", "wall_time_seconds"};
    return columns;
}

inline std::string records_to_csv(const std::vector<ExperimentRecord>& records) {
    std::string out;
    const auto& cols = record_columns();
    for (std::size_t k = 0; k < cols.size(); ++k) out += (k ? "," : "") + cols[k];
    out += '\n';
    const auto num = [](double x) { return io::format_double(x); };
    for (const auto& r : records) {
        const bool undefined = r.status == "undefined";
        std::vector<std::string> cells{
            r.generator,
            r.generator_params,
            std::to_string(r.n),
            std::to_string(r.m),
            std::to_string(r.T),
            std::to_string(r.d),
            std::to_string(r.seed),
            r.estimator,
            r.status,
            num(r.lambda_d),
            undefined ? "" : std::to_string(r.mismatch),
            undefined ? "" : num(r.rme),
            num(r.rst),
            undefined ? "" : num(r.linf),
            undefined ? "" : num(r.op_norm),
            undefined ? "" : num(r.normalized_2),
            num(r.kappa),
            num(r.gamma),
            r.converged ? "true" : "false",
            r.wall_time_seconds ? num(*r.wall_time_seconds) : "",
        };
        for (std::size_t k = 0; k < cells.size(); ++k) out += (k ? "," : "") + cells[k];
        out += '\n';
    }
    return out;
}

/// Seed of the trajectory batch at horizon T for a given sweep seed. The
/// batch does not depend on d, so smaller d are prefixes of larger ones.
inline std::uint64_t batch_seed(std::uint64_t seed, int T) {
    return derive_seed(seed, 0x6261746368000000ULL + static_cast<std::uint64_t>(T));
}

/**
 * Runs every (seed, T, d) sweep point and every requested estimator.
 * Records come back in config order (seed, then T, then d, then estimator)
 * regardless of the worker count.
 */
inline std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config) {
    config.validate();

    struct Context {
        SystemModel model;
        Matrix theta_star;
        BlockSupport truth;
        std::map<int, std::pair<double, double>> kappa_gamma;  // per T
    };
    std::vector<Context> contexts;
    for (auto seed : config.seeds) {
        Context ctx;
        ctx.model = generate(config.generator, seed);
        ctx.theta_star = ctx.model.theta();
        ctx.truth = support_pattern(ctx.theta_star, ctx.model.partition, 0.0);
        for (int T : config.T_list) {
            const auto cov = design_covariance(ctx.model, T);
            double gamma = std::numeric_limits<double>::quiet_NaN();
            try {
                gamma = mutual_incoherence(cov.sigma_tilde, ctx.model.partition, ctx.truth);
            } catch (const Error& e) {
                if (e.code() != Errc::incoherence_undefined) throw;
            }
            ctx.kappa_gamma[T] = {cov.kappa, gamma};
        }
        contexts.push_back(std::move(ctx));
    }

    struct Point {
        std::size_t seed_index;
        int T;
        Index d;
    };
    std::vector<Point> points;
    for (std::size_t s = 0; s < config.seeds.size(); ++s)
        for (int T : config.T_list)
            for (Index d : config.d_list) points.push_back({s, T, d});

    const std::size_t per_point = config.estimators.size();
    std::vector<ExperimentRecord> records(points.size() * per_point);

    detail::parallel_for(static_cast<Index>(points.size()), config.workers, [&](Index k) {
        const auto& pt = points[static_cast<std::size_t>(k)];
        const auto& ctx = contexts[pt.seed_index];
        const auto& partition = ctx.model.partition;
        const std::uint64_t seed = config.seeds[pt.seed_index];
        const auto batch = simulate_batch(ctx.model, pt.T, pt.d, batch_seed(seed, pt.T));
        const auto [kappa, gamma] = ctx.kappa_gamma.at(pt.T);

        for (std::size_t e = 0; e < per_point; ++e) {
            const EstimatorKind kind = config.estimators[e];
            ExperimentRecord rec;
            rec.generator = generator_name(config.generator);
            rec.generator_params = generator_params(config.generator);
            rec.n = ctx.model.n();
            rec.m = ctx.model.m();
            rec.T = pt.T;
            rec.d = pt.d;
            rec.seed = seed;
            rec.estimator = estimator_name(kind);
            rec.rst = rst(pt.d, rec.n, rec.m);
            rec.kappa = kappa;
            rec.gamma = gamma;

            const auto start = std::chrono::steady_clock::now();
            std::optional<Matrix> estimate;
            if (kind == EstimatorKind::block_reg) {
                EstimatorConfig solver = config.solver;
                solver.lambda_d = config.fixed_lambda ? *config.fixed_lambda : lambda_schedule(partition, pt.d);
                solver.workers = 1;
                auto result = solve_block_regularized(batch, partition, solver);
                rec.lambda_d = solver.lambda_d;
                rec.converged = result.converged;
                rec.status = result.converged ? "ok" : "not_converged";
                estimate = std::move(result.theta_hat);
            } else {
                rec.lambda_d = 0.0;
                try {
                    estimate = solve_least_squares(batch);
                    rec.converged = true;
                    rec.status = "ok";
                } catch (const Error& err) {
                    if (err.code() != Errc::ls_undefined) throw;
                    rec.status = "undefined";
                    rec.converged = false;
                }
            }
            const auto stop = std::chrono::steady_clock::now();
            if (config.record_wall_time)
                rec.wall_time_seconds = std::chrono::duration<double>(stop - start).count();

            if (estimate) {
                const auto support = support_pattern(*estimate, partition, config.solver.zero_tol);
                rec.mismatch = mismatch_error(support, ctx.truth);
                rec.rme = rme(rec.mismatch, partition);
                const auto errors = error_norms(*estimate, ctx.theta_star);
                rec.linf = errors.linf_elementwise;
                rec.op_norm = errors.op_norm;
                rec.normalized_2 = errors.normalized_2;
            }
            records[static_cast<std::size_t>(k) * per_point + e] = std::move(rec);
        }
    });
    return records;
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

namespace io {

inline GeneratorSpec generator_from_json(const json& g, const std::string& where) {
    const auto& type = require(g, "type", where);
    if (!type.is_string()) throw Error(Errc::parse_error, where + ".type: expected a string");
    const auto name = type.get<std::string>();
    auto int_field = [&](const char* field, Index fallback) -> Index {
        return g.contains(field) ? static_cast<Index>(as_integer(g.at(field), where + "." + field)) : fallback;
    };
    auto num_field = [&](const char* field, double fallback) -> double {
        return g.contains(field) ? as_double(g.at(field), where + "." + field) : fallback;
    };
    if (name == "synthetic") {
        SyntheticParams p;
        p.n = static_cast<Index>(as_integer(require(g, "n", where), where + ".n"));
        p.w = int_field("w", p.w);
        return p;
    }
    if (name == "mass_spring") {
        MassSpringParams p;
        p.N = static_cast<Index>(as_integer(require(g, "N", where), where + ".N"));
        p.dt = num_field("dt", p.dt);
        return p;
    }
    if (name == "multi_agent") {
        MultiAgentParams p;
        p.agents = static_cast<Index>(as_integer(require(g, "agents", where), where + ".agents"));
        p.degree = int_field("degree", p.degree);
        p.n_i = int_field("n_i", p.n_i);
        p.m_i = int_field("m_i", p.m_i);
        p.dt = num_field("dt", p.dt);
        return p;
    }
    throw Error(Errc::parse_error, where + ".type: unknown generator '" + name + "'");
}

inline ExperimentConfig experiment_config_from_json(const json& j, const std::string& source = "config") {
    if (!j.is_object()) throw Error(Errc::parse_error, source + ": expected a JSON object");
    ExperimentConfig c;
    c.generator = generator_from_json(require(j, "generator", source), source + ".generator");

    auto int_list = [&](const char* field) {
        const auto& v = require(j, field, source);
        const std::string where = source + "." + field;
        if (!v.is_array()) throw Error(Errc::parse_error, where + ": expected an array");
        std::vector<long long> out;
        for (std::size_t k = 0; k < v.size(); ++k)
            out.push_back(as_integer(v[k], where + "[" + std::to_string(k) + "]"));
        return out;
    };
    c.T_list.clear();
    for (auto T : int_list("T_list")) c.T_list.push_back(static_cast<int>(T));
    c.d_list.clear();
    for (auto d : int_list("d_list")) c.d_list.push_back(static_cast<Index>(d));
    c.seeds.clear();
    for (auto s : int_list("seeds")) {
        if (s < 0) throw Error(Errc::parse_error, source + ".seeds: seeds must be nonnegative");
        c.seeds.push_back(static_cast<std::uint64_t>(s));
    }

    if (j.contains("lambda_mode")) {
        const auto& lm = j.at("lambda_mode");
        if (lm.is_string() && lm.get<std::string>() == "schedule") {
            c.fixed_lambda.reset();
        } else if (lm.is_object() && lm.contains("fixed")) {
            c.fixed_lambda = as_double(lm.at("fixed"), source + ".lambda_mode.fixed");
        } else {
            throw Error(Errc::parse_error, source + ".lambda_mode: expected \"schedule\" or {\"fixed\": value}");
        }
    }
    if (j.contains("estimators")) {
        const auto& v = j.at("estimators");
        if (!v.is_array()) throw Error(Errc::parse_error, source + ".estimators: expected an array");
        c.estimators.clear();
        for (std::size_t k = 0; k < v.size(); ++k) {
            const std::string where = source + ".estimators[" + std::to_string(k) + "]";
            if (!v[k].is_string()) throw Error(Errc::parse_error, where + ": expected a string");
            const auto name = v[k].get<std::string>();
            if (name == "block_reg")
                c.estimators.push_back(EstimatorKind::block_reg);
            else if (name == "least_squares")
                c.estimators.push_back(EstimatorKind::least_squares);
            else
                throw Error(Errc::parse_error, where + ": unknown estimator '" + name + "'");
        }
    }
    if (j.contains("output_path")) {
        if (!j.at("output_path").is_string())
            throw Error(Errc::parse_error, source + ".output_path: expected a string");
        c.output_path = j.at("output_path").get<std::string>();
    }
    if (j.contains("workers")) c.workers = static_cast<int>(as_integer(j.at("workers"), source + ".workers"));
    if (j.contains("record_wall_time")) {
        if (!j.at("record_wall_time").is_boolean())
            throw Error(Errc::parse_error, source + ".record_wall_time: expected a boolean");
        c.record_wall_time = j.at("record_wall_time").get<bool>();
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        const std::string where = source + ".solver";
        if (s.contains("max_iter")) c.solver.max_iter = static_cast<int>(as_integer(s.at("max_iter"), where + ".max_iter"));
        if (s.contains("kkt_tol")) c.solver.kkt_tol = as_double(s.at("kkt_tol"), where + ".kkt_tol");
        if (s.contains("zero_tol")) c.solver.zero_tol = as_double(s.at("zero_tol"), where + ".zero_tol");
        if (s.contains("step_policy")) {
            const auto& sp = s.at("step_policy");
            if (sp == "fixed")
                c.solver.step_policy = StepPolicy::fixed_lipschitz;
            else if (sp == "backtracking")
                c.solver.step_policy = StepPolicy::backtracking;
            else
                throw Error(Errc::parse_error, where + ".step_policy: expected \"fixed\" or \"backtracking\"");
        }
    }
    try {
        c.validate();
        c.solver.validate();
    } catch (const Error& e) {
        throw Error(Errc::parse_error, source + ": " + e.what());
    }
    return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_config_from_json(parse_json(read_file(path), path), path);
}

}  // namespace io

/// Worker cap: an explicit value wins, then BLOCKSID_WORKERS, then the config.
inline int resolve_workers(std::optional<int> cli, int from_config) {
    if (cli) return *cli;
    if (const char* env = std::getenv("BLOCKSID_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
        throw Error(Errc::invalid_argument, std::string("BLOCKSID_WORKERS must be a positive integer, got '") + env + "'");
    }
    return from_config;
}

}  // namespace blocksid
