#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "blocksid/blockstruct.hpp"
#include "blocksid/error.hpp"
#include "blocksid/lti.hpp"
#include "blocksid/solver.hpp"
#include "blocksid/theory.hpp"

namespace blocksid::io {

using json = nlohmann::json;

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::io_error, "failed writing '" + path + "'");
}

/// Parses JSON text, turning syntax errors into "source:line:col: message".
inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t k = 0; k < stop; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(Errc::parse_error,
                    source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Field helpers with path-qualified diagnostics
// ---------------------------------------------------------------------------

inline const json& require(const json& obj, const std::string& field, const std::string& where) {
    if (!obj.is_object()) throw Error(Errc::parse_error, where + ": expected a JSON object");
    auto it = obj.find(field);
    if (it == obj.end()) throw Error(Errc::parse_error, where + ": missing field '" + field + "'");
    return *it;
}

inline double as_double(const json& v, const std::string& where) {
    if (!v.is_number()) throw Error(Errc::parse_error, where + ": expected a number");
    return v.get<double>();
}

inline long long as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) throw Error(Errc::parse_error, where + ": expected an integer");
    return v.get<long long>();
}

inline std::vector<Index> as_sizes(const json& v, const std::string& where) {
    if (!v.is_array()) throw Error(Errc::parse_error, where + ": expected an array of integers");
    std::vector<Index> out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(static_cast<Index>(as_integer(v[k], where + "[" + std::to_string(k) + "]")));
    return out;
}

inline json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& v, Index rows, Index cols, const std::string& where) {
    if (!v.is_array()) throw Error(Errc::parse_error, where + ": expected an array of rows");
    if (static_cast<Index>(v.size()) != rows)
        throw Error(Errc::parse_error, where + ": has " + std::to_string(v.size()) + " rows, expected " +
                                           std::to_string(rows));
    Matrix M(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        const std::string rw = where + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw Error(Errc::parse_error, rw + ": expected " + std::to_string(cols) + " entries");
        for (Index j = 0; j < cols; ++j)
            M(i, j) = as_double(row[static_cast<std::size_t>(j)], rw + "[" + std::to_string(j) + "]");
    }
    return M;
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline json model_to_json(const SystemModel& model) {
    json j;
    j["n"] = model.n();
    j["m"] = model.m();
    j["row_sizes"] = model.partition.row_sizes();
    j["col_sizes"] = model.partition.col_sizes();
    j["A"] = matrix_to_json(model.A);
    j["B"] = matrix_to_json(model.B);
    j["sigma_u"] = matrix_to_json(model.sigma_u);
    j["sigma_w"] = matrix_to_json(model.sigma_w);
    return j;
}

inline SystemModel model_from_json(const json& j, const std::string& source = "model") {
    const Index n = static_cast<Index>(as_integer(require(j, "n", source), source + ".n"));
    const Index m = static_cast<Index>(as_integer(require(j, "m", source), source + ".m"));
    if (n < 1 || m < 0) throw Error(Errc::parse_error, source + ": need n >= 1 and m >= 0");
    SystemModel model;
    try {
        model.partition = BlockPartition::from_sizes(as_sizes(require(j, "row_sizes", source), source + ".row_sizes"),
                                                     as_sizes(require(j, "col_sizes", source), source + ".col_sizes"));
    } catch (const Error& e) {
        if (e.code() == Errc::parse_error) throw;
        throw Error(Errc::parse_error, source + ".row_sizes/col_sizes: " + e.what());
    }
    if (model.partition.n() != n || model.partition.m() != m)
        throw Error(Errc::parse_error, source + ": block sizes do not sum to n and m");
    model.A = matrix_from_json(require(j, "A", source), n, n, source + ".A");
    model.B = matrix_from_json(require(j, "B", source), n, m, source + ".B");
    model.sigma_u = matrix_from_json(require(j, "sigma_u", source), m, m, source + ".sigma_u");
    model.sigma_w = matrix_from_json(require(j, "sigma_w", source), n, n, source + ".sigma_w");
    model.validate();
    return model;
}

inline std::string model_to_string(const SystemModel& model) { return model_to_json(model).dump(1) + "\n"; }

inline void save_model(const SystemModel& model, const std::string& path) { write_file(path, model_to_string(model)); }

inline SystemModel load_model(const std::string& path) {
    return model_from_json(parse_json(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Estimate and report files
// ---------------------------------------------------------------------------

inline json support_to_json(const BlockSupport& s) {
    json rows = json::array();
    for (Index i = 0; i < s.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < s.cols(); ++j) row.push_back(s(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

struct EstimateFile {
    std::string estimator;
    Matrix theta_hat;
    BlockSupport support;
    double lambda_d = 0.0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    bool converged = true;
};

inline json estimate_to_json(const EstimateFile& e) {
    json j;
    j["estimator"] = e.estimator;
    j["theta_hat"] = matrix_to_json(e.theta_hat);
    j["support_mask"] = support_to_json(e.support);
    j["lambda_d"] = e.lambda_d;
    j["kkt_residual"] = e.kkt_residual;
    j["objective"] = e.objective;
    j["converged"] = e.converged;
    return j;
}

inline Matrix theta_from_estimate_json(const json& j, const std::string& source = "estimate") {
    const auto& grid = require(j, "theta_hat", source);
    if (!grid.is_array() || grid.empty() || !grid[0].is_array())
        throw Error(Errc::parse_error, source + ".theta_hat: expected a nonempty array of rows");
    return matrix_from_json(grid, static_cast<Index>(grid.size()), static_cast<Index>(grid[0].size()),
                            source + ".theta_hat");
}

inline json assumption_report_to_json(const AssumptionReport& r) {
    json j;
    j["gamma"] = r.gamma;
    j["lambda_min"] = r.lambda_min;
    j["lambda_max"] = r.lambda_max;
    j["kappa"] = std::isfinite(r.kappa) ? json(r.kappa) : json("inf");
    j["sigma_max_sq"] = r.sigma_max_sq;
    j["t_min"] = r.t_min;
    j["alpha_n"] = r.alpha_n;
    j["alpha_m"] = r.alpha_m;
    j["k_max"] = r.k_max;
    j["satisfied"] = {{"A1_incoherence", r.incoherence},
                      {"A2_bounded_eigenvalue", r.bounded_eigenvalue},
                      {"A3_bounded_minimum", r.bounded_minimum}};
    return j;
}

// ---------------------------------------------------------------------------
// Batch CSV: one row per trajectory, x[T-1] entries, u[T-1] entries, x[T] entries
// ---------------------------------------------------------------------------

inline std::string batch_to_csv(const TrajectoryBatch& batch, Index n) {
    const Index m = batch.X.cols() - n;
    std::string out;
    for (Index k = 0; k < n; ++k) out += (k ? ",x" : "x") + std::to_string(k + 1);
    for (Index k = 0; k < m; ++k) out += ",u" + std::to_string(k + 1);
    for (Index k = 0; k < n; ++k) out += ",xT" + std::to_string(k + 1);
    out += '\n';
    for (Index i = 0; i < batch.d(); ++i) {
        for (Index k = 0; k < n + m; ++k) {
            if (k) out += ',';
            out += format_double(batch.X(i, k));
        }
        for (Index k = 0; k < n; ++k) {
            out += ',';
            out += format_double(batch.Y(i, k));
        }
        out += '\n';
    }
    return out;
}

inline void save_batch_csv(const TrajectoryBatch& batch, Index n, const std::string& path) {
    write_file(path, batch_to_csv(batch, n));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline TrajectoryBatch batch_from_csv(const std::string& text, const std::string& source = "batch") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, source + ":1: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    Index n = 0, m = 0, nT = 0;
    for (std::size_t k = 0; k < header.size(); ++k) {
        const auto& h = header[k];
        if (h.rfind("xT", 0) == 0)
            ++nT;
        else if (h.rfind("x", 0) == 0 && nT == 0 && m == 0)
            ++n;
        else if (h.rfind("u", 0) == 0 && nT == 0)
            ++m;
        else
            throw Error(Errc::parse_error, source + ":1: unexpected column '" + h + "' at position " +
                                               std::to_string(k + 1));
    }
    if (n == 0 || nT != n) throw Error(Errc::parse_error, source + ":1: header must list x*, u*, xT* columns");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw Error(Errc::parse_error, source + ":" + std::to_string(lineno) + ": expected " +
                                               std::to_string(header.size()) + " fields, got " +
                                               std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            double value = 0.0;
            const auto& c = cells[k];
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), value);
            if (ec != std::errc() || ptr != c.data() + c.size())
                throw Error(Errc::parse_error, source + ":" + std::to_string(lineno) + ": field '" + header[k] +
                                                   "' is not a number: '" + c + "'");
            row.push_back(value);
        }
        rows.push_back(std::move(row));
    }
    TrajectoryBatch batch;
    const Index d = static_cast<Index>(rows.size());
    batch.X.resize(d, n + m);
    batch.Y.resize(d, n);
    for (Index i = 0; i < d; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (Index k = 0; k < n + m; ++k) batch.X(i, k) = r[static_cast<std::size_t>(k)];
        for (Index k = 0; k < n; ++k) batch.Y(i, k) = r[static_cast<std::size_t>(n + m + k)];
    }
    return batch;
}

inline TrajectoryBatch load_batch_csv(const std::string& path) { return batch_from_csv(read_file(path), path); }

}  // namespace blocksid::io
