#include "fseq/error.hpp"
#include "fseq/harness.hpp"
#include "fseq/lowrank.hpp"
#include "fseq/parallel.hpp"
#include "fseq/rng.hpp"
#include "fseq/spectra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace fseq {

namespace {

std::uint64_t cell_seed(std::uint64_t base, Eigen::Index n, Eigen::Index T) {
    return mix64(base ^ mix64(static_cast<std::uint64_t>(n) * 1000003ULL + static_cast<std::uint64_t>(T)));
}

struct Cell {
    Eigen::Index n;
    Eigen::Index T;
};

std::vector<Cell> grid_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (auto n : cfg.n_grid)
        for (auto T : cfg.T_grid) cells.push_back({n, T});
    return cells;
}

// values[job][method][set]; aggregated in (cell, method, set, replication) order.
ExperimentReport aggregate(const std::string& title, const ExperimentConfig& cfg, const std::vector<Cell>& cells,
                           const std::vector<std::string>& methods, const std::vector<std::string>& sets,
                           const std::vector<std::vector<std::vector<double>>>& values) {
    ExperimentReport report;
    report.title = title;
    report.base_seed = cfg.base_seed;
    report.threads = cfg.threads;
    const auto R = static_cast<std::size_t>(cfg.replications);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            for (std::size_t s = 0; s < sets.size(); ++s) {
                double sum = 0.0;
                for (std::size_t r = 0; r < R; ++r) {
                    const double v = values[c * R + r][m][s];
                    sum += v;
                    report.log.push_back({static_cast<int>(r), methods[m], sets[s], cells[c].n, cells[c].T, v});
                }
                const double mean = sum / static_cast<double>(R);
                double ss = 0.0;
                for (std::size_t r = 0; r < R; ++r) {
                    const double d = values[c * R + r][m][s] - mean;
                    ss += d * d;
                }
                const double sd = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1)) : 0.0;
                report.cells.push_back({methods[m], sets[s], cells[c].n, cells[c].T, mean, sd, cfg.replications});
            }
        }
    }
    return report;
}

int slra_rank(const std::string& method, int default_rank) {
    if (method == "slra") return default_rank;
    const std::string digits = method.substr(4);
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
        throw std::invalid_argument("unknown AMSE method '" + method + "'");
    return std::stoi(digits);
}

}  // namespace

double amse(const Eigen::MatrixXd& true_chi, const Eigen::MatrixXd& est, const std::vector<Eigen::Index>& idx,
            Eigen::Index window_begin, Eigen::Index window_end) {
    if (true_chi.rows() != est.rows() || true_chi.cols() != est.cols())
        throw std::invalid_argument("amse: shapes differ");
    if (idx.empty()) throw std::invalid_argument("amse: empty index set");
    if (window_begin < 0 || window_end > true_chi.cols() || window_begin >= window_end)
        throw std::invalid_argument("amse: empty or out-of-range window");
    const Eigen::Index w = window_end - window_begin;
    double total = 0.0;
    for (auto i : idx) {
        if (i < 0 || i >= true_chi.rows()) throw std::invalid_argument("amse: index out of range");
        const auto diff = true_chi.row(i).segment(window_begin, w) - est.row(i).segment(window_begin, w);
        total += diff.squaredNorm() / static_cast<double>(w);
    }
    return total / static_cast<double>(idx.size());
}

ExperimentReport run_amse_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"dlra", "slra1", "slra2"} : cfg.methods;
    for (const auto& m : methods)
        if (m != "dlra" && m.rfind("slra", 0) != 0) throw std::invalid_argument("unknown AMSE method '" + m + "'");
    const auto cells = grid_cells(cfg);
    const auto R = static_cast<std::size_t>(cfg.replications);
    std::vector<std::vector<std::vector<double>>> values(cells.size() * R);

    parallel_for(values.size(), cfg.threads, [&](std::size_t job) {
        const Cell& cell = cells[job / R];
        const std::uint64_t rep = job % R;
        const PaperDgp dgp = make_paper_dgp(cell.n, cfg.weight_mode);
        const SimulatedPanel sim =
            simulate_ss(dgp.model, cell.T, cfg.burn_in, cell_seed(cfg.base_seed, cell.n, cell.T), dgp.idio, rep);
        const int M = cfg.bandwidth > 0 ? cfg.bandwidth : default_bandwidth(cell.T);

        // DLRA fixes the common evaluation window, so it always runs.
        const Panel input = cfg.standardize_dlra ? standardize(sim.y) : sim.y;
        const DlraFit dlra = fit_dlra(input, cfg.q, M, EdgePolicy::DropEdges);
        Eigen::MatrixXd dlra_common = dlra.common;
        if (cfg.standardize_dlra) dlra_common = input.scale().asDiagonal() * dlra_common;

        std::vector<std::vector<double>> out(methods.size());
        for (std::size_t m = 0; m < methods.size(); ++m) {
            Eigen::MatrixXd est;
            if (methods[m] == "dlra") {
                est = dlra_common;
            } else {
                est = fit_slra(sim.y, slra_rank(methods[m], cfg.r)).common.values();
            }
            for (const auto& set : cfg.index_sets)
                out[m].push_back(
                    amse(sim.chi.values(), est, index_set(set, cell.n), dlra.window_begin, dlra.window_end));
        }
        values[job] = std::move(out);
    });

    auto report = aggregate("AMSE of the common component", cfg, cells, methods, cfg.index_sets, values);
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

ExperimentReport run_forecast_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"both", "strong", "sw"} : cfg.methods;
    std::vector<ForecastSpec> specs;
    for (const auto& m : methods) specs.push_back({forecast_model_from_string(m), cfg.p_max});
    const auto cells = grid_cells(cfg);
    const auto R = static_cast<std::size_t>(cfg.replications);
    const std::vector<std::string> sets{"all"};
    std::vector<std::vector<std::vector<double>>> values(cells.size() * R);

    ForecastOptions options;
    options.factor_source = cfg.factor_source;
    options.r_chi = cfg.r_chi;
    options.strong_count = cfg.strong_count;

    parallel_for(values.size(), cfg.threads, [&](std::size_t job) {
        const Cell& cell = cells[job / R];
        const std::uint64_t rep = job % R;
        const PaperDgp dgp = make_paper_dgp(cell.n, cfg.weight_mode);
        const SimulatedPanel sim =
            simulate_ss(dgp.model, cell.T, cfg.burn_in, cell_seed(cfg.base_seed, cell.n, cell.T), dgp.idio, rep);
        const auto results = run_forecast_models(sim, specs, cell.T - 2, options);
        std::vector<std::vector<double>> out;
        for (const auto& r : results) out.push_back({r.msfe});
        values[job] = std::move(out);
    });

    auto report = aggregate("One-step forecast MSFE", cfg, cells, methods, sets, values);
    report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

LaggedCorrTable lagged_corr_diagnostic(const Eigen::MatrixXd& factors, const Panel& idio, const std::vector<int>& lags) {
    const Eigen::Index T = idio.T();
    if (factors.cols() != T) throw std::invalid_argument("lagged_corr_diagnostic: factors and panel differ in T");
    LaggedCorrTable table;
    table.critical_value = 1.96 / std::sqrt(static_cast<double>(T));
    for (int h : lags) {
        if (h < 1) throw std::invalid_argument("lagged_corr_diagnostic: lags must be >= 1");
        if (h >= T - 1) throw std::invalid_argument("lagged_corr_diagnostic: lag " + std::to_string(h) + " >= T");
    }
    const Eigen::MatrixXd& e = idio.values();
    for (Eigen::Index j = 0; j < factors.rows(); ++j) {
        for (Eigen::Index i = 0; i < e.rows(); ++i) {
            for (int h : lags) {
                const Eigen::Index N = T - h;
                const Eigen::ArrayXd a = factors.row(j).segment(h, N).transpose().array();
                const Eigen::ArrayXd b = e.row(i).segment(0, N).transpose().array();
                const Eigen::ArrayXd da = a - a.mean();
                const Eigen::ArrayXd db = b - b.mean();
                const double denom = std::sqrt((da * da).sum() * (db * db).sum());
                const double corr = denom > 0.0 ? (da * db).sum() / denom : 0.0;
                table.rows.push_back({static_cast<int>(j + 1), i + 1, h, corr});
            }
        }
    }
    return table;
}

std::vector<std::pair<double, double>> quantile_table(std::vector<double> values, const std::vector<double>& probs) {
    if (values.empty()) throw std::invalid_argument("quantile_table: no values");
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_table: probability outside [0, 1]");
        const double pos = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        out.emplace_back(p, values[lo] + frac * (values[hi] - values[lo]));
    }
    return out;
}

DensityCurve kernel_density(const std::vector<double>& values, int grid_points) {
    if (values.size() < 2) throw std::invalid_argument("kernel_density: need at least two values");
    if (grid_points < 2) throw std::invalid_argument("kernel_density: grid_points must be >= 2");
    const auto N = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= N;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (N - 1.0));
    const auto q = quantile_table(values, {0.25, 0.75});
    const double iqr = q[1].second - q[0].second;
    double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    if (spread <= 0.0) spread = 1e-3;
    DensityCurve curve;
    curve.bandwidth = 0.9 * spread * std::pow(N, -0.2);
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn - 3.0 * curve.bandwidth;
    const double hi = *mx + 3.0 * curve.bandwidth;
    const double norm = 1.0 / (N * curve.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (int g = 0; g < grid_points; ++g) {
        const double x = lo + (hi - lo) * g / (grid_points - 1);
        double d = 0.0;
        for (double v : values) {
            const double u = (x - v) / curve.bandwidth;
            d += std::exp(-0.5 * u * u);
        }
        curve.grid.push_back(x);
        curve.density.push_back(d * norm);
    }
    return curve;
}

}  // namespace fseq
