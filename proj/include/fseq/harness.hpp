#pragma once

#include "fseq/forecast.hpp"
#include "fseq/panel.hpp"
#include "fseq/statespace.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fseq {

/// Monte-Carlo design. Index sets are generated per n: weak = 1..10,
/// strong = 11..n, all = 1..n (stored 0-based).
struct ExperimentConfig {
    std::vector<Eigen::Index> n_grid{30, 120};
    std::vector<Eigen::Index> T_grid{240, 960};
    int replications = 100;
    std::vector<std::string> methods;  // empty: experiment defaults
    std::uint64_t base_seed = 20240611;
    std::vector<std::string> index_sets{"weak", "strong", "all"};
    int r = 1;                // SLRA rank for the "slra" method
    int q = 1;                // DLRA rank
    int bandwidth = 0;        // <= 0: floor(0.75 sqrt(T))
    int burn_in = kDefaultBurnIn;
    WeightMode weight_mode = WeightMode::Divide;
    bool standardize_dlra = true;
    unsigned threads = 1;
    // forecasting
    FactorSource factor_source = FactorSource::Estimated;
    int p_max = 6;
    int r_chi = 2;
    int strong_count = -1;

    void validate() const;
};

/// Flat "key = value" file; '#' starts a comment. List values are comma
/// separated. Unknown keys are rejected.
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);
[[nodiscard]] ExperimentConfig parse_config(const std::string& text);

[[nodiscard]] std::vector<Eigen::Index> index_set(const std::string& name, Eigen::Index n);

struct ReportCell {
    std::string method;
    std::string index_set;
    Eigen::Index n = 0;
    Eigen::Index T = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation across replications
    int replications = 0;
};

struct ReportLogRow {
    int replication = 0;
    std::string method;
    std::string index_set;
    Eigen::Index n = 0;
    Eigen::Index T = 0;
    double value = 0.0;
};

struct ExperimentReport {
    std::string title;
    std::vector<ReportCell> cells;
    std::vector<ReportLogRow> log;
    std::uint64_t base_seed = 0;
    unsigned threads = 1;
    double runtime_seconds = 0.0;

    [[nodiscard]] const ReportCell& cell(const std::string& method, const std::string& set, Eigen::Index n,
                                         Eigen::Index T) const;
};

/// (1/#I) sum_{i in I} (1/|W|) sum_{t in W} (chi_it - est_it)^2 with the
/// window W = [window_begin, window_end).
[[nodiscard]] double amse(const Eigen::MatrixXd& true_chi, const Eigen::MatrixXd& est,
                          const std::vector<Eigen::Index>& index_set, Eigen::Index window_begin,
                          Eigen::Index window_end);

/// Methods: "dlra" (rank q), "slra1" (rank 1), "slra2" (rank 2). AMSE is
/// evaluated on the DLRA interior window for every method.
[[nodiscard]] ExperimentReport run_amse_experiment(const ExperimentConfig& cfg);

/// Methods: "both", "strong", "sw". Fit on t <= T-1, forecast period T.
[[nodiscard]] ExperimentReport run_forecast_experiment(const ExperimentConfig& cfg);

/// Mean and sample standard deviation recomputed from the log; throws if a
/// cell disagrees by more than 1e-9.
void verify_report(const ExperimentReport& report);
void write_report_csv(const ExperimentReport& report, const std::filesystem::path& path);
void write_report_log_csv(const ExperimentReport& report, const std::filesystem::path& path);
void write_report_markdown(const ExperimentReport& report, const std::filesystem::path& path);

struct LaggedCorrRow {
    int factor;   // 1-based
    Eigen::Index series;  // 1-based
    int lag;
    double corr;
};

struct LaggedCorrTable {
    std::vector<LaggedCorrRow> rows;
    double critical_value = 0.0;  // 1.96 / sqrt(T)
};

/// Corr(F_{j,t}, e_{i,t-h}) over the overlapping sample, for all j, i, h.
[[nodiscard]] LaggedCorrTable lagged_corr_diagnostic(const Eigen::MatrixXd& factors, const Panel& idio,
                                                     const std::vector<int>& lags);

/// Empirical quantiles with linear interpolation between order statistics.
[[nodiscard]] std::vector<std::pair<double, double>> quantile_table(std::vector<double> values,
                                                                    const std::vector<double>& probs);

struct DensityCurve {
    double bandwidth = 0.0;
    std::vector<double> grid;
    std::vector<double> density;
};

/// Gaussian kernel density with Silverman's rule-of-thumb bandwidth.
[[nodiscard]] DensityCurve kernel_density(const std::vector<double>& values, int grid_points = 201);

}  // namespace fseq
