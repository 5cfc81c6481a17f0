#pragma once

#include "fseq/statespace.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fseq {

enum class ForecastModel { Both, StrongOnly, StockWatson };

[[nodiscard]] std::string to_string(ForecastModel m);
[[nodiscard]] ForecastModel forecast_model_from_string(const std::string& s);

struct ForecastSpec {
    ForecastModel model = ForecastModel::Both;
    int max_lag = 6;  // AIC search bound for the own lags of StockWatson
};

struct ForecastResult {
    ForecastSpec spec;
    Eigen::VectorXd predictions;    // one-step forecasts for period train_end + 1
    Eigen::VectorXd squared_errors;
    std::vector<int> lag_orders;    // StockWatson only
    double msfe = 0.0;
};

struct OlsFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
};

/// Least squares of y on the columns of X. Throws NumericalError when the
/// condition number of X'X reaches 1e12 (including exact rank deficiency).
[[nodiscard]] OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// AR order in 0..p_max minimizing N log(RSS/N) + 2(p+1) for a regression
/// with intercept on a common sample of N = T - p_max observations.
[[nodiscard]] int aic_lag_select(const Eigen::VectorXd& y, int p_max);

enum class FactorSource { Estimated, Oracle };

struct ForecastOptions {
    FactorSource factor_source = FactorSource::Estimated;
    int r_chi = 2;          // static factors estimated before the split
    int strong_count = -1;  // < 0: eigenvalue-ratio rule
};

/// Number of strong factors among the leading r_chi: argmax_j lambda_j / lambda_{j+1}.
[[nodiscard]] int strong_count_by_ratio(const Eigen::VectorXd& eigenvalues, int r_chi);

/// Fits each spec on t <= train_end only and forecasts period train_end + 1.
[[nodiscard]] std::vector<ForecastResult> run_forecast_models(const SimulatedPanel& sim,
                                                              const std::vector<ForecastSpec>& specs,
                                                              Eigen::Index train_end,
                                                              const ForecastOptions& options = {});

}  // namespace fseq
