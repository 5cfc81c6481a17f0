#include "fseq/forecast.hpp"

#include "fseq/error.hpp"
#include "fseq/lowrank.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace fseq {

std::string to_string(ForecastModel m) {
    switch (m) {
        case ForecastModel::Both: return "both";
        case ForecastModel::StrongOnly: return "strong";
        case ForecastModel::StockWatson: return "sw";
    }
    return "?";
}

ForecastModel forecast_model_from_string(const std::string& s) {
    if (s == "both") return ForecastModel::Both;
    if (s == "strong" || s == "strong_only") return ForecastModel::StrongOnly;
    if (s == "sw") return ForecastModel::StockWatson;
    throw std::invalid_argument("unknown forecast model '" + s + "' (expected both, strong, sw)");
}

OlsFit fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit_ols: X and y differ in length");
    if (!(X.rows() > X.cols())) throw std::invalid_argument("fit_ols: need more observations than regressors");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() > 0) {
        const double smax = sv(0), smin = sv(sv.size() - 1);
        if (!(smin > 0.0) || (smax / smin) * (smax / smin) >= 1e12)
            throw NumericalError("fit_ols: design matrix is rank deficient or ill-conditioned");
    }
    OlsFit fit;
    fit.coefficients = svd.solve(y);
    fit.residuals = y - X * fit.coefficients;
    return fit;
}

int aic_lag_select(const Eigen::VectorXd& y, int p_max) {
    const Eigen::Index T = y.size();
    if (p_max < 0) throw std::invalid_argument("aic_lag_select: p_max must be >= 0");
    if (!(T > p_max + 10)) throw std::invalid_argument("aic_lag_select: need T > p_max + 10");
    const Eigen::Index N = T - p_max;
    const Eigen::VectorXd target = y.tail(N);
    int best = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p <= p_max; ++p) {
        Eigen::MatrixXd X(N, p + 1);
        X.col(0).setOnes();
        for (int l = 1; l <= p; ++l) X.col(l) = y.segment(p_max - l, N);
        const double rss = fit_ols(X, target).residuals.squaredNorm();
        const double aic = static_cast<double>(N) * std::log(rss / static_cast<double>(N)) + 2.0 * (p + 1);
        if (aic < best_aic) {
            best_aic = aic;
            best = p;
        }
    }
    return best;
}

int strong_count_by_ratio(const Eigen::VectorXd& eigenvalues, int r_chi) {
    int best = 1;
    double best_ratio = -1.0;
    for (int j = 0; j < r_chi && j + 1 < eigenvalues.size(); ++j) {
        const double ratio = eigenvalues(j) / std::max(eigenvalues(j + 1), 1e-300);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = j + 1;
        }
    }
    return best;
}

std::vector<ForecastResult> run_forecast_models(const SimulatedPanel& sim, const std::vector<ForecastSpec>& specs,
                                                Eigen::Index train_end, const ForecastOptions& options) {
    const Eigen::Index n = sim.y.n(), T = sim.y.T();
    if (train_end < 0 || train_end + 1 >= T)
        throw std::invalid_argument("run_forecast_models: train_end must leave one period to forecast");
    const Eigen::Index Ttr = train_end + 1;
    if (Ttr < 20) throw std::invalid_argument("run_forecast_models: training window too short");
    const Eigen::MatrixXd y = sim.y.values().leftCols(Ttr);

    Eigen::MatrixXd strong, weak;
    if (options.factor_source == FactorSource::Oracle) {
        strong = sim.strong_factors.leftCols(Ttr);
        weak = sim.weak_factors.leftCols(Ttr);
    } else {
        if (options.r_chi < 1) throw std::invalid_argument("run_forecast_models: r_chi must be >= 1");
        const SlraFit sl = fit_slra(Panel(y), options.r_chi);
        int rs = options.strong_count >= 0 ? options.strong_count : strong_count_by_ratio(sl.eigenvalues, options.r_chi);
        rs = std::min(rs, options.r_chi);
        strong = sl.factors.topRows(rs);
        weak = sl.factors.bottomRows(options.r_chi - rs);
    }

    std::vector<ForecastResult> results;
    for (const auto& spec : specs) {
        ForecastResult res;
        res.spec = spec;
        res.predictions.resize(n);
        res.squared_errors.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::MatrixXd regs;  // k x Ttr, regressor values at each t
            switch (spec.model) {
                case ForecastModel::Both:
                    regs.resize(strong.rows() + weak.rows(), Ttr);
                    regs << strong, weak;
                    break;
                case ForecastModel::StrongOnly:
                    regs = strong;
                    break;
                case ForecastModel::StockWatson: {
                    const Eigen::VectorXd yi = y.row(i).transpose();
                    const int p = aic_lag_select(yi, spec.max_lag);
                    res.lag_orders.push_back(p);
                    regs = Eigen::MatrixXd::Zero(strong.rows() + p, Ttr);
                    regs.topRows(strong.rows()) = strong;
                    for (int l = 0; l < p; ++l)
                        regs.block(strong.rows() + l, l, 1, Ttr - l) = y.row(i).head(Ttr - l);
                    break;
                }
            }
            const int lags = spec.model == ForecastModel::StockWatson ? res.lag_orders.back() : 0;
            const Eigen::Index first = std::max(0, lags - 1);
            const Eigen::Index N = train_end - first;  // t = first .. train_end-1
            Eigen::MatrixXd X(N, regs.rows() + 1);
            X.col(0).setOnes();
            X.rightCols(regs.rows()) = regs.middleCols(first, N).transpose();
            const Eigen::VectorXd target = y.row(i).segment(first + 1, N).transpose();
            const OlsFit fit = fit_ols(X, target);
            Eigen::VectorXd x_last(regs.rows() + 1);
            x_last(0) = 1.0;
            x_last.tail(regs.rows()) = regs.col(train_end);
            res.predictions(i) = x_last.dot(fit.coefficients);
            const double err = sim.y.values()(i, train_end + 1) - res.predictions(i);
            res.squared_errors(i) = err * err;
        }
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) sum += res.squared_errors(i);
        res.msfe = sum / static_cast<double>(n);
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace fseq
