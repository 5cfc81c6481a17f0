#include "doctest.h"

#include "fseq/error.hpp"
#include "fseq/forecast.hpp"
#include "fseq/rng.hpp"

#include <cmath>

using namespace fseq;

namespace {

Eigen::VectorXd ar1(double phi, Eigen::Index T, std::uint64_t seed) {
    RngStream rng(seed, 0, Stream::Auxiliary);
    Eigen::VectorXd y(T);
    double x = 0.0;
    for (Eigen::Index t = 0; t < 200 + T; ++t) {
        x = phi * x + rng.normal();
        if (t >= 200) y(t - 200) = x;
    }
    return y;
}

}  // namespace

TEST_CASE("ols examples") {
    RngStream rng(1, 0, Stream::Auxiliary);
    const Eigen::MatrixXd X = rng.normal_matrix(50, 2);
    const Eigen::VectorXd y = 2.0 * X.col(0) - X.col(1);
    const auto fit = fit_ols(X, y);
    CHECK(std::abs(fit.coefficients(0) - 2.0) < 1e-10);
    CHECK(std::abs(fit.coefficients(1) + 1.0) < 1e-10);

    Eigen::MatrixXd dup(50, 2);
    dup << X.col(0), X.col(0);
    CHECK_THROWS_AS((void)fit_ols(dup, y), NumericalError);
    CHECK_THROWS_AS((void)fit_ols(X.topRows(2), y.head(2)), std::invalid_argument);

    const Eigen::MatrixXd x = rng.normal_matrix(5000, 1);
    const Eigen::VectorXd noisy = 0.5 * x.col(0) + rng.normal_matrix(5000, 1).col(0);
    const auto f2 = fit_ols(x, noisy);
    CHECK(std::abs(f2.coefficients(0) - 0.5) < 0.05);
    CHECK((x.transpose() * f2.residuals).cwiseAbs().maxCoeff() < 1e-8);

    Eigen::MatrixXd wider(5000, 2);
    wider << x, rng.normal_matrix(5000, 1);
    CHECK(fit_ols(wider, noisy).residuals.squaredNorm() <= f2.residuals.squaredNorm());
}

TEST_CASE("aic lag selection") {
    int zero = 0, positive = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        if (aic_lag_select(ar1(0.0, 1000, seed), 6) == 0) ++zero;
        if (aic_lag_select(ar1(0.9, 1000, 1000 + seed), 6) >= 1) ++positive;
    }
    // AIC keeps a positive overfitting probability: an independent numpy
    // implementation selects p = 0 for about 72% of white-noise samples.
    CHECK(zero >= 60);
    CHECK(positive >= 99);
    CHECK(aic_lag_select(ar1(0.9, 100, 5), 0) == 0);
    CHECK_THROWS_AS((void)aic_lag_select(ar1(0.5, 12, 5), 6), std::invalid_argument);
}

TEST_CASE("model names and the strong/weak split") {
    CHECK(forecast_model_from_string("both") == ForecastModel::Both);
    CHECK(forecast_model_from_string("strong") == ForecastModel::StrongOnly);
    CHECK(forecast_model_from_string("sw") == ForecastModel::StockWatson);
    CHECK(to_string(ForecastModel::StockWatson) == "sw");
    CHECK_THROWS_AS((void)forecast_model_from_string("ar"), std::invalid_argument);
    CHECK(strong_count_by_ratio(Eigen::Vector3d(100, 10, 9), 2) == 1);
    CHECK(strong_count_by_ratio(Eigen::Vector3d(100, 90, 1), 2) == 2);
}

TEST_CASE("oracle factors recover the population forecast coefficients") {
    // y_{t+1} = H M x_t exactly, so the regression is noiseless.
    const auto dgp = make_paper_dgp(15);
    const auto base = simulate_ss(dgp.model, 300, kDefaultBurnIn, 3, IdioSpec{});
    SimulatedPanel sim = base;
    const Eigen::MatrixXd& x = base.state;
    Eigen::MatrixXd y(15, 300);
    y.col(0) = dgp.model.H * x.col(0);
    y.rightCols(299) = dgp.model.H * dgp.model.M * x.leftCols(299);
    sim.y = Panel(y);
    ForecastOptions opt;
    opt.factor_source = FactorSource::Oracle;
    const auto res = run_forecast_models(sim, {{ForecastModel::Both, 6}}, 298, opt);
    const Eigen::VectorXd expected = dgp.model.H * dgp.model.M * x.col(298);
    CHECK((res[0].predictions - expected).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(res[0].msfe < 1e-12);
}

TEST_CASE("forecast results: msfe definition and no leakage") {
    const auto dgp = make_paper_dgp(40);
    const auto sim = simulate_ss(dgp.model, 200, kDefaultBurnIn, 4, dgp.idio);
    const std::vector<ForecastSpec> specs{{ForecastModel::Both, 6}, {ForecastModel::StrongOnly, 6},
                                          {ForecastModel::StockWatson, 6}};
    for (auto source : {FactorSource::Estimated, FactorSource::Oracle}) {
        ForecastOptions opt;
        opt.factor_source = source;
        const auto res = run_forecast_models(sim, specs, 150, opt);
        REQUIRE(res.size() == 3);
        for (const auto& r : res) {
            CHECK(r.msfe == doctest::Approx(r.squared_errors.mean()).epsilon(1e-14));
            CHECK(r.predictions.size() == 40);
        }
        CHECK(res[2].lag_orders.size() == 40);

        SimulatedPanel tampered = sim;
        Eigen::MatrixXd y = sim.y.values();
        y.rightCols(49).setConstant(1234.5);
        tampered.y = Panel(y);
        tampered.strong_factors.rightCols(49).setConstant(-7.0);
        tampered.weak_factors.rightCols(49).setConstant(9.0);
        const auto again = run_forecast_models(tampered, specs, 150, opt);
        for (std::size_t k = 0; k < 3; ++k) CHECK(again[k].predictions == res[k].predictions);
    }
    CHECK_THROWS_AS((void)run_forecast_models(sim, specs, 199), std::invalid_argument);
    CHECK_THROWS_AS((void)run_forecast_models(sim, specs, 10), std::invalid_argument);
}

TEST_CASE("without weak dynamics the weak factor adds nothing") {
    auto model = make_paper_dgp(60).model;
    model.H.col(1).setZero();
    model.H.topRows(10).col(0).setOnes();
    model.M(0, 1) = 0.0;
    const auto idio = make_paper_dgp(60).idio;
    const int R = 100;
    Eigen::VectorXd diff(R);
    for (int r = 0; r < R; ++r) {
        const auto sim = simulate_ss(model, 240, kDefaultBurnIn, 9, idio, static_cast<std::uint64_t>(r));
        ForecastOptions opt;
        opt.strong_count = 1;
        const auto res = run_forecast_models(sim, {{ForecastModel::Both, 6}, {ForecastModel::StrongOnly, 6}}, 238, opt);
        diff(r) = res[0].msfe - res[1].msfe;
    }
    const double mean = diff.mean();
    const double se = std::sqrt((diff.array() - mean).square().sum() / (R - 1) / R);
    CHECK(std::abs(mean) < 2.0 * se + 1e-12);
}

TEST_CASE("both is no worse than strong on the two-factor design") {
    const auto dgp = make_paper_dgp(60);
    const int R = 100;
    Eigen::VectorXd diff(R);
    for (int r = 0; r < R; ++r) {
        const auto sim = simulate_ss(dgp.model, 240, kDefaultBurnIn, 10, dgp.idio, static_cast<std::uint64_t>(r));
        const auto res = run_forecast_models(sim, {{ForecastModel::Both, 6}, {ForecastModel::StrongOnly, 6}}, 238);
        diff(r) = res[0].msfe - res[1].msfe;
    }
    const double mean = diff.mean();
    const double se = std::sqrt((diff.array() - mean).square().sum() / (R - 1) / R);
    CHECK(mean <= 2.0 * se);
}
