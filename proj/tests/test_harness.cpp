#include "doctest.h"

#include "fseq/error.hpp"
#include "fseq/harness.hpp"
#include "fseq/lowrank.hpp"
#include "fseq/rng.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

using namespace fseq;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.n_grid = {20};
    cfg.T_grid = {120};
    cfg.replications = 3;
    return cfg;
}

int count_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("amse") {
    RngStream rng(1, 0, Stream::Auxiliary);
    const Eigen::MatrixXd chi = rng.normal_matrix(5, 20000);
    CHECK(amse(chi, chi, {0, 1, 2}, 0, 20000) == 0.0);
    CHECK(amse(chi, Eigen::MatrixXd::Zero(5, 20000), {0, 1, 2, 3, 4}, 0, 20000) == doctest::Approx(1.0).epsilon(0.02));
    Eigen::MatrixXd est = chi;
    est.row(1).array() += 2.0;
    CHECK(amse(chi, est, {0, 1}, 10, 20) == doctest::Approx(2.0));
    CHECK_THROWS_AS((void)amse(chi, chi, {}, 0, 10), std::invalid_argument);
    CHECK_THROWS_AS((void)amse(chi, chi, {0}, 5, 5), std::invalid_argument);
    CHECK_THROWS_AS((void)amse(chi, chi, {7}, 0, 10), std::invalid_argument);
    CHECK_THROWS_AS((void)amse(chi, chi.leftCols(10), {0}, 0, 10), std::invalid_argument);
}

TEST_CASE("index sets") {
    CHECK(index_set("weak", 30).size() == 10);
    CHECK(index_set("strong", 30).front() == 10);
    CHECK(index_set("strong", 30).size() == 20);
    CHECK(index_set("all", 30).size() == 30);
    CHECK_THROWS_AS((void)index_set("middle", 30), std::invalid_argument);
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config(
        "# desk run\n"
        "n_grid = 30, 120\n"
        "T_grid = 240\n"
        "replications = 7   # fewer\n"
        "methods = dlra, slra1\n"
        "base_seed = 99\n"
        "M = 9\n"
        "idio_weight_mode = multiply\n"
        "standardize_dlra = false\n"
        "factors = oracle\n");
    CHECK(cfg.n_grid == std::vector<Eigen::Index>{30, 120});
    CHECK(cfg.T_grid == std::vector<Eigen::Index>{240});
    CHECK(cfg.replications == 7);
    CHECK(cfg.methods == std::vector<std::string>{"dlra", "slra1"});
    CHECK(cfg.base_seed == 99);
    CHECK(cfg.bandwidth == 9);
    CHECK(cfg.weight_mode == WeightMode::Multiply);
    CHECK_FALSE(cfg.standardize_dlra);
    CHECK(cfg.factor_source == FactorSource::Oracle);
    CHECK_THROWS_AS((void)parse_config("colour = blue\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_config("replications = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_config("replications = many\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_config("n_grid =\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_config("just words\n"), std::invalid_argument);
    CHECK_THROWS_AS((void)load_config("/nonexistent/fseq.cfg"), DataError);
}

TEST_CASE("amse experiment: shape, keys and consistency") {
    auto cfg = small_config();
    cfg.replications = 1;
    const auto one = run_amse_experiment(cfg);
    CHECK(one.cells.size() == 9);
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& c : one.cells) {
        keys.insert({c.method, c.index_set});
        CHECK(c.std == 0.0);
        CHECK(c.n == 20);
        CHECK(c.T == 120);
        CHECK(c.replications == 1);
    }
    CHECK(keys.size() == 9);
    CHECK_NOTHROW(verify_report(one));

    cfg.replications = 3;
    cfg.n_grid = {15, 20};
    const auto rep = run_amse_experiment(cfg);
    CHECK(rep.cells.size() == 18);
    CHECK(rep.log.size() == 54);
    for (const auto& c : rep.cells) CHECK(c.std >= 0.0);
    const auto& c = rep.cell("slra1", "strong", 20, 120);
    double sum = 0.0;
    for (const auto& row : rep.log)
        if (row.method == "slra1" && row.index_set == "strong" && row.n == 20) sum += row.value;
    CHECK(c.mean == doctest::Approx(sum / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)rep.cell("slra1", "strong", 99, 120), std::out_of_range);

    ExperimentReport broken = rep;
    broken.cells[0].mean += 1e-3;
    CHECK_THROWS_AS(verify_report(broken), NumericalError);
    const auto path = std::filesystem::temp_directory_path() / "fseq_broken.csv";
    CHECK_THROWS_AS(write_report_csv(broken, path), NumericalError);

    cfg.methods = {"dlra", "pca"};
    CHECK_THROWS_AS((void)run_amse_experiment(cfg), std::invalid_argument);
}

TEST_CASE("experiments are identical for any thread count") {
    auto cfg = small_config();
    cfg.replications = 4;
    cfg.threads = 1;
    const auto a = run_amse_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_amse_experiment(cfg);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
        CHECK(a.cells[k].mean == b.cells[k].mean);
        CHECK(a.cells[k].std == b.cells[k].std);
    }
    cfg.threads = 1;
    const auto fa = run_forecast_experiment(cfg);
    cfg.threads = 4;
    const auto fb = run_forecast_experiment(cfg);
    for (std::size_t k = 0; k < fa.cells.size(); ++k) CHECK(fa.cells[k].mean == fb.cells[k].mean);

    cfg.base_seed += 1;
    const auto other = run_amse_experiment(cfg);
    CHECK(other.cells[0].mean != a.cells[0].mean);
}

TEST_CASE("forecast experiment shape") {
    auto cfg = small_config();
    const auto rep = run_forecast_experiment(cfg);
    CHECK(rep.cells.size() == 3);
    for (const auto& c : rep.cells) {
        CHECK(c.index_set == "all");
        CHECK(c.mean > 0.0);
    }
    CHECK_NOTHROW((void)rep.cell("sw", "all", 20, 120));
}

TEST_CASE("report writers") {
    auto cfg = small_config();
    cfg.replications = 2;
    const auto rep = run_amse_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "fseq_reports";
    std::filesystem::remove_all(dir);
    write_report_csv(rep, dir / "r.csv");
    write_report_log_csv(rep, dir / "r_log.csv");
    write_report_markdown(rep, dir / "r.md");
    CHECK(count_lines(dir / "r.csv") == 1 + 9);
    CHECK(count_lines(dir / "r_log.csv") == 1 + 18);
    std::ifstream md(dir / "r.md");
    std::stringstream ss;
    ss << md.rdbuf();
    CHECK(ss.str().find("| dlra | weak | 20 | 120 |") != std::string::npos);
}

TEST_CASE("quantile table") {
    const auto q = quantile_table({4, 1, 3, 2}, {0.5, 1.0, 0.0, 0.25});
    CHECK(q[0].second == doctest::Approx(2.5));
    CHECK(q[1].second == 4.0);
    CHECK(q[2].second == 1.0);
    CHECK(q[3].second == doctest::Approx(1.75));
    CHECK_THROWS_AS((void)quantile_table({}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS((void)quantile_table({1.0}, {1.5}), std::invalid_argument);
}

TEST_CASE("kernel density") {
    RngStream rng(2, 0, Stream::Auxiliary);
    const Eigen::MatrixXd draws = rng.normal_matrix(2000, 1);
    const std::vector<double> v(draws.data(), draws.data() + 2000);
    const auto curve = kernel_density(v, 401);
    CHECK(curve.grid.size() == 401);
    const double h = curve.grid[1] - curve.grid[0];
    double mass = 0.0;
    for (double d : curve.density) mass += d * h;
    CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
    CHECK(curve.bandwidth == doctest::Approx(0.9 * std::pow(2000.0, -0.2)).epsilon(0.1));
    std::size_t centre = 0;
    for (std::size_t k = 0; k < curve.grid.size(); ++k)
        if (std::abs(curve.grid[k]) < std::abs(curve.grid[centre])) centre = k;
    CHECK(curve.density[centre] == doctest::Approx(1.0 / std::sqrt(2.0 * 3.141592653589793)).epsilon(0.1));
    CHECK_THROWS_AS((void)kernel_density({1.0}), std::invalid_argument);
}

TEST_CASE("lagged correlations: independence oracle") {
    const Eigen::Index T = 1000;
    const auto sim = gen_example_shift(40, T, 3, 1.0);
    RngStream rng(4, 0, Stream::Auxiliary);
    const Eigen::MatrixXd factors = rng.normal_matrix(3, T);
    const auto table = lagged_corr_diagnostic(factors, sim.xi, {1, 2, 3});
    CHECK(table.rows.size() == 3 * 40 * 3);
    CHECK(table.critical_value == doctest::Approx(1.96 / std::sqrt(1000.0)));
    int inside = 0;
    for (const auto& r : table.rows)
        if (std::abs(r.corr) < table.critical_value) ++inside;
    CHECK(static_cast<double>(inside) / static_cast<double>(table.rows.size()) >= 0.93);
    CHECK(table.rows.front().factor == 1);
    CHECK(table.rows.front().series == 1);
    CHECK(table.rows.front().lag == 1);
    CHECK_THROWS_AS((void)lagged_corr_diagnostic(factors, sim.xi, {static_cast<int>(T)}), std::invalid_argument);
    CHECK_THROWS_AS((void)lagged_corr_diagnostic(factors, sim.xi, {0}), std::invalid_argument);
}

TEST_CASE("lagged correlations reveal the weak factor in the static residual") {
    const auto dgp = make_paper_dgp(60);
    const auto sim = simulate_ss(dgp.model, 960, kDefaultBurnIn, 5, dgp.idio);
    const auto fit = fit_slra(sim.y, 1);
    const auto table = lagged_corr_diagnostic(fit.factors, fit.idio, {1});
    double mean = 0.0;
    for (const auto& r : table.rows)
        if (r.series <= 10) mean += std::abs(r.corr) / 10.0;
    CHECK(mean > table.critical_value);
}
