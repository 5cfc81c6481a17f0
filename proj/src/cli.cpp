#include "fseq/cli.hpp"
#include "fseq/error.hpp"
#include "fseq/harness.hpp"
#include "fseq/lowrank.hpp"
#include "fseq/spectra.hpp"
#include "fseq/statespace.hpp"
#include "fseq/structure.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fseq {

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string config;
    std::string out = ".";
};

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot write " + path.string());
    f << std::setprecision(10);
    return f;
}

void run_simulate(const Globals& g, const std::string& model_path, Eigen::Index n, Eigen::Index T, int burn_in,
                  const std::string& idio, double idio_sd, const std::string& weight_mode) {
    const WeightMode mode = weight_mode == "multiply" ? WeightMode::Multiply : WeightMode::Divide;
    StateSpaceModel model;
    IdioSpec spec;
    if (model_path.empty()) {
        const PaperDgp dgp = make_paper_dgp(n, mode);
        model = dgp.model;
        spec = dgp.idio;
    } else {
        model = load_model(model_path);
        if (idio == "paper") spec = make_paper_dgp(model.n(), mode).idio;
    }
    if (idio == "none") spec = IdioSpec{};
    if (idio == "iid") spec = IdioSpec{IdioKind::Iid, idio_sd, {}, mode};
    const auto sim = simulate_ss(model, T, burn_in, g.seed.value_or(1), spec);
    write_simulated_panel(sim, g.out);
    save_model(model, std::filesystem::path(g.out) / "model.txt");
    std::cout << "simulated n=" << model.n() << " T=" << T << " into " << g.out << "\n";
}

void run_decompose(const Globals& g, const std::string& panel_path, bool tcodes, int r, int q, int M, bool std_in) {
    Panel p = load_panel_csv(panel_path, tcodes);
    if (std_in) p = standardize(p);
    if (M <= 0) M = default_bandwidth(p.T());
    const auto d = three_way_decompose(p, r, q, M, g.threads);
    write_decomposition(d, g.out);
    std::cout << "decomposed n=" << p.n() << " window [" << d.window_begin << ", " << d.window_end << ") into "
              << g.out << "\n";
}

ExperimentConfig experiment_config(const Globals& g) {
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed) cfg.base_seed = *g.seed;
    cfg.threads = g.threads;
    cfg.validate();
    return cfg;
}

void write_reports(const ExperimentReport& report, const std::string& stem, const Globals& g) {
    const std::filesystem::path out(g.out);
    std::filesystem::create_directories(out);
    write_report_csv(report, out / (stem + ".csv"));
    write_report_log_csv(report, out / (stem + "_log.csv"));
    write_report_markdown(report, out / (stem + ".md"));
    std::cout << report.cells.size() << " cells in " << std::fixed << std::setprecision(1) << report.runtime_seconds
              << " s, written to " << (out / (stem + ".csv")).string() << "\n";
}

void run_diagnose(const Globals& g, const std::string& panel_path, bool tcodes, int r, std::vector<int> lags) {
    const Panel p = standardize(load_panel_csv(panel_path, tcodes));
    const auto fit = fit_slra(p, r);
    const auto table = lagged_corr_diagnostic(fit.factors, fit.idio, lags);
    const std::filesystem::path out(g.out);
    std::filesystem::create_directories(out);

    auto corr = open_csv(out / "lagged_corr.csv");
    corr << "factor,series,lag,corr\n";
    std::vector<double> moduli;
    for (const auto& row : table.rows) {
        corr << row.factor << ',' << p.labels()[static_cast<std::size_t>(row.series - 1)] << ',' << row.lag << ','
             << row.corr << '\n';
        moduli.push_back(std::abs(row.corr));
    }

    auto quant = open_csv(out / "quantiles.csv");
    quant << "prob,abs_corr\n";
    double median = 0.0;
    for (const auto& [prob, value] : quantile_table(moduli, {0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 1.0})) {
        quant << prob << ',' << value << '\n';
        if (prob == 0.5) median = value;
    }
    quant << "critical_value," << table.critical_value << '\n';

    auto dens = open_csv(out / "density.csv");
    const auto curve = kernel_density(moduli);
    dens << "abs_corr,density\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k) dens << curve.grid[k] << ',' << curve.density[k] << '\n';

    std::cout << "median |corr| = " << median << " (critical value " << table.critical_value << ", "
              << moduli.size() << " correlations)\n";
}

void run_ingest(const Globals& g, const std::string& raw_path, const std::string& out_name) {
    const Panel raw = load_panel_csv(raw_path, true);
    const Panel panel = apply_tcodes(raw);
    const std::filesystem::path out(g.out);
    std::filesystem::create_directories(out);
    write_panel_csv(panel, out / out_name);
    std::cout << "ingested n=" << panel.n() << " T=" << panel.T() << " into " << (out / out_name).string() << "\n";
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"fseq: static and dynamic low-rank approximation of factor panels"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Random seed (simulate) or base seed (mc-*)");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--config", g.config, "Experiment config file (mc-*)");
    app.add_option("--out", g.out, "Output directory");

    auto* sim = app.add_subcommand("simulate", "Simulate a state-space factor panel");
    std::string model_path, idio = "paper", weight_mode = "divide";
    Eigen::Index sim_n = 120, sim_T = 240;
    int burn_in = kDefaultBurnIn;
    double idio_sd = 1.0;
    sim->add_option("--model", model_path, "Model file (default: the two-factor design)");
    sim->add_option("--n", sim_n, "Cross-section size for the built-in design");
    sim->add_option("--T", sim_T, "Sample length");
    sim->add_option("--burn-in", burn_in, "Discarded initial periods");
    sim->add_option("--idio", idio, "Idiosyncratic part")->check(CLI::IsMember({"paper", "iid", "none"}));
    sim->add_option("--idio-sd", idio_sd, "Standard deviation for --idio iid");
    sim->add_option("--weight-mode", weight_mode, "Idiosyncratic loading weights")
        ->check(CLI::IsMember({"divide", "multiply"}));

    auto* dec = app.add_subcommand("decompose", "Three-way decomposition y = C + e_chi + xi");
    std::string panel_path;
    bool tcode_row = false, std_in = false;
    int r = 1, q = 1, M = 0;
    dec->add_option("--panel", panel_path, "Panel CSV (series as columns)")->required();
    dec->add_flag("--tcode-row", tcode_row, "Input has a transform-code row");
    dec->add_flag("--standardize", std_in, "Standardize before fitting");
    dec->add_option("--r", r, "Static rank");
    dec->add_option("--q", q, "Dynamic rank");
    dec->add_option("--M", M, "Lag-window bandwidth (default floor(0.75 sqrt(T)))");

    auto* amse_cmd = app.add_subcommand("mc-amse", "Monte-Carlo AMSE experiment");
    auto* fc_cmd = app.add_subcommand("mc-forecast", "Monte-Carlo forecasting experiment");

    auto* diag = app.add_subcommand("diagnose", "Lagged factor/idiosyncratic correlations");
    int diag_r = 8;
    std::vector<int> lags{1, 2, 3};
    diag->add_option("--panel", panel_path, "Analysis panel CSV")->required();
    diag->add_flag("--tcode-row", tcode_row, "Input has a transform-code row");
    diag->add_option("--r", diag_r, "Number of static factors");
    diag->add_option("--lags", lags, "Lags h >= 1")->delimiter(',');

    auto* ing = app.add_subcommand("ingest", "Apply transform codes to a raw panel");
    std::string raw_path, out_name = "panel.csv";
    ing->add_option("--raw", raw_path, "Raw CSV with a transform-code row")->required();
    ing->add_option("--name", out_name, "Output file name inside --out");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*sim) run_simulate(g, model_path, sim_n, sim_T, burn_in, idio, idio_sd, weight_mode);
        else if (*dec) run_decompose(g, panel_path, tcode_row, r, q, M, std_in);
        else if (*amse_cmd) write_reports(run_amse_experiment(experiment_config(g)), "amse_report", g);
        else if (*fc_cmd) write_reports(run_forecast_experiment(experiment_config(g)), "forecast_report", g);
        else if (*diag) run_diagnose(g, panel_path, tcode_row, diag_r, lags);
        else if (*ing) run_ingest(g, raw_path, out_name);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace fseq
