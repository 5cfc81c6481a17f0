#pragma once

#include "fseq/panel.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>

namespace fseq {

/// chi_t = H x_t,  x_{t+1} = M x_t + G eps_{t+1}.
/// The state is ordered [strong factors | weak factors | remaining states],
/// so H = [Lambda_s | Lambda_w | 0].
struct StateSpaceModel {
    Eigen::MatrixXd M;  // m x m
    Eigen::MatrixXd G;  // m x q
    Eigen::MatrixXd H;  // n x m
    int r_strong = 0;
    int r_weak = 0;

    [[nodiscard]] Eigen::Index n() const { return H.rows(); }
    [[nodiscard]] Eigen::Index m() const { return M.rows(); }
    [[nodiscard]] Eigen::Index q() const { return G.cols(); }

    /// Throws std::invalid_argument on inconsistent dimensions/partition and
    /// NumericalError when M is not stable.
    void validate() const;
};

enum class IdioKind { None, Iid, PaperFactor };

/// How the two-factor design's idiosyncratic loadings use the weights w_i:
/// Divide draws lambda_i ~ N(0,1) / w_i, Multiply draws w_i * N(0,1).
enum class WeightMode { Divide, Multiply };

/// Idiosyncratic component specification.
///  - None:        xi = 0
///  - Iid:         xi_it = sd * N(0,1)
///  - PaperFactor: xi_it = lambda_i * eps1_t + eps2_it with lambda_i drawn
///                 once per replication from the weights.
struct IdioSpec {
    IdioKind kind = IdioKind::None;
    double sd = 1.0;
    Eigen::VectorXd weights;
    WeightMode weight_mode = WeightMode::Divide;
};

struct SimulatedPanel {
    Panel y;
    Panel chi;
    Panel C;
    Panel e_chi;
    Panel xi;
    Eigen::MatrixXd strong_factors;  // r x T
    Eigen::MatrixXd weak_factors;    // r_w x T
    Eigen::MatrixXd shocks;          // q x T, shock entering at t
    Eigen::MatrixXd state;           // m x T (empty for non state-space generators)
    Eigen::VectorXd idio_loadings;   // lambda_i for PaperFactor idiosyncratics
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
};

struct PaperDgp {
    StateSpaceModel model;
    IdioSpec idio;
};

[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& M);

/// Stationary state variance: Gamma = M Gamma M' + G G'. Throws NumericalError
/// when the spectral radius of M is not below 1 - 1e-8.
[[nodiscard]] Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G);

inline constexpr int kDefaultBurnIn = 500;

[[nodiscard]] SimulatedPanel simulate_ss(const StateSpaceModel& model, Eigen::Index T, Eigen::Index burn_in,
                                         std::uint64_t seed, const IdioSpec& idio, std::uint64_t replication = 0);

/// Transition and shock loading of the two-factor simulation design.
[[nodiscard]] Eigen::Matrix2d paper_transition();
[[nodiscard]] Eigen::Vector2d paper_shock_loading();

/// Two-factor design: series 1..10 load on the weak factor, 11..n on the
/// strong factor; weights w_i = 1 + i/20.
[[nodiscard]] PaperDgp make_paper_dgp(Eigen::Index n, WeightMode mode = WeightMode::Divide);

/// chi_it = u_{t-i+1}, optional i.i.d. N(0, noise_sd^2) idiosyncratic noise.
[[nodiscard]] SimulatedPanel gen_example_shift(Eigen::Index n, Eigen::Index T, std::uint64_t seed,
                                               double noise_sd = 0.0, std::uint64_t replication = 0);

/// chi_1t = u_t, chi_it = u_{t-1} for i > 1. No idiosyncratic part.
[[nodiscard]] SimulatedPanel gen_example_one_weak(Eigen::Index n, Eigen::Index T, std::uint64_t seed,
                                                  std::uint64_t replication = 0);

/// y_it = u_t + e_it with e_it a random walk started at 0 with N(0, sigma^2)
/// increments. Ground truth C = u, xi = e.
[[nodiscard]] SimulatedPanel gen_random_walk_idio(Eigen::Index n, Eigen::Index T, std::uint64_t seed,
                                                  double sigma = 1.0, std::uint64_t replication = 0);

struct PbhResult {
    bool observable = true;
    std::optional<std::complex<double>> witness;  // offending eigenvalue of M
};

/// Popov-Belevitch-Hautus test: (H_sel, M) is observable iff
/// rank [M - lambda I; H_sel] = m at every eigenvalue lambda of M.
[[nodiscard]] PbhResult pbh_observable(const Eigen::MatrixXd& H_sel, const Eigen::MatrixXd& M, double tol = 1e-8);

struct MiniphaseResult {
    bool miniphase = true;
    std::complex<double> worst_z{0.0, 0.0};
    double min_sigma = 0.0;
    /// radius_steps x angle_steps smallest singular values on the polar grid.
    Eigen::MatrixXd sigma_map;
    Eigen::VectorXd radii;
    Eigen::VectorXd angles;
};

struct MiniphaseOptions {
    int radius_steps = 64;
    int angle_steps = 128;
    double max_radius = 1.0 - 1e-3;
    double threshold = 1e-6;
};

/// Smallest singular value of [[I - M z, -G], [H_sel, 0]] over the disc
/// |z| <= max_radius; the grid minimum is refined locally before comparing
/// against the threshold.
[[nodiscard]] MiniphaseResult miniphase_check(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G,
                                              const Eigen::MatrixXd& H_sel, const MiniphaseOptions& opts = {});

[[nodiscard]] double system_matrix_sigma_min(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G,
                                             const Eigen::MatrixXd& H_sel, std::complex<double> z);

/// Plain-text model file: dims, partition and row-major matrices.
void save_model(const StateSpaceModel& model, const std::filesystem::path& path);
[[nodiscard]] StateSpaceModel load_model(const std::filesystem::path& path);

/// y, chi, C, e_chi, xi, factors and shocks as CSV files in `dir`.
void write_simulated_panel(const SimulatedPanel& sim, const std::filesystem::path& dir);

}  // namespace fseq
