#pragma once

#include "fseq/panel.hpp"
#include "fseq/spectra.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace fseq {

/// Static rank-r approximation: projection of y_t on the leading r
/// eigenvectors of the sample covariance Gamma(0).
struct SlraFit {
    Panel common;                // C_hat
    Panel idio;                  // e_hat = y - C_hat
    Eigen::MatrixXd factors;     // r x T, (1/T) F F' = I_r
    Eigen::MatrixXd loadings;    // n x r, C_hat = loadings * factors
    Eigen::MatrixXd projector;   // n x n, K_nr = P' P
    Eigen::VectorXd eigenvalues; // leading min(r+1, n) eigenvalues of Gamma(0)
    bool near_tie = false;
};

enum class EdgePolicy { TruncateWindow, DropEdges };

/// Dynamic rank-q approximation through frequency-wise projection on the
/// leading q eigenvectors of the lag-window spectrum.
struct DlraFit {
    int q = 0;
    int M = 0;
    EdgePolicy edge_policy = EdgePolicy::DropEdges;
    /// n x T. With DropEdges the columns outside [window_begin, window_end)
    /// are NaN.
    Eigen::MatrixXd common;
    Eigen::MatrixXd idio;
    Eigen::Index window_begin = 0;
    Eigen::Index window_end = 0;
    /// Real filter coefficients K(k), stored at index k + M.
    std::vector<Eigen::MatrixXd> filter;
    /// Frequency projectors P*P at each grid point, index h + M.
    std::vector<Eigen::MatrixXcd> projectors;
    /// (2M+1) x min(q+1, n) leading spectral eigenvalues per grid point.
    Eigen::MatrixXd spectral_eigenvalues;
    bool near_tie = false;

    [[nodiscard]] const Eigen::MatrixXd& coefficient(int k) const {
        return filter[static_cast<std::size_t>(k + M)];
    }
    /// Common component restricted to the evaluation window.
    [[nodiscard]] Panel interior_common(const Panel& source) const;
    [[nodiscard]] Panel interior_idio(const Panel& source) const;
};

[[nodiscard]] SlraFit fit_slra(const Panel& p, int r);

[[nodiscard]] DlraFit fit_dlra(const Panel& p, int q, int M, EdgePolicy edge_policy = EdgePolicy::DropEdges,
                               unsigned threads = 1);

struct StaticProfileRow {
    Eigen::Index n;
    int j;  // 1-based eigenvalue rank
    double lambda;
};

struct SpectralProfileRow {
    Eigen::Index n;
    double theta;
    int j;
    double lambda;
};

/// Leading k eigenvalues of the leading principal n x n submatrices of the
/// given covariance, for every n in the (strictly increasing) grid.
[[nodiscard]] std::vector<StaticProfileRow> static_eigen_profile(const Eigen::MatrixXd& cov, int k,
                                                                 const std::vector<Eigen::Index>& n_grid);
[[nodiscard]] std::vector<StaticProfileRow> static_eigen_profile(const Panel& p, int k,
                                                                 const std::vector<Eigen::Index>& n_grid);
[[nodiscard]] std::vector<SpectralProfileRow> spectral_eigen_profile(const SpectralDensity& s, int k,
                                                                     const std::vector<Eigen::Index>& n_grid);

/// (k, i, j, value) rows, indices 1-based.
void write_filter_csv(const DlraFit& fit, const std::filesystem::path& path);

}  // namespace fseq
