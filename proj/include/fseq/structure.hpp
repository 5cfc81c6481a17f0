#pragma once

#include "fseq/lowrank.hpp"
#include "fseq/panel.hpp"
#include "fseq/statespace.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <limits>
#include <vector>

namespace fseq {

/// y = C + e_chi + xi on the evaluation window, with C the static rank-r fit,
/// chi the dynamic rank-q fit and e_chi = chi - C.
struct ThreeWayDecomposition {
    Panel y;  // input restricted to the window
    Panel C;
    Panel e_chi;
    Panel xi;
    Eigen::MatrixXd strong_factors;  // r x |window|
    Eigen::MatrixXd weak_factors;    // extracted from chi_hat
    std::vector<Eigen::Index> weak_pivots;
    /// n x 3 sample-variance shares of (C, e_chi, xi) relative to y.
    Eigen::MatrixXd variance_shares;
    Eigen::Index window_begin = 0;
    Eigen::Index window_end = 0;
};

[[nodiscard]] ThreeWayDecomposition three_way_decompose(const Panel& p, int r, int q, int M, unsigned threads = 1);

struct WeakFactors {
    Eigen::MatrixXd factors;            // r_w x T, unit sample variance
    std::vector<Eigen::Index> pivots;   // 0-based series indices, increasing
};

/// Sentinel for "use the default tolerance 0.01 * mean series variance".
inline constexpr double kDefaultWeakTol = -1.0;

/// Gram-Schmidt in cross-sectional order: a series contributes a new weak
/// factor when its residual on span(strong, accepted weak) has sample
/// variance above `tol`. Throws NumericalError if the strong factors are
/// rank deficient.
[[nodiscard]] WeakFactors extract_weak_factors(const Eigen::MatrixXd& chi, const Eigen::MatrixXd& strong,
                                               double tol = kDefaultWeakTol);

struct InnovationEstimate {
    /// q_hat x (T - order): orthonormalized VAR residuals; column j belongs
    /// to time index order + j.
    Eigen::MatrixXd innovations;
    int order = 0;
    int rank = 0;
    /// Residual covariance eigenvalues, descending.
    Eigen::VectorXd residual_eigenvalues;
    /// The fitted VAR is stable, so the residuals are the innovations of a
    /// causal autoregressive representation of the factors.
    bool left_invertible = false;
};

/// VAR(p) least squares on demeaned factors with p <= p_max chosen by AIC.
[[nodiscard]] InnovationEstimate innovations_from_factors(const Eigen::MatrixXd& factors, int p_max);

/// Oracle-mode recovery of the common innovations: rows are split into
/// consecutive q x q blocks (after an optional permutation), each block's
/// transfer function H_b (I - M L)^{-1} G is inverted as a one-sided filter
/// truncated at `block_truncation` lags, and the block outputs are averaged.
/// Throws NumericalError naming the first block that is not strictly
/// miniphase on the closed unit disc.
[[nodiscard]] Eigen::MatrixXd recover_innovations_blockwise(const StateSpaceModel& model, const Panel& p,
                                                            int block_truncation = 200,
                                                            const std::vector<Eigen::Index>& permutation = {});

/// C, e_chi, xi, y and the factors as CSV plus a weak-pivot manifest.
void write_decomposition(const ThreeWayDecomposition& d, const std::filesystem::path& dir);

}  // namespace fseq
