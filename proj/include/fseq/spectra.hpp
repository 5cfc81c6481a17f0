#pragma once

#include "fseq/panel.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

namespace fseq {

/// Fourier frequencies theta_h = pi * h / M for h = -M..M.
class FrequencyGrid {
public:
    explicit FrequencyGrid(int half_width);

    [[nodiscard]] int half_width() const { return half_width_; }
    [[nodiscard]] std::size_t size() const { return points_.size(); }
    /// Index h in [-M, M] -> theta_h.
    [[nodiscard]] double theta(int h) const { return points_[static_cast<std::size_t>(h + half_width_)]; }
    [[nodiscard]] const std::vector<double>& points() const { return points_; }

private:
    int half_width_;
    std::vector<double> points_;
};

/// One Hermitian n x n matrix per grid frequency.
struct SpectralDensity {
    FrequencyGrid grid{1};
    std::vector<Eigen::MatrixXcd> matrices;  // indexed h + M

    [[nodiscard]] const Eigen::MatrixXcd& at(int h) const {
        return matrices[static_cast<std::size_t>(h + grid.half_width())];
    }
    [[nodiscard]] Eigen::Index n() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are sorted in
/// descending order and eigenvector j is column j of `vectors`, rotated so
/// its largest-modulus entry is real and positive.
struct EigenSystem {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
    bool near_tie = false;  // some consecutive gap < 1e-8
};

struct SymmetricEigenSystem {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // largest-modulus entry of each column positive
    bool near_tie = false;
};

[[nodiscard]] double bartlett_weight(double x);

/// floor(0.75 * sqrt(T)), at least 1. Requires T >= 4.
[[nodiscard]] int default_bandwidth(long T);

/// Lag-window estimate (2 pi)^{-1} sum_{|k|<=M} kappa(k/M) e^{-i k theta} Gamma(k)
/// with Bartlett weights on the 2M+1 point grid.
[[nodiscard]] SpectralDensity estimate_spectrum(const Panel& p, int M, unsigned threads = 1);
[[nodiscard]] SpectralDensity estimate_spectrum(const Eigen::MatrixXd& y, int M, unsigned threads = 1);

/// Cyclic Jacobi. Throws NumericalError when A is not Hermitian within 1e-8
/// (relative to max(1, max|a_ij|)) or the sweeps fail to converge.
[[nodiscard]] EigenSystem hermitian_eig(const Eigen::MatrixXcd& A);
[[nodiscard]] SymmetricEigenSystem symmetric_eig(const Eigen::MatrixXd& A);

/// Writes (theta, j, lambda_j) rows for the leading k eigenvalues at every
/// grid frequency (all of them when k <= 0).
void write_spectrum_eigen_csv(const SpectralDensity& s, const std::filesystem::path& path, int k = 0);

}  // namespace fseq
