#include "fseq/lowrank.hpp"

#include "fseq/error.hpp"
#include "fseq/parallel.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>

namespace fseq {

namespace {

Panel window_panel(const Eigen::MatrixXd& values, Eigen::Index begin, Eigen::Index end, const Panel& source) {
    Panel out(values.middleCols(begin, end - begin), source.labels(), source.t0() + begin);
    if (!source.time_labels().empty()) {
        std::vector<std::string> times(source.time_labels().begin() + begin, source.time_labels().begin() + end);
        out = out.with_time_labels(std::move(times));
    }
    return out;
}

void validate_grid(const std::vector<Eigen::Index>& n_grid, Eigen::Index n_max) {
    if (n_grid.empty()) throw std::invalid_argument("eigen profile: n grid is empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1 || n_grid[i] > n_max)
            throw std::invalid_argument("eigen profile: grid value " + std::to_string(n_grid[i]) +
                                        " outside 1.." + std::to_string(n_max));
        if (i > 0 && n_grid[i] <= n_grid[i - 1])
            throw std::invalid_argument("eigen profile: grid must be strictly increasing");
    }
}

}  // namespace

Panel DlraFit::interior_common(const Panel& source) const {
    return window_panel(common, window_begin, window_end, source);
}

Panel DlraFit::interior_idio(const Panel& source) const {
    return window_panel(idio, window_begin, window_end, source);
}

SlraFit fit_slra(const Panel& p, int r) {
    const Eigen::Index n = p.n();
    const Eigen::Index T = p.T();
    if (r < 0 || r > std::min(n, T)) throw std::invalid_argument("fit_slra: r must be in 0..min(n, T)");
    const Eigen::MatrixXd& y = p.values();
    const auto es = symmetric_eig(sample_autocov(y, 0));

    SlraFit fit{p.with_values(Eigen::MatrixXd::Zero(n, T)), p, Eigen::MatrixXd(r, T), Eigen::MatrixXd(n, r),
                Eigen::MatrixXd::Zero(n, n), es.values.head(std::min<Eigen::Index>(r + 1, n)), false};
    if (r == 0) return fit;

    for (int j = 0; j + 1 < r + 1 && j + 1 < n; ++j)
        if (es.values(j) - es.values(j + 1) < 1e-8) fit.near_tie = true;
    if (!(es.values(r - 1) > 0.0))
        throw NumericalError("fit_slra: eigenvalue " + std::to_string(r) + " of Gamma(0) is not positive");

    const Eigen::MatrixXd P = es.vectors.leftCols(r);  // n x r
    const Eigen::VectorXd sd = es.values.head(r).cwiseSqrt();
    fit.projector = P * P.transpose();
    Eigen::MatrixXd scores = P.transpose() * y;  // r x T
    fit.factors = sd.cwiseInverse().asDiagonal() * scores;
    fit.loadings = P * sd.asDiagonal();
    Eigen::MatrixXd common = P * scores;
    fit.idio = p.with_values(y - common);
    fit.common = p.with_values(std::move(common));
    return fit;
}

DlraFit fit_dlra(const Panel& p, int q, int M, EdgePolicy edge_policy, unsigned threads) {
    const Eigen::Index n = p.n();
    const Eigen::Index T = p.T();
    if (q < 0 || q > n) throw std::invalid_argument("fit_dlra: q must be in 0..n");
    if (M < 1) throw std::invalid_argument("fit_dlra: M must be >= 1");
    if (2 * static_cast<Eigen::Index>(M) + 1 > T) throw std::invalid_argument("fit_dlra: window 2M+1 exceeds T");

    const Eigen::MatrixXd& y = p.values();
    const SpectralDensity s = estimate_spectrum(y, M, threads);
    const int H = 2 * M + 1;
    const Eigen::Index keep = std::min<Eigen::Index>(q + 1, n);

    DlraFit fit;
    fit.q = q;
    fit.M = M;
    fit.edge_policy = edge_policy;
    fit.projectors.resize(static_cast<std::size_t>(H));
    fit.spectral_eigenvalues.resize(H, keep);

    std::vector<char> ties(static_cast<std::size_t>(M + 1), 0);
    parallel_for(static_cast<std::size_t>(M + 1), threads, [&](std::size_t hi) {
        const int h = static_cast<int>(hi);
        const auto es = hermitian_eig(s.at(h));
        const Eigen::MatrixXcd V = es.vectors.leftCols(q);
        fit.projectors[static_cast<std::size_t>(h + M)] = V * V.adjoint();
        fit.spectral_eigenvalues.row(h + M) = es.values.head(keep).transpose();
        fit.spectral_eigenvalues.row(M - h) = es.values.head(keep).transpose();
        if (q > 0 && q < n && es.values(q - 1) - es.values(q) < 1e-8) ties[hi] = 1;
    });
    for (int h = 1; h <= M; ++h)
        fit.projectors[static_cast<std::size_t>(M - h)] = fit.projectors[static_cast<std::size_t>(M + h)].conjugate();
    for (char t : ties) fit.near_tie = fit.near_tie || t;

    fit.filter.resize(static_cast<std::size_t>(H));
    for (int k = -M; k <= M; ++k) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(n, n);
        for (int h = -M; h <= M; ++h)
            acc += std::polar(1.0, static_cast<double>(k) * s.grid.theta(h)) *
                   fit.projectors[static_cast<std::size_t>(h + M)];
        acc /= static_cast<double>(H);
        const double scale = std::max(1.0, acc.cwiseAbs().maxCoeff());
        if (acc.imag().cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw NumericalError("fit_dlra: filter coefficients are not real");
        fit.filter[static_cast<std::size_t>(k + M)] = acc.real();
    }

    fit.common = Eigen::MatrixXd::Zero(n, T);
    fit.window_begin = M;
    fit.window_end = T - M;
    const Eigen::Index W = T - 2 * M;
    for (int k = -M; k <= M; ++k)
        fit.common.middleCols(M, W).noalias() += fit.coefficient(k) * y.middleCols(M - k, W);

    if (edge_policy == EdgePolicy::DropEdges) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        fit.common.leftCols(M).setConstant(nan);
        fit.common.rightCols(M).setConstant(nan);
    } else {
        // Edge columns use the available lags, rescaled by the share of
        // filter mass that was available.
        double total = 0.0;
        std::vector<double> mass(static_cast<std::size_t>(H));
        for (int k = -M; k <= M; ++k) {
            mass[static_cast<std::size_t>(k + M)] = fit.coefficient(k).norm();
            total += mass[static_cast<std::size_t>(k + M)];
        }
        auto edge = [&](Eigen::Index t) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
            double avail = 0.0;
            for (int k = -M; k <= M; ++k) {
                const Eigen::Index src = t - k;
                if (src < 0 || src >= T) continue;
                acc.noalias() += fit.coefficient(k) * y.col(src);
                avail += mass[static_cast<std::size_t>(k + M)];
            }
            fit.common.col(t) = avail > 0.0 ? Eigen::VectorXd(acc * (total / avail)) : acc;
        };
        for (Eigen::Index t = 0; t < M; ++t) edge(t);
        for (Eigen::Index t = T - M; t < T; ++t) edge(t);
        fit.window_begin = 0;
        fit.window_end = T;
    }
    fit.idio = y - fit.common;
    return fit;
}

std::vector<StaticProfileRow> static_eigen_profile(const Eigen::MatrixXd& cov, int k,
                                                   const std::vector<Eigen::Index>& n_grid) {
    if (k < 1) throw std::invalid_argument("eigen profile: k must be >= 1");
    validate_grid(n_grid, cov.rows());
    std::vector<StaticProfileRow> rows;
    for (Eigen::Index m : n_grid) {
        const auto es = symmetric_eig(cov.topLeftCorner(m, m));
        for (int j = 0; j < k && j < m; ++j) rows.push_back({m, j + 1, es.values(j)});
    }
    return rows;
}

std::vector<StaticProfileRow> static_eigen_profile(const Panel& p, int k, const std::vector<Eigen::Index>& n_grid) {
    return static_eigen_profile(sample_autocov(p.values(), 0), k, n_grid);
}

std::vector<SpectralProfileRow> spectral_eigen_profile(const SpectralDensity& s, int k,
                                                       const std::vector<Eigen::Index>& n_grid) {
    if (k < 1) throw std::invalid_argument("eigen profile: k must be >= 1");
    validate_grid(n_grid, s.n());
    std::vector<SpectralProfileRow> rows;
    const int M = s.grid.half_width();
    for (Eigen::Index m : n_grid) {
        for (int h = -M; h <= M; ++h) {
            const auto es = hermitian_eig(s.at(h).topLeftCorner(m, m));
            for (int j = 0; j < k && j < m; ++j) rows.push_back({m, s.grid.theta(h), j + 1, es.values(j)});
        }
    }
    return rows;
}

void write_filter_csv(const DlraFit& fit, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "k,i,j,value\n" << std::setprecision(17);
    for (int k = -fit.M; k <= fit.M; ++k) {
        const auto& K = fit.coefficient(k);
        for (Eigen::Index i = 0; i < K.rows(); ++i)
            for (Eigen::Index j = 0; j < K.cols(); ++j) out << k << ',' << i + 1 << ',' << j + 1 << ',' << K(i, j) << '\n';
    }
}

}  // namespace fseq
