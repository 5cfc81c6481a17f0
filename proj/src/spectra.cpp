#include "fseq/spectra.hpp"

#include "fseq/error.hpp"
#include "fseq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <type_traits>

namespace fseq {

namespace {

template <class S>
constexpr bool is_complex_v = !std::is_floating_point_v<S>;

template <class S>
S conj_of(const S& x) {
    if constexpr (is_complex_v<S>) return std::conj(x);
    else return x;
}

template <class S>
double real_of(const S& x) {
    if constexpr (is_complex_v<S>) return x.real();
    else return x;
}

// Plain complex product; std::complex's operator* takes the slow
// NaN-recovering path in the rotation kernels.
template <class S>
S mul(const S& a, const S& b) {
    if constexpr (is_complex_v<S>)
        return S(a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real());
    else return a * b;
}

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

template <class S>
double max_abs(const Mat<S>& A) {
    return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

double off_diagonal_norm2(const auto& A) {
    double off = 0.0;
    const Eigen::Index n = A.rows();
    for (Eigen::Index q = 0; q < n; ++q)
        for (Eigen::Index p = 0; p < n; ++p)
            if (p != q) off += std::norm(A(p, q));
    return off;
}

template <class S>
struct Rotation {
    Eigen::Index p, q;
    double c, s, t, abs_b, a, d;
    S sp, cp;  // s and c times the phase of conj(a_pq)
};

// Round-robin pairing: each round is a set of disjoint (p, q) pairs and the
// n - 1 (n even) rounds of a sweep visit every off-diagonal pair once.
std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> round_robin(Eigen::Index n) {
    const Eigen::Index N = n + (n % 2);
    std::vector<Eigen::Index> ring(static_cast<std::size_t>(N));
    std::iota(ring.begin(), ring.end(), 0);
    std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> rounds;
    for (Eigen::Index r = 0; r + 1 < N; ++r) {
        auto& pairs = rounds.emplace_back();
        for (Eigen::Index i = 0; i < N / 2; ++i) {
            Eigen::Index p = ring[static_cast<std::size_t>(i)];
            Eigen::Index q = ring[static_cast<std::size_t>(N - 1 - i)];
            if (p > q) std::swap(p, q);
            if (q < n) pairs.emplace_back(p, q);
        }
        std::sort(pairs.begin(), pairs.end());
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    return rounds;
}

// Cyclic Jacobi on a Hermitian (or real symmetric) matrix, visiting pairs in
// round-robin order so that each round's rotations are disjoint and can be
// applied with contiguous column sweeps. Returns the eigenvalues (unsorted)
// in `diag` and the eigenvectors as columns of V.
template <class S>
void jacobi(Mat<S> A, Eigen::VectorXd& diag, Mat<S>& V) {
    const Eigen::Index n = A.rows();
    V = Mat<S>::Identity(n, n);
    const double fro2 = A.squaredNorm();
    const double tol2 = 1e-24 * fro2;
    constexpr int max_sweeps = 100;
    const auto rounds = round_robin(n);
    std::vector<Rotation<S>> rot;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (fro2 == 0.0 || off_diagonal_norm2(A) <= tol2) break;
        for (const auto& pairs : rounds) {
            rot.clear();
            for (const auto& [p, q] : pairs) {
                const S b = A(p, q);
                const double abs_b = std::abs(b);
                if (abs_b == 0.0) continue;
                const double a = real_of(A(p, p));
                const double d = real_of(A(q, q));
                // skip rotations that cannot change the diagonal in floating point
                if (sweep > 3 && std::abs(a) + 100.0 * abs_b == std::abs(a) &&
                    std::abs(d) + 100.0 * abs_b == std::abs(d)) {
                    A(p, q) = S(0);
                    A(q, p) = S(0);
                    continue;
                }
                const S phase_c = conj_of(S(b / abs_b));
                const double theta = (d - a) / (2.0 * abs_b);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                rot.push_back({p, q, c, s, t, abs_b, a, d, S(s) * phase_c, S(c) * phase_c});
            }
            if (rot.empty()) continue;

            auto rotate_columns = [&](Mat<S>& X) {
                for (const auto& r : rot) {
                    S* xp = X.col(r.p).data();
                    S* xq = X.col(r.q).data();
                    for (Eigen::Index k = 0; k < X.rows(); ++k) {
                        const S x = xp[k];
                        const S y = xq[k];
                        xp[k] = r.c * x - mul(r.sp, y);
                        xq[k] = r.s * x + mul(r.cp, y);
                    }
                }
            };
            rotate_columns(A);
            // rows: A <- J* A, done column by column
            for (Eigen::Index k = 0; k < n; ++k) {
                S* col = A.col(k).data();
                for (const auto& r : rot) {
                    const S x = col[r.p];
                    const S y = col[r.q];
                    col[r.p] = r.c * x - mul(conj_of(r.sp), y);
                    col[r.q] = r.s * x + mul(conj_of(r.cp), y);
                }
            }
            for (const auto& r : rot) {
                A(r.p, r.p) = S(r.a - r.t * r.abs_b);
                A(r.q, r.q) = S(r.d + r.t * r.abs_b);
                A(r.p, r.q) = S(0);
                A(r.q, r.p) = S(0);
            }
            rotate_columns(V);
        }
    }
    if (sweep == max_sweeps && off_diagonal_norm2(A) > tol2)
        throw NumericalError("Jacobi eigen-solver did not converge");
    diag.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) diag(i) = real_of(A(i, i));
}

template <class S>
void sort_and_normalize(Eigen::VectorXd& values, Mat<S>& V, bool& near_tie) {
    const Eigen::Index n = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values(i) > values(j); });
    Eigen::VectorXd sorted(n);
    Mat<S> W(V.rows(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        sorted(j) = values(src);
        W.col(j) = V.col(src);
    }
    near_tie = false;
    for (Eigen::Index j = 0; j + 1 < n; ++j)
        if (sorted(j) - sorted(j + 1) < 1e-8) near_tie = true;
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index best = 0;
        double best_abs = -1.0;
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            const double m = std::abs(W(i, j));
            if (m > best_abs) {
                best_abs = m;
                best = i;
            }
        }
        if (best_abs > 0.0) {
            const S rot = conj_of(W(best, j)) / S(best_abs);
            W.col(j) *= rot;
            if constexpr (is_complex_v<S>) W(best, j) = S(std::abs(W(best, j)));
        }
        W.col(j).normalize();
    }
    values = std::move(sorted);
    V = std::move(W);
}

}  // namespace

FrequencyGrid::FrequencyGrid(int half_width) : half_width_(half_width) {
    if (half_width < 1) throw std::invalid_argument("frequency grid half-width must be >= 1");
    points_.reserve(static_cast<std::size_t>(2 * half_width + 1));
    for (int h = -half_width; h <= half_width; ++h)
        points_.push_back(std::numbers::pi * static_cast<double>(h) / static_cast<double>(half_width));
}

double bartlett_weight(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

int default_bandwidth(long T) {
    if (T < 4) throw std::invalid_argument("default_bandwidth needs T >= 4");
    return std::max(1, static_cast<int>(std::floor(0.75 * std::sqrt(static_cast<double>(T)))));
}

SpectralDensity estimate_spectrum(const Eigen::MatrixXd& y, int M, unsigned threads) {
    if (M < 1) throw std::invalid_argument("spectral bandwidth M must be >= 1");
    if (M >= y.cols()) throw std::invalid_argument("spectral bandwidth M must be < T");
    const Eigen::Index n = y.rows();
    std::vector<Eigen::MatrixXd> gamma(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) gamma[static_cast<std::size_t>(k)] = sample_autocov(y, k);

    SpectralDensity s{FrequencyGrid(M), std::vector<Eigen::MatrixXcd>(static_cast<std::size_t>(2 * M + 1))};
    const double inv2pi = 1.0 / (2.0 * std::numbers::pi);
    parallel_for(static_cast<std::size_t>(M + 1), threads, [&](std::size_t hi) {
        const int h = static_cast<int>(hi);
        const double theta = s.grid.theta(h);
        Eigen::MatrixXcd f = gamma[0].cast<std::complex<double>>();
        for (int k = 1; k < M; ++k) {
            const double w = bartlett_weight(static_cast<double>(k) / M);
            const std::complex<double> e = std::polar(w, -static_cast<double>(k) * theta);
            const auto& g = gamma[static_cast<std::size_t>(k)];
            f += e * g.cast<std::complex<double>>() + std::conj(e) * g.transpose().cast<std::complex<double>>();
        }
        f *= inv2pi;
        Eigen::MatrixXcd herm = (f + f.adjoint()) * 0.5;
        s.matrices[static_cast<std::size_t>(h + M)] = herm;
    });
    for (int h = 1; h <= M; ++h)
        s.matrices[static_cast<std::size_t>(M - h)] = s.matrices[static_cast<std::size_t>(M + h)].conjugate();
    (void)n;
    return s;
}

SpectralDensity estimate_spectrum(const Panel& p, int M, unsigned threads) {
    return estimate_spectrum(p.values(), M, threads);
}

EigenSystem hermitian_eig(const Eigen::MatrixXcd& A) {
    if (A.rows() != A.cols()) throw NumericalError("hermitian_eig: matrix is not square");
    const double scale = std::max(1.0, max_abs<std::complex<double>>(A));
    if (max_abs<std::complex<double>>(A - A.adjoint()) > 1e-8 * scale)
        throw NumericalError("hermitian_eig: matrix is not Hermitian");
    EigenSystem es;
    Eigen::MatrixXcd H = (A + A.adjoint()) * 0.5;
    jacobi<std::complex<double>>(std::move(H), es.values, es.vectors);
    sort_and_normalize<std::complex<double>>(es.values, es.vectors, es.near_tie);
    return es;
}

SymmetricEigenSystem symmetric_eig(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw NumericalError("symmetric_eig: matrix is not square");
    const double scale = std::max(1.0, max_abs<double>(A));
    if (max_abs<double>(A - A.transpose()) > 1e-8 * scale)
        throw NumericalError("symmetric_eig: matrix is not symmetric");
    SymmetricEigenSystem es;
    Eigen::MatrixXd S = (A + A.transpose()) * 0.5;
    jacobi<double>(std::move(S), es.values, es.vectors);
    sort_and_normalize<double>(es.values, es.vectors, es.near_tie);
    return es;
}

void write_spectrum_eigen_csv(const SpectralDensity& s, const std::filesystem::path& path, int k) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "theta,j,lambda\n" << std::setprecision(17);
    const int M = s.grid.half_width();
    for (int h = -M; h <= M; ++h) {
        const auto es = hermitian_eig(s.at(h));
        const Eigen::Index kk = k <= 0 ? es.values.size() : std::min<Eigen::Index>(k, es.values.size());
        for (Eigen::Index j = 0; j < kk; ++j) out << s.grid.theta(h) << ',' << j + 1 << ',' << es.values(j) << '\n';
    }
}

}  // namespace fseq
