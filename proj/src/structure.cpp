#include "fseq/structure.hpp"

#include "fseq/error.hpp"
#include "fseq/spectra.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace fseq {

namespace {

Eigen::MatrixXd demean_rows(const Eigen::MatrixXd& x) { return x.colwise() - x.rowwise().mean(); }

Eigen::VectorXd row_variances(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd c = demean_rows(x);
    return c.array().square().rowwise().sum() / static_cast<double>(x.cols());
}

Panel window_of(const Panel& p, const Eigen::MatrixXd& values, Eigen::Index begin, Eigen::Index end) {
    Panel out(values, p.labels(), p.t0() + begin);
    if (!p.time_labels().empty())
        out = out.with_time_labels({p.time_labels().begin() + begin, p.time_labels().begin() + end});
    return out;
}

void write_rows_csv(const Eigen::MatrixXd& rows, const std::string& prefix, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "t";
    for (Eigen::Index j = 0; j < rows.rows(); ++j) out << ',' << prefix << j + 1;
    out << '\n' << std::setprecision(17);
    for (Eigen::Index t = 0; t < rows.cols(); ++t) {
        out << t;
        for (Eigen::Index j = 0; j < rows.rows(); ++j) out << ',' << rows(j, t);
        out << '\n';
    }
}

}  // namespace

ThreeWayDecomposition three_way_decompose(const Panel& p, int r, int q, int M, unsigned threads) {
    if (r < 0 || q < 0) throw std::invalid_argument("three_way_decompose: r and q must be >= 0");
    const DlraFit dl = fit_dlra(p, q, M, EdgePolicy::DropEdges, threads);
    const SlraFit sl = fit_slra(p, r);
    const Eigen::Index b = dl.window_begin, e = dl.window_end, W = e - b;

    const Eigen::MatrixXd y = p.values().middleCols(b, W);
    const Eigen::MatrixXd chi = dl.common.middleCols(b, W);
    const Eigen::MatrixXd C = sl.common.values().middleCols(b, W);

    ThreeWayDecomposition d{window_of(p, y, b, e), window_of(p, C, b, e), window_of(p, chi - C, b, e),
                            window_of(p, y - chi, b, e), sl.factors.middleCols(b, W), {}, {}, {}, b, e};
    if (r > 0) {
        auto wf = extract_weak_factors(chi, d.strong_factors);
        d.weak_factors = std::move(wf.factors);
        d.weak_pivots = std::move(wf.pivots);
    } else {
        d.weak_factors.resize(0, W);
    }
    const Eigen::VectorXd vy = row_variances(y);
    d.variance_shares.resize(p.n(), 3);
    d.variance_shares.col(0) = row_variances(d.C.values()).cwiseQuotient(vy);
    d.variance_shares.col(1) = row_variances(d.e_chi.values()).cwiseQuotient(vy);
    d.variance_shares.col(2) = row_variances(d.xi.values()).cwiseQuotient(vy);
    return d;
}

WeakFactors extract_weak_factors(const Eigen::MatrixXd& chi, const Eigen::MatrixXd& strong, double tol) {
    if (strong.rows() > 0 && strong.cols() != chi.cols())
        throw std::invalid_argument("extract_weak_factors: strong factors and chi differ in T");
    const Eigen::Index T = chi.cols();
    const double Td = static_cast<double>(T);
    const Eigen::MatrixXd x = demean_rows(chi);
    if (tol == kDefaultWeakTol) tol = 0.01 * row_variances(chi).mean();

    // orthonormal basis rows, inner product (1/T) sum_t a_t b_t
    std::vector<Eigen::RowVectorXd> basis;
    if (strong.rows() > 0) {
        const Eigen::MatrixXd s = demean_rows(strong);
        const Eigen::MatrixXd gram = s * s.transpose() / Td;
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram).eigenvalues();
        if (!(ev.minCoeff() > 1e-10 * std::max(1e-300, ev.maxCoeff())))
            throw NumericalError("extract_weak_factors: strong factors are rank deficient");
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
            Eigen::RowVectorXd v = s.row(j);
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& bvec : basis) v -= (v.dot(bvec) / Td) * bvec;
            v /= std::sqrt(v.squaredNorm() / Td);
            basis.push_back(std::move(v));
        }
    }
    const std::size_t n_strong = basis.size();

    WeakFactors out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!std::isfinite(tol)) break;
        Eigen::RowVectorXd v = x.row(i);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& bvec : basis) v -= (v.dot(bvec) / Td) * bvec;
        const double var = v.squaredNorm() / Td;
        if (var > tol) {
            v /= std::sqrt(var);
            basis.push_back(std::move(v));
            out.pivots.push_back(i);
        }
    }
    out.factors.resize(static_cast<Eigen::Index>(basis.size() - n_strong), T);
    for (std::size_t j = n_strong; j < basis.size(); ++j)
        out.factors.row(static_cast<Eigen::Index>(j - n_strong)) = basis[j];
    return out;
}

InnovationEstimate innovations_from_factors(const Eigen::MatrixXd& factors, int p_max) {
    const Eigen::Index k = factors.rows();
    const Eigen::Index T = factors.cols();
    if (k < 1) throw std::invalid_argument("innovations_from_factors: no factor series");
    if (p_max < 0) throw std::invalid_argument("innovations_from_factors: p_max must be >= 0");
    if (!(T > k * p_max + 10)) throw std::invalid_argument("innovations_from_factors: need T > k * p_max + 10");
    const Eigen::MatrixXd f = demean_rows(factors);

    // Residuals of F_t on (F_{t-1}, ..., F_{t-p}) for t in [start, T).
    auto var_residuals = [&](int p, Eigen::Index start, Eigen::MatrixXd* coef) {
        const Eigen::Index N = T - start;
        const Eigen::MatrixXd Y = f.middleCols(start, N);
        if (p == 0) return Y;
        Eigen::MatrixXd X(k * p, N);
        for (int l = 1; l <= p; ++l) X.middleRows(k * (l - 1), k) = f.middleCols(start - l, N);
        Eigen::MatrixXd gram = X * X.transpose();
        const double scale = gram.trace() / static_cast<double>(gram.rows());
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw NumericalError("innovations_from_factors: degenerate regressors");
        gram.diagonal().array() += 1e-8 * scale;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        if (ldlt.info() != Eigen::Success) throw NumericalError("innovations_from_factors: ill-conditioned regression");
        const Eigen::MatrixXd B = ldlt.solve(X * Y.transpose()).transpose();  // k x kp
        if (!B.allFinite()) throw NumericalError("innovations_from_factors: ill-conditioned regression");
        if (coef) *coef = B;
        return Eigen::MatrixXd(Y - B * X);
    };

    int best_p = 0;
    double best_aic = std::numeric_limits<double>::infinity();
    const Eigen::Index N_common = T - p_max;
    for (int p = 0; p <= p_max; ++p) {
        const Eigen::MatrixXd E = var_residuals(p, p_max, nullptr);
        Eigen::MatrixXd sigma = E * E.transpose() / static_cast<double>(N_common);
        // regularized log-determinant: singular VARs have rank-deficient residuals
        sigma.diagonal().array() += 1e-10 * std::max(1e-300, sigma.trace() / static_cast<double>(k));
        const double logdet = 2.0 * Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL().toDenseMatrix().diagonal().array().log().sum();
        const double aic = logdet + 2.0 * static_cast<double>(p * k * k) / static_cast<double>(N_common);
        if (aic < best_aic) {
            best_aic = aic;
            best_p = p;
        }
    }

    InnovationEstimate est;
    est.order = best_p;
    Eigen::MatrixXd B;
    const Eigen::MatrixXd E = var_residuals(best_p, best_p, best_p > 0 ? &B : nullptr);
    const double N = static_cast<double>(E.cols());
    const Eigen::MatrixXd sigma = E * E.transpose() / N;
    const auto es = symmetric_eig(sigma);
    est.residual_eigenvalues = es.values;
    const double trace = sigma.trace();
    int q = 0;
    while (q < es.values.size() && es.values(q) > 1e-6 * trace) ++q;
    est.rank = q;
    est.innovations = es.values.head(q).cwiseSqrt().cwiseInverse().asDiagonal() * es.vectors.leftCols(q).transpose() * E;
    for (int j = 0; j < q; ++j)
        if (est.innovations.row(j).dot(E.row(0)) < 0.0) est.innovations.row(j) *= -1.0;

    if (best_p == 0) {
        est.left_invertible = true;
    } else {
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k * best_p, k * best_p);
        companion.topRows(k) = B;
        if (best_p > 1) companion.bottomLeftCorner(k * (best_p - 1), k * (best_p - 1)).setIdentity();
        est.left_invertible = spectral_radius(companion) < 1.0;
    }
    return est;
}

Eigen::MatrixXd recover_innovations_blockwise(const StateSpaceModel& model, const Panel& p, int block_truncation,
                                              const std::vector<Eigen::Index>& permutation) {
    model.validate();
    const Eigen::Index q = model.q(), m = model.m(), n = p.n(), T = p.T();
    if (n != model.n()) throw std::invalid_argument("recover_innovations_blockwise: panel and model differ in n");
    if (block_truncation < 0) throw std::invalid_argument("recover_innovations_blockwise: negative truncation");
    std::vector<Eigen::Index> order = permutation;
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    }
    if (static_cast<Eigen::Index>(order.size()) != n)
        throw std::invalid_argument("recover_innovations_blockwise: permutation length must equal n");
    const Eigen::Index blocks = n / q;
    if (blocks < 1) throw std::invalid_argument("recover_innovations_blockwise: fewer rows than q");

    const int L = block_truncation;
    // M^j G for j = 0..L
    std::vector<Eigen::MatrixXd> mg(static_cast<std::size_t>(L + 1));
    mg[0] = model.G;
    for (int j = 1; j <= L; ++j) mg[static_cast<std::size_t>(j)] = model.M * mg[static_cast<std::size_t>(j - 1)];

    MiniphaseOptions strict;
    strict.max_radius = 1.0;
    // Blocks with the same H_b share one inverse filter, so their outputs are
    // filtered once after summing the block rows.
    struct Group {
        Eigen::MatrixXd Hb;
        Eigen::Index first_block;
        Eigen::MatrixXd y_sum;
    };
    std::map<std::vector<double>, Group> groups;
    std::vector<const Group*> order_of_groups;
    for (Eigen::Index b = 0; b < blocks; ++b) {
        Eigen::MatrixXd Hb(q, m);
        Eigen::MatrixXd yb(q, T);
        for (Eigen::Index r = 0; r < q; ++r) {
            const Eigen::Index row = order[static_cast<std::size_t>(b * q + r)];
            Hb.row(r) = model.H.row(row);
            yb.row(r) = p.values().row(row);
        }
        std::vector<double> key(Hb.data(), Hb.data() + Hb.size());
        auto [it, fresh] = groups.try_emplace(std::move(key), Group{Hb, b, Eigen::MatrixXd::Zero(q, T)});
        it->second.y_sum += yb;
        if (fresh) order_of_groups.push_back(&it->second);
    }

    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(q, T);
    for (const Group* g : order_of_groups) {
        const auto mp = miniphase_check(model.M, model.G, g->Hb, strict);
        if (!mp.miniphase) {
            const Eigen::Index b = g->first_block;
            std::ostringstream msg;
            msg << "recover_innovations_blockwise: block " << b << " (rows " << b * q + 1 << ".." << b * q + q
                << ") is not strictly miniphase; zero near z = " << mp.worst_z.real()
                << (mp.worst_z.imag() < 0 ? "" : "+") << mp.worst_z.imag() << "i";
            throw NumericalError(msg.str());
        }
        std::vector<Eigen::MatrixXd> K(static_cast<std::size_t>(L + 1));
        for (int j = 0; j <= L; ++j) K[static_cast<std::size_t>(j)] = g->Hb * mg[static_cast<std::size_t>(j)];
        Eigen::FullPivLU<Eigen::MatrixXd> k0(K[0]);
        if (!k0.isInvertible()) throw NumericalError("recover_innovations_blockwise: singular leading block coefficient");
        std::vector<Eigen::MatrixXd> W(static_cast<std::size_t>(L + 1));
        W[0] = k0.inverse();
        for (int j = 1; j <= L; ++j) {
            Eigen::MatrixXd s = Eigen::MatrixXd::Zero(q, q);
            for (int l = 1; l <= j; ++l) s += K[static_cast<std::size_t>(l)] * W[static_cast<std::size_t>(j - l)];
            W[static_cast<std::size_t>(j)] = -W[0] * s;
        }
        for (int j = 0; j <= L && j < T; ++j)
            acc.rightCols(T - j).noalias() += W[static_cast<std::size_t>(j)] * g->y_sum.leftCols(T - j);
    }
    return acc / static_cast<double>(blocks);
}

void write_decomposition(const ThreeWayDecomposition& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_panel_csv(d.y, dir / "y_window.csv");
    write_panel_csv(d.C, dir / "C.csv");
    write_panel_csv(d.e_chi, dir / "e_chi.csv");
    write_panel_csv(d.xi, dir / "xi.csv");
    write_rows_csv(d.strong_factors, "strong", dir / "strong_factors.csv");
    write_rows_csv(d.weak_factors, "weak", dir / "weak_factors.csv");
    {
        std::ofstream out(dir / "variance_shares.csv");
        out << "series,C,e_chi,xi\n" << std::setprecision(10);
        for (Eigen::Index i = 0; i < d.variance_shares.rows(); ++i)
            out << d.y.labels()[static_cast<std::size_t>(i)] << ',' << d.variance_shares(i, 0) << ','
                << d.variance_shares(i, 1) << ',' << d.variance_shares(i, 2) << '\n';
    }
    std::ofstream manifest(dir / "weak_pivots.txt");
    manifest << "# series whose residual opened a new weak factor (1-based index, label)\n";
    for (auto i : d.weak_pivots) manifest << i + 1 << ' ' << d.y.labels()[static_cast<std::size_t>(i)] << '\n';
    std::ofstream meta(dir / "window.txt");
    meta << "window_begin " << d.window_begin << "\nwindow_end " << d.window_end << '\n';
}

}  // namespace fseq
