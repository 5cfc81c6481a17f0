#include "fseq/statespace.hpp"

#include "fseq/error.hpp"
#include "fseq/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace fseq {

namespace {

using cd = std::complex<double>;

double max_abs(const Eigen::MatrixXd& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

Panel panel_of(Eigen::MatrixXd values) { return Panel(std::move(values)); }

// Nelder-Mead on f(x, y) with the point projected onto the disc |z| <= rmax.
std::pair<cd, double> refine_minimum(const auto& f, cd start, double step, double rmax) {
    auto project = [rmax](cd z) {
        const double a = std::abs(z);
        return a > rmax ? z * (rmax / a) : z;
    };
    std::array<cd, 3> pts{project(start), project(start + cd(step, 0.0)), project(start + cd(0.0, step))};
    std::array<double, 3> val{f(pts[0]), f(pts[1]), f(pts[2])};
    for (int iter = 0; iter < 2000; ++iter) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
        const cd best = pts[idx[0]], mid = pts[idx[1]], worst = pts[idx[2]];
        const double fb = val[idx[0]], fm = val[idx[1]], fw = val[idx[2]];
        if (std::abs(worst - best) < 1e-13 && std::abs(mid - best) < 1e-13) break;
        const cd centroid = 0.5 * (best + mid);
        const cd refl = project(centroid + (centroid - worst));
        const double fr = f(refl);
        if (fr < fb) {
            const cd exp = project(centroid + 2.0 * (centroid - worst));
            const double fe = f(exp);
            if (fe < fr) { pts[idx[2]] = exp; val[idx[2]] = fe; }
            else { pts[idx[2]] = refl; val[idx[2]] = fr; }
        } else if (fr < fm) {
            pts[idx[2]] = refl;
            val[idx[2]] = fr;
        } else {
            const cd con = project(centroid + 0.5 * (worst - centroid));
            const double fc = f(con);
            if (fc < fw) {
                pts[idx[2]] = con;
                val[idx[2]] = fc;
            } else {
                pts[idx[1]] = best + 0.5 * (mid - best);
                pts[idx[2]] = best + 0.5 * (worst - best);
                val[idx[1]] = f(pts[idx[1]]);
                val[idx[2]] = f(pts[idx[2]]);
            }
        }
    }
    const auto it = std::min_element(val.begin(), val.end());
    return {pts[static_cast<std::size_t>(it - val.begin())], *it};
}

void write_matrix(std::ostream& out, const char* name, const Eigen::MatrixXd& A) {
    out << name << ' ' << A.rows() << ' ' << A.cols() << '\n';
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) out << (j ? " " : "") << A(i, j);
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expected) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0)
        throw DataError("model file: expected matrix block '" + expected + "'");
    Eigen::MatrixXd A(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(in >> A(i, j))) throw DataError("model file: truncated matrix '" + expected + "'");
    return A;
}

}  // namespace

void StateSpaceModel::validate() const {
    if (M.rows() != M.cols()) throw std::invalid_argument("state-space model: M must be square");
    if (G.rows() != M.rows()) throw std::invalid_argument("state-space model: G rows must match M");
    if (H.cols() != M.rows()) throw std::invalid_argument("state-space model: H columns must match M");
    if (H.rows() < 1 || M.rows() < 1 || G.cols() < 1)
        throw std::invalid_argument("state-space model: empty dimension");
    if (r_strong < 0 || r_weak < 0 || r_strong + r_weak > M.rows())
        throw std::invalid_argument("state-space model: factor partition exceeds state dimension");
    if (!(spectral_radius(M) < 1.0)) throw NumericalError("state-space model: transition matrix is not stable");
}

double spectral_radius(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G) {
    if (M.rows() != M.cols() || G.rows() != M.rows()) throw std::invalid_argument("lyapunov_solve: dimension mismatch");
    if (!(spectral_radius(M) < 1.0 - 1e-8)) throw NumericalError("lyapunov_solve: transition matrix is not stable");
    const Eigen::MatrixXd Q = G * G.transpose();
    // Doubling: after k steps Gamma holds the first 2^k terms of sum_j M^j Q M'^j.
    Eigen::MatrixXd gamma = Q;
    Eigen::MatrixXd A = M;
    for (int k = 0; k < 64; ++k) {
        const Eigen::MatrixXd inc = A * gamma * A.transpose();
        gamma += inc;
        A = A * A;
        if (max_abs(inc) <= 1e-17 * std::max(1.0, max_abs(gamma))) break;
    }
    for (int k = 0; k < 1000; ++k) {
        const Eigen::MatrixXd next = M * gamma * M.transpose() + Q;
        const double resid = max_abs(next - gamma);
        gamma = 0.5 * (next + next.transpose());
        if (resid < 1e-14 * std::max(1.0, max_abs(gamma))) break;
    }
    const double resid = max_abs(gamma - M * gamma * M.transpose() - Q);
    if (resid >= 1e-12 * std::max(1.0, max_abs(gamma)))
        throw NumericalError("lyapunov_solve: fixed point did not reach residual 1e-12");
    return gamma;
}

SimulatedPanel simulate_ss(const StateSpaceModel& model, Eigen::Index T, Eigen::Index burn_in, std::uint64_t seed,
                           const IdioSpec& idio, std::uint64_t replication) {
    model.validate();
    if (T < 2) throw std::invalid_argument("simulate_ss: T must be >= 2");
    if (burn_in < 0) throw std::invalid_argument("simulate_ss: burn_in must be >= 0");
    const Eigen::Index n = model.n(), m = model.m(), q = model.q();

    RngStream shock_rng(seed, replication, Stream::StateShocks);
    const Eigen::MatrixXd eps = shock_rng.normal_matrix(q, burn_in + T);
    Eigen::MatrixXd state(m, T);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m);
    for (Eigen::Index t = 0; t < burn_in + T; ++t) {
        x = model.M * x + model.G * eps.col(t);
        if (t >= burn_in) state.col(t - burn_in) = x;
    }

    SimulatedPanel sim;
    sim.seed = seed;
    sim.replication = replication;
    sim.state = state;
    sim.shocks = eps.rightCols(T);
    sim.strong_factors = state.topRows(model.r_strong);
    sim.weak_factors = state.middleRows(model.r_strong, model.r_weak);

    Eigen::MatrixXd chi = model.H * state;
    Eigen::MatrixXd C = model.H.leftCols(model.r_strong) * state.topRows(model.r_strong);
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n, T);
    switch (idio.kind) {
        case IdioKind::None:
            break;
        case IdioKind::Iid: {
            RngStream rng(seed, replication, Stream::IdioSpecific);
            xi = idio.sd * rng.normal_matrix(n, T);
            break;
        }
        case IdioKind::PaperFactor: {
            Eigen::VectorXd w = idio.weights;
            if (w.size() == 0) w = Eigen::VectorXd::LinSpaced(n, 1.0 + 1.0 / 20.0, 1.0 + static_cast<double>(n) / 20.0);
            if (w.size() != n) throw std::invalid_argument("simulate_ss: idiosyncratic weight count must equal n");
            RngStream load_rng(seed, replication, Stream::IdioLoadings);
            Eigen::VectorXd lambda = load_rng.normal_matrix(n, 1).col(0);
            if (idio.weight_mode == WeightMode::Divide) lambda = lambda.cwiseQuotient(w);
            else lambda = lambda.cwiseProduct(w);
            RngStream common_rng(seed, replication, Stream::IdioCommon);
            RngStream specific_rng(seed, replication, Stream::IdioSpecific);
            const Eigen::MatrixXd e1 = common_rng.normal_matrix(1, T);
            xi = lambda * e1 + specific_rng.normal_matrix(n, T);
            sim.idio_loadings = lambda;
            break;
        }
    }
    sim.y = panel_of(chi + xi);
    sim.e_chi = panel_of(chi - C);
    sim.C = panel_of(std::move(C));
    sim.chi = panel_of(std::move(chi));
    sim.xi = panel_of(std::move(xi));
    return sim;
}

Eigen::Matrix2d paper_transition() {
    Eigen::Matrix2d M;
    M << 0.1945375, -0.3842384, 0.2702844, 0.9054625;
    return M;
}

Eigen::Vector2d paper_shock_loading() { return {0.9025054, 0.3272368}; }

PaperDgp make_paper_dgp(Eigen::Index n, WeightMode mode) {
    if (n < 11) throw std::invalid_argument("make_paper_dgp: n must be >= 11");
    PaperDgp dgp;
    dgp.model.M = paper_transition();
    dgp.model.G = paper_shock_loading();
    dgp.model.H = Eigen::MatrixXd::Zero(n, 2);
    dgp.model.H.block(0, 1, 10, 1).setOnes();
    dgp.model.H.block(10, 0, n - 10, 1).setOnes();
    dgp.model.r_strong = 1;
    dgp.model.r_weak = 1;
    dgp.idio.kind = IdioKind::PaperFactor;
    dgp.idio.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) dgp.idio.weights(i) = 1.0 + static_cast<double>(i + 1) / 20.0;
    dgp.idio.weight_mode = mode;
    return dgp;
}

SimulatedPanel gen_example_shift(Eigen::Index n, Eigen::Index T, std::uint64_t seed, double noise_sd,
                                 std::uint64_t replication) {
    if (n < 1 || T < 2) throw std::invalid_argument("gen_example_shift: need n >= 1, T >= 2");
    if (noise_sd < 0.0) throw std::invalid_argument("gen_example_shift: noise_sd must be >= 0");
    RngStream rng(seed, replication, Stream::StateShocks);
    // u(s) holds u_{s - (n - 1)}, s = 0 .. T + n - 2
    const Eigen::MatrixXd u = rng.normal_matrix(1, T + n - 1);
    Eigen::MatrixXd chi(n, T);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index t = 0; t < T; ++t) chi(i, t) = u(0, t - i + n - 1);
    Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n, T);
    if (noise_sd > 0.0) {
        RngStream noise(seed, replication, Stream::IdioSpecific);
        xi = noise_sd * noise.normal_matrix(n, T);
    }
    SimulatedPanel sim;
    sim.seed = seed;
    sim.replication = replication;
    sim.shocks = u.rightCols(T);
    sim.strong_factors.resize(0, T);
    sim.weak_factors.resize(0, T);
    sim.y = panel_of(chi + xi);
    sim.C = panel_of(Eigen::MatrixXd::Zero(n, T));
    sim.e_chi = panel_of(chi);
    sim.chi = panel_of(std::move(chi));
    sim.xi = panel_of(std::move(xi));
    return sim;
}

SimulatedPanel gen_example_one_weak(Eigen::Index n, Eigen::Index T, std::uint64_t seed, std::uint64_t replication) {
    if (n < 2 || T < 2) throw std::invalid_argument("gen_example_one_weak: need n >= 2, T >= 2");
    RngStream rng(seed, replication, Stream::StateShocks);
    const Eigen::MatrixXd u = rng.normal_matrix(1, T + 1);  // u(s) = u_{s-1}
    Eigen::MatrixXd chi(n, T), C = Eigen::MatrixXd::Zero(n, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        chi(0, t) = u(0, t + 1);
        for (Eigen::Index i = 1; i < n; ++i) {
            chi(i, t) = u(0, t);
            C(i, t) = u(0, t);
        }
    }
    SimulatedPanel sim;
    sim.seed = seed;
    sim.replication = replication;
    sim.shocks = u.rightCols(T);
    sim.strong_factors = u.leftCols(T);
    sim.weak_factors = u.rightCols(T);
    sim.y = panel_of(chi);
    sim.e_chi = panel_of(chi - C);
    sim.C = panel_of(std::move(C));
    sim.chi = panel_of(std::move(chi));
    sim.xi = panel_of(Eigen::MatrixXd::Zero(n, T));
    return sim;
}

SimulatedPanel gen_random_walk_idio(Eigen::Index n, Eigen::Index T, std::uint64_t seed, double sigma,
                                    std::uint64_t replication) {
    if (n < 1 || T < 2) throw std::invalid_argument("gen_random_walk_idio: need n >= 1, T >= 2");
    RngStream rng(seed, replication, Stream::StateShocks);
    RngStream inc(seed, replication, Stream::IdioSpecific);
    const Eigen::MatrixXd u = rng.normal_matrix(1, T);
    Eigen::MatrixXd e = sigma * inc.normal_matrix(n, T);
    for (Eigen::Index t = 1; t < T; ++t) e.col(t) += e.col(t - 1);
    const Eigen::MatrixXd C = Eigen::VectorXd::Ones(n) * u;
    SimulatedPanel sim;
    sim.seed = seed;
    sim.replication = replication;
    sim.shocks = u;
    sim.strong_factors = u;
    sim.weak_factors.resize(0, T);
    sim.y = panel_of(C + e);
    sim.chi = panel_of(C);
    sim.C = panel_of(C);
    sim.e_chi = panel_of(Eigen::MatrixXd::Zero(n, T));
    sim.xi = panel_of(std::move(e));
    return sim;
}

PbhResult pbh_observable(const Eigen::MatrixXd& H_sel, const Eigen::MatrixXd& M, double tol) {
    if (M.rows() != M.cols() || H_sel.cols() != M.rows())
        throw std::invalid_argument("pbh_observable: dimension mismatch");
    const Eigen::Index m = M.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
    const Eigen::VectorXcd eig = es.eigenvalues();
    PbhResult res;
    for (Eigen::Index k = 0; k < eig.size(); ++k) {
        Eigen::MatrixXcd stack(m + H_sel.rows(), m);
        stack.topRows(m) = M.cast<cd>() - eig(k) * Eigen::MatrixXcd::Identity(m, m);
        stack.bottomRows(H_sel.rows()) = H_sel.cast<cd>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stack);
        const double smin = svd.singularValues()(m - 1);
        const double scale = std::max(1.0, svd.singularValues()(0));
        if (smin < tol * scale) {
            res.observable = false;
            res.witness = eig(k);
            return res;
        }
    }
    return res;
}

double system_matrix_sigma_min(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G, const Eigen::MatrixXd& H_sel,
                               cd z) {
    const Eigen::Index m = M.rows(), q = G.cols(), p = H_sel.rows();
    if (p + m < m + q) return 0.0;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(m + p, m + q);
    S.topLeftCorner(m, m) = Eigen::MatrixXcd::Identity(m, m) - z * M.cast<cd>();
    S.topRightCorner(m, q) = -G.cast<cd>();
    S.bottomLeftCorner(p, m) = H_sel.cast<cd>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
    return svd.singularValues()(m + q - 1);
}

MiniphaseResult miniphase_check(const Eigen::MatrixXd& M, const Eigen::MatrixXd& G, const Eigen::MatrixXd& H_sel,
                                const MiniphaseOptions& opts) {
    if (M.rows() != M.cols() || G.rows() != M.rows() || H_sel.cols() != M.rows())
        throw std::invalid_argument("miniphase_check: dimension mismatch");
    if (opts.radius_steps < 2 || opts.angle_steps < 1 || !(opts.max_radius > 0.0))
        throw std::invalid_argument("miniphase_check: invalid grid");
    MiniphaseResult res;
    res.radii = Eigen::VectorXd::LinSpaced(opts.radius_steps, 0.0, opts.max_radius);
    res.angles.resize(opts.angle_steps);
    for (int b = 0; b < opts.angle_steps; ++b)
        res.angles(b) = 2.0 * std::numbers::pi * static_cast<double>(b) / opts.angle_steps;
    res.sigma_map.resize(opts.radius_steps, opts.angle_steps);

    auto f = [&](cd z) { return system_matrix_sigma_min(M, G, H_sel, z); };
    std::vector<std::pair<double, cd>> cells;
    for (int a = 0; a < opts.radius_steps; ++a) {
        for (int b = 0; b < opts.angle_steps; ++b) {
            const cd z = std::polar(res.radii(a), res.angles(b));
            const double s = f(z);
            res.sigma_map(a, b) = s;
            cells.emplace_back(s, z);
            if (a == 0) {
                // the centre is a single point; fill the row without recomputing
                for (int bb = 1; bb < opts.angle_steps; ++bb) res.sigma_map(0, bb) = s;
                break;
            }
        }
    }
    std::sort(cells.begin(), cells.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    res.min_sigma = cells.front().first;
    res.worst_z = cells.front().second;
    const double step = opts.max_radius / (opts.radius_steps - 1);
    const std::size_t starts = std::min<std::size_t>(4, cells.size());
    for (std::size_t k = 0; k < starts; ++k) {
        auto [z, s] = refine_minimum(f, cells[k].second, step, opts.max_radius);
        if (s < res.min_sigma) {
            res.min_sigma = s;
            res.worst_z = z;
        }
    }
    res.miniphase = !(res.min_sigma < opts.threshold);
    return res;
}

void save_model(const StateSpaceModel& model, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# state-space model: chi_t = H x_t, x_{t+1} = M x_t + G eps_{t+1}\n";
    out << "n " << model.n() << "\nm " << model.m() << "\nq " << model.q() << '\n';
    out << "r_strong " << model.r_strong << "\nr_weak " << model.r_weak << '\n';
    out << std::setprecision(17);
    write_matrix(out, "M", model.M);
    write_matrix(out, "G", model.G);
    write_matrix(out, "H", model.H);
}

StateSpaceModel load_model(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw DataError("cannot open model file " + path.string());
    std::stringstream body;
    std::string line;
    while (std::getline(file, line)) {
        const auto hash = line.find('#');
        body << (hash == std::string::npos ? line : line.substr(0, hash)) << '\n';
    }
    auto read_int = [&](const char* key) {
        std::string name;
        long v = 0;
        if (!(body >> name >> v) || name != key) throw DataError(std::string("model file: expected '") + key + "'");
        return v;
    };
    const long n = read_int("n"), m = read_int("m"), q = read_int("q");
    StateSpaceModel model;
    model.r_strong = static_cast<int>(read_int("r_strong"));
    model.r_weak = static_cast<int>(read_int("r_weak"));
    model.M = read_matrix(body, "M");
    model.G = read_matrix(body, "G");
    model.H = read_matrix(body, "H");
    if (model.n() != n || model.m() != m || model.q() != q)
        throw DataError("model file: matrix shapes disagree with declared dims");
    model.validate();
    return model;
}

void write_simulated_panel(const SimulatedPanel& sim, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_panel_csv(sim.y, dir / "y.csv");
    write_panel_csv(sim.chi, dir / "chi.csv");
    write_panel_csv(sim.C, dir / "C.csv");
    write_panel_csv(sim.e_chi, dir / "e_chi.csv");
    write_panel_csv(sim.xi, dir / "xi.csv");
    const Eigen::Index T = sim.y.T();
    {
        std::ofstream out(dir / "factors.csv");
        out << "time";
        for (Eigen::Index j = 0; j < sim.strong_factors.rows(); ++j) out << ",strong" << j + 1;
        for (Eigen::Index j = 0; j < sim.weak_factors.rows(); ++j) out << ",weak" << j + 1;
        out << '\n' << std::setprecision(17);
        for (Eigen::Index t = 0; t < T; ++t) {
            out << t;
            for (Eigen::Index j = 0; j < sim.strong_factors.rows(); ++j) out << ',' << sim.strong_factors(j, t);
            for (Eigen::Index j = 0; j < sim.weak_factors.rows(); ++j) out << ',' << sim.weak_factors(j, t);
            out << '\n';
        }
    }
    {
        std::ofstream out(dir / "shocks.csv");
        out << "time";
        for (Eigen::Index j = 0; j < sim.shocks.rows(); ++j) out << ",eps" << j + 1;
        out << '\n' << std::setprecision(17);
        for (Eigen::Index t = 0; t < T; ++t) {
            out << t;
            for (Eigen::Index j = 0; j < sim.shocks.rows(); ++j) out << ',' << sim.shocks(j, t);
            out << '\n';
        }
    }
    std::ofstream meta(dir / "meta.txt");
    meta << "seed " << sim.seed << "\nreplication " << sim.replication << "\nn " << sim.y.n() << "\nT " << T << '\n';
}

}  // namespace fseq
