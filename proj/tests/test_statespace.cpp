#include "doctest.h"

#include "fseq/error.hpp"
#include "fseq/lowrank.hpp"
#include "fseq/statespace.hpp"

#include <cmath>

using namespace fseq;

namespace {

// x_t = (e_t, e_{t-1}): transfer H (I - M z)^{-1} G = 1 + c z for H = [1, c].
StateSpaceModel ma1_model(double c) {
    StateSpaceModel m;
    m.M = Eigen::Matrix2d{{0.0, 0.0}, {1.0, 0.0}};
    m.G = Eigen::Vector2d(1.0, 0.0);
    m.H = Eigen::RowVector2d(1.0, c);
    m.r_strong = 2;
    return m;
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return a == b; }

double sample_var(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("lyapunov solve") {
    const Eigen::MatrixXd M = paper_transition();
    const Eigen::MatrixXd G = paper_shock_loading();
    const Eigen::MatrixXd S = lyapunov_solve(M, G);
    CHECK((S - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((S - M * S * M.transpose() - G * G.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((S - S.transpose()).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::MatrixXd G2{{1.0, 0.5}, {0.0, 2.0}};
    CHECK((lyapunov_solve(Eigen::Matrix2d::Zero(), G2) - G2 * G2.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS((void)lyapunov_solve(Eigen::Matrix2d::Identity(), G2), NumericalError);

    CHECK(spectral_radius(M) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("two-factor design") {
    const auto dgp = make_paper_dgp(30);
    CHECK(dgp.model.r_strong == 1);
    CHECK(dgp.model.r_weak == 1);
    CHECK(dgp.model.q() == 1);
    CHECK(dgp.model.n() == 30);
    CHECK(dgp.idio.kind == IdioKind::PaperFactor);
    CHECK(dgp.idio.weights(0) == doctest::Approx(1.05));
    CHECK(dgp.idio.weights(29) == doctest::Approx(2.5));
    CHECK_THROWS_AS((void)make_paper_dgp(10), std::invalid_argument);

    const Eigen::MatrixXd cov = dgp.model.H * lyapunov_solve(dgp.model.M, dgp.model.G) * dgp.model.H.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues().reverse();
    CHECK(ev(0) == doctest::Approx(20.0).epsilon(1e-5));
    CHECK(ev(1) == doctest::Approx(10.0).epsilon(1e-5));
    CHECK(std::abs(ev(2)) < 1e-5);
}

TEST_CASE("simulation: identities, determinism, moments") {
    const auto dgp = make_paper_dgp(40);
    const auto a = simulate_ss(dgp.model, 300, kDefaultBurnIn, 17, dgp.idio);
    const auto b = simulate_ss(dgp.model, 300, kDefaultBurnIn, 17, dgp.idio);
    CHECK(same(a.y.values(), b.y.values()));
    CHECK_FALSE(same(a.y.values(), simulate_ss(dgp.model, 300, kDefaultBurnIn, 18, dgp.idio).y.values()));
    CHECK_FALSE(same(a.y.values(), simulate_ss(dgp.model, 300, kDefaultBurnIn, 17, dgp.idio, 1).y.values()));
    CHECK(same(a.chi.values() + a.xi.values(), a.y.values()));
    CHECK(same(a.chi.values() - a.C.values(), a.e_chi.values()));
    for (Eigen::Index i = 0; i < 10; ++i) CHECK(Eigen::RowVectorXd(a.chi.values().row(i)) == a.weak_factors.row(0));
    for (Eigen::Index i = 10; i < 40; ++i) CHECK(Eigen::RowVectorXd(a.chi.values().row(i)) == a.strong_factors.row(0));

    const Eigen::Index T = 10000;
    const auto big = simulate_ss(dgp.model, T, kDefaultBurnIn, 5, dgp.idio);
    const Eigen::MatrixXd& x = big.state;
    const Eigen::MatrixXd g0 = x * x.transpose() / static_cast<double>(T);
    CHECK((g0 - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 0.05);
    const Eigen::MatrixXd g1 = x.rightCols(T - 1) * x.leftCols(T - 1).transpose() / static_cast<double>(T);
    CHECK((g1 - dgp.model.M).cwiseAbs().maxCoeff() < 0.05);
    const double corr = (big.strong_factors.row(0).array() * big.weak_factors.row(0).array()).mean();
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(T)));

    IdioSpec bad = dgp.idio;
    bad.weights = Eigen::VectorXd::Ones(3);
    CHECK_THROWS((void)simulate_ss(dgp.model, 100, 10, 1, bad));
    CHECK_THROWS_AS((void)simulate_ss(dgp.model, 1, 10, 1, dgp.idio), std::invalid_argument);
}

TEST_CASE("model validation") {
    StateSpaceModel m = make_paper_dgp(12).model;
    CHECK_NOTHROW(m.validate());
    StateSpaceModel wrong = m;
    wrong.G = Eigen::MatrixXd::Ones(3, 1);
    CHECK_THROWS_AS(wrong.validate(), std::invalid_argument);
    StateSpaceModel unstable = m;
    unstable.M = Eigen::Matrix2d::Identity();
    CHECK_THROWS_AS(unstable.validate(), NumericalError);
    StateSpaceModel partition = m;
    partition.r_weak = 5;
    CHECK_THROWS_AS(partition.validate(), std::invalid_argument);
}

TEST_CASE("model file round trip") {
    const auto m = make_paper_dgp(15).model;
    const auto path = std::filesystem::temp_directory_path() / "fseq_model.txt";
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(back.M == m.M);
    CHECK(back.G == m.G);
    CHECK(back.H == m.H);
    CHECK(back.r_strong == m.r_strong);
    CHECK(back.r_weak == m.r_weak);
    CHECK_THROWS_AS((void)load_model(std::filesystem::temp_directory_path() / "fseq_no_model.txt"), DataError);
}

TEST_CASE("shift example") {
    const Eigen::Index T = 4000;
    const auto sim = gen_example_shift(20, T, 3);
    const auto g = sample_autocov(sim.chi, 0).values;
    for (Eigen::Index i = 0; i < 20; ++i)
        for (Eigen::Index j = 0; j < 20; ++j)
            if (i != j) CHECK(std::abs(g(i, j)) < 4.0 / std::sqrt(static_cast<double>(T)));
    const Eigen::MatrixXd& chi = sim.chi.values();
    for (Eigen::Index i = 1; i < 20; ++i) CHECK(chi.row(i).tail(T - 1) == chi.row(i - 1).head(T - 1));
    CHECK(same(gen_example_shift(20, 100, 3).y.values(), gen_example_shift(20, 100, 3).y.values()));
    const auto noisy = gen_example_shift(5, 100, 3, 0.5);
    CHECK(same(noisy.chi.values() + noisy.xi.values(), noisy.y.values()));
    CHECK(noisy.xi.values().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("one-weak example") {
    const auto sim = gen_example_one_weak(8, 200, 4);
    const Eigen::MatrixXd& chi = sim.chi.values();
    for (Eigen::Index i = 2; i < 8; ++i) CHECK(chi.row(i) == chi.row(1));
    CHECK(chi.row(1).tail(199) == chi.row(0).head(199));
    for (Eigen::Index i = 1; i < 8; ++i) CHECK(sim.e_chi.values().row(i).isZero(0.0));
    CHECK(same(sim.chi.values() - sim.C.values(), sim.e_chi.values()));
    CHECK(same(gen_example_one_weak(8, 50, 9).y.values(), gen_example_one_weak(8, 50, 9).y.values()));
}

TEST_CASE("random-walk idiosyncratic example") {
    const auto sim = gen_random_walk_idio(2000, 101, 6, 1.0);
    const Eigen::MatrixXd& e = sim.xi.values();
    for (Eigen::Index t : {10, 50, 100}) {
        const double v = sample_var(e.col(t));
        CHECK(v == doctest::Approx(static_cast<double>(t + 1)).epsilon(0.1));
    }
    CHECK(same(sim.C.values() + sim.xi.values(), sim.y.values()));

    // differenced panel: one diverging eigenvalue, the rest flat
    const auto walk = gen_random_walk_idio(40, 3000, 7, 1.0);
    const Eigen::MatrixXd& y = walk.y.values();
    const Panel dy(Eigen::MatrixXd(y.rightCols(2999) - y.leftCols(2999)));
    const auto rows = static_eigen_profile(dy, 2, {10, 20, 40});
    for (const auto& r : rows) {
        if (r.j == 1) CHECK(r.lambda > static_cast<double>(r.n));
        if (r.j == 2) CHECK(r.lambda < 2.0);
    }
    CHECK(same(gen_random_walk_idio(4, 30, 1).y.values(), gen_random_walk_idio(4, 30, 1).y.values()));
}

TEST_CASE("PBH observability") {
    const Eigen::MatrixXd M = paper_transition();
    CHECK(pbh_observable(Eigen::RowVector2d(1.0, 0.0), M).observable);
    const auto res = pbh_observable(Eigen::RowVector2d(1.0, 0.0), Eigen::Matrix2d{{0.5, 0.0}, {0.0, 0.5}});
    CHECK_FALSE(res.observable);
    REQUIRE(res.witness.has_value());
    CHECK(std::abs(*res.witness - std::complex<double>(0.5, 0.0)) < 1e-10);
    CHECK(pbh_observable(Eigen::Matrix2d::Identity(), M).observable);
    CHECK_THROWS_AS((void)pbh_observable(Eigen::RowVector3d(1, 0, 0), M), std::invalid_argument);
}

TEST_CASE("miniphase check") {
    const auto outside = ma1_model(-0.5);  // zero at z = 2
    CHECK(miniphase_check(outside.M, outside.G, outside.H).miniphase);
    const auto inside = ma1_model(-2.0);  // zero at z = 0.5
    const auto bad = miniphase_check(inside.M, inside.G, inside.H);
    CHECK_FALSE(bad.miniphase);
    CHECK(std::abs(bad.worst_z - std::complex<double>(0.5, 0.0)) < 1e-3);
    CHECK(bad.min_sigma < 1e-6);
    CHECK(bad.sigma_map.rows() == 64);
    CHECK(bad.sigma_map.cols() == 128);

    const Eigen::MatrixXd M = paper_transition();
    const Eigen::MatrixXd G = paper_shock_loading();
    const auto strong = miniphase_check(M, G, Eigen::RowVector2d(1.0, 0.0));
    CHECK_FALSE(strong.miniphase);
    CHECK(std::abs(strong.worst_z) == doctest::Approx(0.9025054 / 0.942922).epsilon(1e-4));
    CHECK(miniphase_check(M, G, Eigen::Matrix2d::Identity()).miniphase);

    // the zero of the transfer makes the system matrix drop rank
    CHECK(system_matrix_sigma_min(inside.M, inside.G, inside.H, {0.5, 0.0}) < 1e-12);
    CHECK(system_matrix_sigma_min(inside.M, inside.G, inside.H, {0.0, 0.5}) > 1e-3);
}

TEST_CASE("simulated panel export") {
    const auto dgp = make_paper_dgp(12);
    const auto sim = simulate_ss(dgp.model, 50, 10, 2, dgp.idio);
    const auto dir = std::filesystem::temp_directory_path() / "fseq_sim_export";
    std::filesystem::remove_all(dir);
    write_simulated_panel(sim, dir);
    for (const char* f : {"y.csv", "chi.csv", "C.csv", "e_chi.csv", "xi.csv", "factors.csv", "shocks.csv"})
        CHECK(std::filesystem::exists(dir / f));
    const Panel y = load_panel_csv(dir / "y.csv", false);
    CHECK((y.values() - sim.y.values()).cwiseAbs().maxCoeff() < 1e-12);
}
