#include "doctest.h"

#include "fseq/error.hpp"
#include "fseq/panel.hpp"
#include "fseq/rng.hpp"

#include <cmath>
#include <fstream>

using namespace fseq;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "fseq_test_panel";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
    std::ofstream(p) << s;
}

}  // namespace

TEST_CASE("panel construction validates shape, values and labels") {
    CHECK_THROWS_AS(Panel(Eigen::MatrixXd(1, 1)), DataError);
    Eigen::MatrixXd v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    Panel p(v);
    CHECK(p.n() == 2);
    CHECK(p.T() == 3);
    CHECK(p.labels() == std::vector<std::string>{"y1", "y2"});
    CHECK_THROWS((void)Panel(v, {"a", "a"}));
    v(0, 1) = std::nan("");
    CHECK_THROWS_AS((void)Panel(v), DataError);
}

TEST_CASE("csv loading: plain, tcode row, missing and malformed cells") {
    const auto plain = scratch("plain.csv");
    write_text(plain, "time,a,b\n1,1.0,2.0\n2,3.0,4.0\n3,5.0,6.0\n");
    const Panel p = load_panel_csv(plain, false);
    CHECK(p.n() == 2);
    CHECK(p.T() == 3);
    CHECK(p.values()(1, 2) == 6.0);
    CHECK(p.labels()[0] == "a");

    const auto coded = scratch("coded.csv");
    write_text(coded, "sasdate,a,b\nTransform:,5,5\n2000-01-01,1,2\n2000-02-01,2,4\n2000-03-01,4,8\n");
    const Panel c = load_panel_csv(coded, true);
    CHECK(c.tcodes() == std::vector<int>{5, 5});
    CHECK(c.time_label(0) == "2000-01-01");

    const auto missing = scratch("missing.csv");
    write_text(missing, "time,a,b\n1,1,2\n2,NA,4\n3,5,6\n");
    try {
        (void)load_panel_csv(missing, false);
        FAIL("expected a missing-value error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("a") != std::string::npos);
        CHECK(msg.find("2") != std::string::npos);
    }

    const auto bad = scratch("bad.csv");
    write_text(bad, "time,a,b\n1,1,2\n2,x,4\n");
    CHECK_THROWS_AS((void)load_panel_csv(bad, false), DataError);

    const auto ragged = scratch("ragged.csv");
    write_text(ragged, "time,a,b\n1,1,2\n2,3\n");
    CHECK_THROWS_AS((void)load_panel_csv(ragged, false), DataError);

    CHECK_THROWS_AS((void)load_panel_csv(scratch("does_not_exist.csv"), false), DataError);
}

TEST_CASE("rows are ordered by time") {
    const auto f = scratch("unsorted.csv");
    write_text(f, "time,a\n2001:03,3\n2001:01,1\n2001:02,2\n");
    const Panel p = load_panel_csv(f, false);
    CHECK(p.values()(0, 0) == 1.0);
    CHECK(p.values()(0, 2) == 3.0);
    CHECK(parse_time_index("2001:02") == parse_time_index("2001-02-15"));
    CHECK(parse_time_index("17") == 17);
}

TEST_CASE("transform codes") {
    const std::vector<double> geo{1, 2, 4, 8};
    const auto d = apply_tcode(geo, 5);
    REQUIRE(d.size() == 3);
    for (double x : d) CHECK(x == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(apply_tcode(geo, 1) == geo);
    CHECK(apply_tcode({1, 4, 9, 16}, 3) == std::vector<double>{2, 2});
    CHECK_THROWS(apply_tcode({1, -1}, 4));
    CHECK_THROWS(apply_tcode(geo, 8));
    CHECK(apply_tcode(geo, 7).size() == 2);
    CHECK(tcode_lag_loss(1) == 0);
    CHECK(tcode_lag_loss(5) == 1);
    CHECK(tcode_lag_loss(6) == 2);

    Eigen::MatrixXd raw(2, 4);
    raw << 1, 2, 4, 8, 1, 2, 3, 4;
    const Panel p = apply_tcodes(Panel(raw).with_tcodes({5, 1}));
    CHECK(p.T() == 3);
    CHECK(p.values()(1, 0) == 2.0);  // trimmed to the common start
}

TEST_CASE("standardize") {
    Eigen::MatrixXd v(2, 3);
    v << 1, 2, 3, 2, 7, 3;
    const Panel z = standardize(Panel(v));
    for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(std::abs(z.values().row(i).mean()) < 1e-14);
        CHECK(z.values().row(i).squaredNorm() / 3.0 == doctest::Approx(1.0).epsilon(1e-13));
    }
    const Panel zz = standardize(z);
    CHECK((zz.values() - z.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((zz.destandardized().values() - v).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd c(2, 3);
    c << 1, 2, 3, 5, 5, 5;
    try {
        (void)standardize(Panel(c));
        FAIL("expected a degenerate-series error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("y2") != std::string::npos);
    }
}

TEST_CASE("sample autocovariance") {
    RngStream rng(7, 0, Stream::Auxiliary);
    const Eigen::MatrixXd noise = rng.normal_matrix(4, 2000);
    const Panel p(noise);
    const auto g3 = sample_autocov(p, 3);
    CHECK(g3.lag == 3);
    CHECK(g3.values.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(2000.0));
    CHECK(sample_autocov(p, -3).values == g3.values.transpose());

    const Panel z = standardize(p);
    const auto g0 = sample_autocov(z, 0);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(g0.values(i, i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((g0.values - g0.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g0.values);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);

    // divisor T: a two-point panel has Gamma(1) = y_2 y_1 / 2
    Eigen::MatrixXd two(1, 2);
    two << 2, 3;
    CHECK(sample_autocov(Panel(two), 1).values(0, 0) == doctest::Approx(3.0));

    CHECK_THROWS((void)sample_autocov(p, 2000));
}

TEST_CASE("load, standardize, write, load round trip") {
    RngStream rng(11, 0, Stream::Auxiliary);
    const Panel z = standardize(Panel(rng.normal_matrix(3, 50)));
    const auto f = scratch("roundtrip.csv");
    write_panel_csv(z, f);
    const Panel back = load_panel_csv(f, false);
    CHECK((back.values() - z.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(back.labels() == z.labels());

    const auto f2 = scratch("roundtrip_codes.csv");
    write_panel_csv(z.with_tcodes({1, 2, 5}), f2, true);
    CHECK(load_panel_csv(f2, true).tcodes() == std::vector<int>{1, 2, 5});
}
