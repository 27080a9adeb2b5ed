#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nclab/error.hpp"
#include "nclab/geometry.hpp"
#include "support.hpp"

using namespace nclab;

namespace {

Eigen::MatrixXd etf_gram(int c) {
    return (static_cast<double>(c) / (c - 1)) * Eigen::MatrixXd::Identity(c, c) -
           Eigen::MatrixXd::Constant(c, c, 1.0 / (c - 1));
}

// Eigenvalues of the population covariance, largest first; a route that does
// not go through an SVD.
Eigen::VectorXd covariance_spectrum_oracle(const Eigen::MatrixXd& means) {
    const Eigen::VectorXd mean = means.rowwise().mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(means.rows(), means.rows());
    for (Eigen::Index j = 0; j < means.cols(); ++j) cov += (means.col(j) - mean) * (means.col(j) - mean).transpose();
    cov /= static_cast<double>(means.cols());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd ev = es.eigenvalues().reverse().cwiseMax(0.0);
    return ev / ev(0);
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("make_etf small cases") {
    const ClassMeans m2 = make_etf(2, 1, 0);
    CHECK(std::abs(std::abs(m2(0, 0)) - 1.0) < 1e-15);
    CHECK(m2(0, 0) == doctest::Approx(-m2(0, 1)).epsilon(1e-15));

    const ClassMeans m3 = make_etf(3, 2, 0);
    CHECK(test::max_abs(m3.transpose() * m3 - (1.5 * Eigen::MatrixXd::Identity(3, 3) -
                                               0.5 * Eigen::MatrixXd::Ones(3, 3))) < 1e-12);

    const ClassMeans m4 = make_etf(4, 3, 0);
    const Eigen::MatrixXd g = m4.transpose() * m4;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(g(i, j) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m4);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(svd.singularValues()(i) - 1.154700538379252) < 1e-12);
}

TEST_CASE("make_etf Gram identity over many sizes") {
    for (int c = 2; c <= 64; ++c) {
        for (int d : {c - 1, c, 2 * c}) {
            const ClassMeans m = make_etf(c, d, static_cast<std::uint64_t>(c * 1000 + d));
            REQUIRE(m.rows() == d);
            REQUIRE(m.cols() == c);
            CHECK(test::max_abs(m.transpose() * m - etf_gram(c)) < 1e-12);
            const NcMetrics nc = nc_metrics(m);
            CHECK(nc.zero_sum < 1e-9);
            CHECK(nc.unit_norm < 1e-9);
            CHECK(nc.equal_inner_product < 1e-9);
        }
    }
}

TEST_CASE("make_etf rotation and dimension errors") {
    CHECK_THROWS_AS(make_etf(4, 2, 0), DimensionError);
    const ClassMeans plain = make_etf(3, 2, 1, EtfRotation::Never);
    const ClassMeans rotated = make_etf(3, 2, 1, EtfRotation::Always);
    CHECK(test::max_abs(plain - rotated) > 1e-6);
    CHECK(test::max_abs(rotated.transpose() * rotated - etf_gram(3)) < 1e-12);
    // padded coordinates are mixed in when d > C-1
    const ClassMeans padded = make_etf(3, 5, 2);
    CHECK(padded.bottomRows(3).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(test::max_abs(make_etf(3, 5, 2) - padded) == 0.0);
}

TEST_CASE("random_orthogonal is orthogonal") {
    const Eigen::MatrixXd q = random_orthogonal(7, 3);
    CHECK(test::max_abs(q.transpose() * q - Eigen::MatrixXd::Identity(7, 7)) < 1e-12);
}

TEST_CASE("normalize examples") {
    const Eigen::Vector2d a(3, 4), b(0.3, 0.4), c(2, 0);
    CHECK(test::max_abs(normalize(a, Normalization::UnitSphere) - Eigen::Vector2d(0.6, 0.8)) < 1e-15);
    CHECK(test::max_abs(normalize(b, Normalization::UnitBall) - b) == 0.0);
    CHECK(test::max_abs(normalize(a, Normalization::UnitBall) - Eigen::Vector2d(0.6, 0.8)) < 1e-15);
    CHECK(test::max_abs(normalize(c, Normalization::None) - Eigen::Vector2d(std::sqrt(2.0), 0)) < 1e-15);
    CHECK_THROWS_AS(normalize(Eigen::Vector2d(0, 0), Normalization::UnitSphere), DegenerateInputError);
    CHECK(normalize(Eigen::Vector2d(0, 0), Normalization::UnitBall).norm() == 0.0);
    // boundary point keeps the identity branch
    const Eigen::Vector2d unit(1, 0);
    CHECK(test::max_abs(normalize(unit, Normalization::UnitBall) - unit) == 0.0);
}

TEST_CASE("normalize is idempotent and respects norms") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 2.0);
    for (int trial = 0; trial < 500; ++trial) {
        Eigen::VectorXd z(5);
        for (int i = 0; i < 5; ++i) z(i) = n(rng);
        for (Normalization mode : {Normalization::UnitBall, Normalization::UnitSphere}) {
            const Embedding once = normalize(z, mode);
            CHECK(test::max_abs(normalize(once, mode) - once) < 1e-12);
            if (mode == Normalization::UnitSphere) CHECK(std::abs(once.norm() - 1.0) <= 1e-12);
            else CHECK(once.norm() <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("normalization names round trip") {
    for (Normalization m : {Normalization::UnitBall, Normalization::UnitSphere, Normalization::None})
        CHECK(parse_normalization(to_string(m)) == m);
    CHECK_THROWS_AS(parse_normalization("ball"), ConfigurationError);
}

TEST_CASE("class_means examples") {
    Eigen::MatrixXd z(2, 3);
    z << 1, 0, 5, 0, 1, 7;
    const std::vector<int> labels{0, 0, 1};
    const ClassMeans m = class_means(z, labels, 2);
    CHECK(test::max_abs(m.col(0) - Eigen::Vector2d(0.5, 0.5)) == 0.0);
    CHECK(test::max_abs(m.col(1) - Eigen::Vector2d(5, 7)) == 0.0);

    const std::vector<int> one_each{0, 1, 2};
    CHECK(test::max_abs(class_means(z, one_each, 3) - z) == 0.0);

    Eigen::MatrixXd same = Eigen::Vector2d(0.25, -1.0).replicate(1, 4);
    const std::vector<int> l4{0, 1, 1, 0};
    const ClassMeans ms = class_means(same, l4, 2);
    CHECK(test::max_abs(ms - Eigen::Vector2d(0.25, -1.0).replicate(1, 2)) == 0.0);
}

TEST_CASE("class_means empty classes are listed") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Ones(2, 2);
    const std::vector<int> labels{0, 2};
    try {
        class_means(z, labels, 4);
        FAIL("expected an error");
    } catch (const ConfigurationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find('1') != std::string::npos);
        CHECK(msg.find('3') != std::string::npos);
    }
    const std::vector<int> bad{0, 5};
    CHECK_THROWS(class_means(z, bad, 2));
    const std::vector<int> short_labels{0};
    CHECK_THROWS_AS(class_means(z, short_labels, 2), DimensionError);
}

TEST_CASE("nc_metrics examples") {
    const NcMetrics etf = nc_metrics(make_etf(3, 2, 0));
    CHECK(etf.zero_sum < 1e-12);
    CHECK(etf.unit_norm < 1e-12);
    CHECK(etf.equal_inner_product < 1e-12);

    Eigen::Matrix2d orth;
    orth << 1, 0, 0, 1;
    const NcMetrics a = nc_metrics(orth);
    CHECK(a.zero_sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(a.unit_norm == 0.0);
    CHECK(a.equal_inner_product == doctest::Approx(1.0).epsilon(1e-15));

    Eigen::Matrix2d equal;
    equal << 1, 1, 0, 0;
    const NcMetrics b = nc_metrics(equal);
    CHECK(b.zero_sum == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(b.unit_norm == 0.0);
    CHECK(b.equal_inner_product == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("dc_spectrum examples") {
    const DcSpectrum e3 = dc_spectrum(make_etf(3, 2, 0));
    REQUIRE(e3.values.size() == 2);
    CHECK(e3.values(0) == 1.0);
    CHECK(std::abs(e3.values(1) - 1.0) < 1e-12);
    CHECK_FALSE(e3.degenerate);

    Eigen::Matrix2d collinear;
    collinear << 1, -1, 0, 0;
    const DcSpectrum c = dc_spectrum(collinear);
    CHECK(c.values(0) == 1.0);
    CHECK(std::abs(c.values(1)) < 1e-15);

    const DcSpectrum e4 = dc_spectrum(make_etf(4, 3, 5));
    REQUIRE(e4.values.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(e4.values(i) - 1.0) < 1e-12);

    const DcSpectrum deg = dc_spectrum(Eigen::Vector3d(0.2, 0.1, 0.0).replicate(1, 4));
    CHECK(deg.degenerate);
    CHECK(deg.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(deg.values.size() == 3);
}

TEST_CASE("dc_spectrum matches an eigenvalue oracle and has length min(d, C)") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto [d, c] : {std::pair{5, 3}, std::pair{2, 6}, std::pair{4, 4}}) {
        Eigen::MatrixXd m(d, c);
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < d; ++i) m(i, j) = n(rng);
        const DcSpectrum s = dc_spectrum(m);
        REQUIRE(s.values.size() == std::min(d, c));
        const Eigen::VectorXd oracle = covariance_spectrum_oracle(m);
        for (Eigen::Index i = 0; i < s.values.size(); ++i) CHECK(std::abs(s.values(i) - oracle(i)) < 1e-10);
        CHECK(s.values(0) == 1.0);
        CHECK(s.values.minCoeff() >= 0.0);
        CHECK(s.values.maxCoeff() <= 1.0);
        for (Eigen::Index i = 1; i < s.values.size(); ++i) CHECK(s.values(i) <= s.values(i - 1));
    }
}

TEST_CASE("metrics are rotation invariant") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd m(4, 5);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
        const Eigen::MatrixXd q = random_orthogonal(4, 100 + static_cast<std::uint64_t>(trial));
        const NcMetrics a = nc_metrics(m), b = nc_metrics(q * m);
        CHECK(std::abs(a.zero_sum - b.zero_sum) < 1e-10);
        CHECK(std::abs(a.unit_norm - b.unit_norm) < 1e-10);
        CHECK(std::abs(a.equal_inner_product - b.equal_inner_product) < 1e-10);
        CHECK(test::max_abs(dc_spectrum(m).values - dc_spectrum(q * m).values) < 1e-10);
    }
}

TEST_CASE("class means CSV round trip") {
    const auto dir = test::scratch("geometry_csv");
    const ClassMeans m = make_etf(4, 5, 3);
    const std::string path = (dir / "means.csv").string();
    write_class_means_csv(path, m);
    const ClassMeans back = read_class_means_csv(path);
    REQUIRE(back.rows() == 5);
    REQUIRE(back.cols() == 4);
    CHECK(test::max_abs(back - m) < 1e-15);
}

}  // TEST_SUITE
