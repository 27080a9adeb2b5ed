#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "nclab/bounds.hpp"
#include "nclab/csv.hpp"
#include "nclab/error.hpp"
#include "support.hpp"

using namespace nclab;

namespace {

const LossSpec kMean{LossVariant::InfoNceMean, 1.0};
const LossSpec kSum{LossVariant::InfoNceSum, 1.0};
const LossSpec kTriplet{LossVariant::Triplet, 1.0};

// Binomial mixture evaluated with lgamma, an independent route to the UCL bound.
double ucl_lgamma_oracle(int c, int k, const LossSpec& spec) {
    const double a = -static_cast<double>(c) / (c - 1);
    double total = 0.0;
    for (int m = 0; m <= k; ++m) {
        const double logw = std::lgamma(k + 1.0) - std::lgamma(m + 1.0) - std::lgamma(k - m + 1.0) +
                            m * std::log(1.0 / c) + (k - m) * std::log1p(-1.0 / c);
        std::vector<double> t(static_cast<std::size_t>(k), a);
        for (int i = 0; i < m; ++i) t[static_cast<std::size_t>(i)] = 0.0;
        total += std::exp(logw) * psi(spec, t);
    }
    return total;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("supervised bound examples") {
    CHECK(std::abs(scl_lower_bound(3, 256, kMean).value - 0.201413) < 5e-7);
    // the published table prints this value cut to four decimals
    CHECK(std::floor(scl_lower_bound(100, 256, kMean).value * 1e4) / 1e4 == doctest::Approx(0.3105).epsilon(1e-12));
    CHECK(scl_lower_bound(2, 4, kTriplet).value == 0.0);
    // infonce_mean at equal arguments is log(1 + e^{-C/(C-1)})
    CHECK(std::abs(scl_lower_bound(3, 256, kMean).value - std::log1p(std::exp(-1.5))) < 1e-15);
    CHECK(std::abs(scl_lower_bound(100, 256, kMean).value - std::log1p(std::exp(-100.0 / 99.0))) < 1e-15);
    CHECK_THROWS_AS(scl_lower_bound(1, 4, kMean), ConfigurationError);
    CHECK_THROWS_AS(scl_lower_bound(3, 0, kMean), ConfigurationError);
}

TEST_CASE("unsupervised bound examples") {
    const BoundResult u = ucl_lower_bound(3, 256, kMean);
    CHECK(std::abs(u.value - 0.3935) < 1e-3);
    CHECK(std::abs(u.value - ucl_lgamma_oracle(3, 256, kMean)) < 1e-12);
    CHECK(u.method == BoundMethod::Binomial);

    const double c2 = 0.5 * (std::log1p(std::exp(-2.0)) + std::log(2.0));
    CHECK(std::abs(ucl_lower_bound(2, 1, kMean, BoundMethod::Enumeration).value - c2) < 1e-15);
    CHECK(std::abs(ucl_lower_bound(2, 1, kMean).value - 0.410038) < 5e-7);
    CHECK(ucl_lower_bound(4, 1, kTriplet).value == 0.25);
    CHECK(ucl_lower_bound(4, 1, kTriplet, BoundMethod::Enumeration).value == 0.25);
}

TEST_CASE("k = 1 closed form examples") {
    CHECK(std::abs(ucl_lb_closed_form_k1(2, kMean).value - 0.410038) < 5e-7);
    const double c3 = (2.0 * std::log1p(std::exp(-1.5)) + std::log(2.0)) / 3.0;
    CHECK(std::abs(ucl_lb_closed_form_k1(3, kMean).value - c3) < 1e-15);
    CHECK(std::abs(ucl_lb_closed_form_k1(3, kMean).value - 0.365325) < 5e-7);
    CHECK(ucl_lb_closed_form_k1(10, kTriplet).value == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(ucl_lb_closed_form_k1(3, kMean).method == BoundMethod::ClosedForm);
}

TEST_CASE("binomial and enumeration agree for small C and k") {
    for (const LossSpec& spec : {kMean, kSum, kTriplet, LossSpec{LossVariant::InfoNceMean, 0.3}}) {
        for (int c = 2; c <= 4; ++c) {
            for (int k = 1; k <= 4; ++k) {
                const double b = ucl_lower_bound(c, k, spec, BoundMethod::Binomial).value;
                const double e = ucl_lower_bound(c, k, spec, BoundMethod::Enumeration).value;
                CHECK(std::abs(b - e) < 1e-12);
            }
        }
    }
}

TEST_CASE("enumeration refuses oversized label spaces") {
    CHECK_THROWS_AS(ucl_lower_bound(10, 6, kMean, BoundMethod::Enumeration), EnumerationTooLarge);
    CHECK_NOTHROW(ucl_lower_bound(10, 5, kMean, BoundMethod::Enumeration));
}

TEST_CASE("k = 1 closed form matches enumeration") {
    for (const LossSpec& spec : {kMean, kSum, kTriplet})
        for (int c = 2; c <= 20; ++c)
            CHECK(std::abs(ucl_lb_closed_form_k1(c, spec).value -
                           ucl_lower_bound(c, 1, spec, BoundMethod::Enumeration).value) < 1e-12);
}

TEST_CASE("binomial route is accurate for large k") {
    for (int k : {61, 200, 1024})
        CHECK(std::abs(ucl_lower_bound(5, k, kMean).value - ucl_lgamma_oracle(5, k, kMean)) < 1e-11);
    // the triplet bound counts expected collisions: k / C
    for (int c : {2, 3, 7})
        for (int k : {1, 5, 100}) CHECK(std::abs(ucl_lower_bound(c, k, kTriplet).value - double(k) / c) < 1e-13 * k);
}

TEST_CASE("unsupervised bound is never below the supervised bound") {
    // a class collision turns an argument from -C/(C-1) into 0, and psi is non-decreasing
    for (const LossSpec& spec : {kMean, kSum, kTriplet})
        for (int c = 2; c <= 30; c += 3)
            for (int k : {1, 2, 5, 32, 256})
                CHECK(ucl_lower_bound(c, k, spec).value >= scl_lower_bound(c, k, spec).value - 1e-15);
}

TEST_CASE("k = 1 bound decreases in C up to 100") {
    for (const LossSpec& spec : {kMean, kSum, kTriplet})
        for (int c = 2; c <= 100; ++c)
            CHECK(ucl_lb_closed_form_k1(c, spec).value - ucl_lb_closed_form_k1(c + 1, spec).value >= 0.0);
}

TEST_CASE("sweep monotonicity") {
    std::vector<int> cs, ks;
    for (int c = 2; c <= 20; ++c) cs.push_back(c);
    for (int k = 1; k <= 5; ++k) ks.push_back(k);
    for (const LossSpec& spec : {kMean, kTriplet}) {
        const auto rows = lb_sweep(cs, ks, spec);
        REQUIRE(rows.size() == 95);
        CHECK(rows[0].num_classes == 2);
        CHECK(rows[1].k == 2);
        const auto violations = sweep_violations(rows);
        for (const auto& v : violations) MESSAGE(v.property << " C=" << v.num_classes << " k=" << v.k);
        CHECK(violations.empty());
    }
}

TEST_CASE("sweep violations are reported") {
    SweepRow a{2, 1, kMean, 0.1, 0.5}, b{3, 1, kMean, 0.05, 0.6};
    const std::vector<SweepRow> rows{a, b};
    const auto v = sweep_violations(rows);
    CHECK(v.size() == 2);
}

TEST_CASE("sweep CSV layout") {
    const auto dir = test::scratch("bounds_csv");
    const std::vector<int> cs{2, 3}, ks{1, 2};
    const auto rows = lb_sweep(cs, ks, kTriplet);
    const std::string path = (dir / "sweep.csv").string();
    write_sweep_csv(path, rows);
    const auto table = read_csv(path);
    REQUIRE(table.size() == 5);
    CHECK(table[0] == std::vector<std::string>{"C", "k", "variant", "alpha", "scl_bound", "ucl_bound"});
    CHECK(table[1][0] == "2");
    CHECK(table[1][2] == "triplet");
    CHECK(parse_real(table[1][5]) == 0.5);
    CHECK(parse_real(table[3][5]) == 1.0 / 3.0);
}

TEST_CASE("log_binomial") {
    CHECK(std::abs(log_binomial(10, 3) - std::log(120.0)) < 1e-13);
    CHECK(log_binomial(5, 0) == 0.0);
}

}  // TEST_SUITE
