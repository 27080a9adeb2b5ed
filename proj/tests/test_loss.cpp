#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nclab/error.hpp"
#include "nclab/geometry.hpp"
#include "nclab/loss.hpp"
#include "nclab/sampling.hpp"
#include "support.hpp"

using namespace nclab;

namespace {

const LossSpec kMean{LossVariant::InfoNceMean, 1.0};
const LossSpec kSum{LossVariant::InfoNceSum, 1.0};
const LossSpec kTriplet{LossVariant::Triplet, 1.0};

std::vector<double> random_vector(std::mt19937_64& rng, int k, double scale = 2.0) {
    std::normal_distribution<double> n(0.0, scale);
    std::vector<double> t(static_cast<std::size_t>(k));
    for (double& x : t) x = n(rng);
    return t;
}

// Uniform negatives over the other labels, recorded for a hand oracle.
NegativeSource uniform_other_labels(std::span<const int> labels, std::mt19937_64& rng) {
    return [labels, &rng](int anchor, int, std::span<int> out) {
        std::vector<int> pool;
        for (int j = 0; j < static_cast<int>(labels.size()); ++j)
            if (labels[j] != labels[anchor]) pool.push_back(j);
        std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
        for (int& o : out) o = pool[static_cast<std::size_t>(pick(rng))];
    };
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("psi examples") {
    std::vector<double> t(256, -1.5);
    CHECK(std::abs(psi(kMean, t) - 0.201413) < 5e-7);
    const std::vector<double> zero{0.0};
    CHECK(psi(kMean, zero) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const std::vector<double> trip{0.5, -2.0};
    CHECK(psi(kTriplet, trip) == 1.5);
    const std::vector<double> two{0.3, -0.7};
    CHECK(psi(kSum, two) == doctest::Approx(std::log(1.0 + std::exp(0.3) + std::exp(-0.7))).epsilon(1e-14));
    CHECK(psi(LossSpec{LossVariant::InfoNceMean, 2.5}, two) ==
          doctest::Approx(std::log(2.5 + 0.5 * (std::exp(0.3) + std::exp(-0.7)))).epsilon(1e-14));
}

TEST_CASE("loss names and validation") {
    for (LossVariant v : {LossVariant::InfoNceMean, LossVariant::InfoNceSum, LossVariant::Triplet})
        CHECK(parse_loss_variant(to_string(v)) == v);
    CHECK(parse_loss_variant("infonce") == LossVariant::InfoNceMean);
    CHECK_THROWS_AS(parse_loss_variant("spectral"), ConfigurationError);
    CHECK_THROWS_AS(validate(LossSpec{LossVariant::Triplet, 0.0}), ConfigurationError);
    CHECK_THROWS_AS(validate(LossSpec{LossVariant::InfoNceMean, -1.0}), ConfigurationError);
}

TEST_CASE("psi is argument-wise non-decreasing") {
    std::mt19937_64 rng(1);
    for (const LossSpec& spec : {kMean, kSum, kTriplet}) {
        for (int trial = 0; trial < 300; ++trial) {
            const auto t = random_vector(rng, 1 + trial % 7);
            const double base = psi(spec, t);
            for (std::size_t i = 0; i < t.size(); ++i) {
                auto up = t;
                up[i] += 0.1;
                CHECK(psi(spec, up) >= base);
            }
        }
    }
}

TEST_CASE("psi is convex along segments") {
    std::mt19937_64 rng(2);
    for (const LossSpec& spec : {kMean, kSum, kTriplet}) {
        for (int trial = 0; trial < 300; ++trial) {
            const int k = 1 + trial % 6;
            const auto a = random_vector(rng, k), b = random_vector(rng, k);
            std::vector<double> mid(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * a[i] + 0.5 * b[i];
            CHECK(psi(spec, mid) <= 0.5 * psi(spec, a) + 0.5 * psi(spec, b) + 1e-12);
        }
    }
}

TEST_CASE("infonce_mean with equal arguments does not depend on k") {
    for (double t : {-3.0, -1.5, 0.0, 0.7, 4.0}) {
        const double expect = std::log(1.0 + std::exp(t));
        for (int k : {1, 2, 17, 256}) {
            std::vector<double> v(static_cast<std::size_t>(k), t);
            CHECK(std::abs(psi(kMean, v) - expect) < 1e-13);
            CHECK(std::abs(psi_constant(kMean, k, t) - expect) < 1e-13);
        }
    }
}

TEST_CASE("psi overflow safety") {
    std::vector<double> t{700.0, 699.0, -5.0, 650.0};
    CHECK(std::isfinite(psi(kMean, t)));
    CHECK(std::isfinite(psi(kSum, t)));
    CHECK(psi(kMean, t) == doctest::Approx(700.0 + std::log((1.0 + std::exp(-1.0) + std::exp(-50.0)) / 4.0)));
    std::vector<double> g(t.size());
    psi_with_grad(kMean, t, g);
    for (double x : g) CHECK(std::isfinite(x));
}

TEST_CASE("psi_with_grad matches finite differences") {
    std::mt19937_64 rng(3);
    for (const LossSpec& spec : {kMean, kSum, kTriplet}) {
        for (int trial = 0; trial < 50; ++trial) {
            auto t = random_vector(rng, 1 + trial % 5);
            std::vector<double> g(t.size());
            CHECK(psi_with_grad(spec, t, g) == doctest::Approx(psi(spec, t)).epsilon(1e-14));
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (spec.variant == LossVariant::Triplet && std::abs(t[i] + spec.alpha) < 1e-4) continue;
                auto hi = t, lo = t;
                hi[i] += 1e-6;
                lo[i] -= 1e-6;
                CHECK(std::abs((psi(spec, hi) - psi(spec, lo)) / 2e-6 - g[i]) < 1e-7);
            }
        }
    }
}

TEST_CASE("psi_two_level matches the expanded vector") {
    for (const LossSpec& spec : {kMean, kSum, kTriplet}) {
        for (int k : {1, 3, 8}) {
            for (int m = 0; m <= k; ++m) {
                std::vector<double> v(static_cast<std::size_t>(k), -1.5);
                for (int i = 0; i < m; ++i) v[static_cast<std::size_t>(i)] = 0.0;
                CHECK(std::abs(psi_two_level(spec, k, m, 0.0, -1.5) - psi(spec, v)) < 1e-14);
            }
        }
    }
}

TEST_CASE("cl_loss_sample examples") {
    const Eigen::Vector2d z(0.6, 0.8);
    const Eigen::MatrixXd same = z.replicate(1, 3);
    const std::vector<double> zeros(3, 0.0);
    for (const LossSpec& spec : {kMean, kSum, kTriplet})
        CHECK(cl_loss_sample(z, z, same, spec) == doctest::Approx(psi(spec, zeros)).epsilon(1e-15));

    const ClassMeans m = make_etf(3, 2, 0);
    Eigen::MatrixXd negs(2, 4);
    negs << m.col(1), m.col(2), m.col(1), m.col(2);
    const std::vector<double> nc(4, -1.5);
    CHECK(std::abs(cl_loss_sample(m.col(0), m.col(0), negs, kMean) - psi(kMean, nc)) < 1e-14);

    const Eigen::Vector3d a(1, 0, 0), p(0, 1, 0);
    const Eigen::Vector3d n(0, 0, 1);
    CHECK(cl_loss_sample(a, p, n, kMean) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    CHECK_THROWS_AS(cl_loss_sample(a, Eigen::Vector2d(1, 0), n, kMean), DimensionError);
}

TEST_CASE("batch_loss at the ETF configuration") {
    const ClassMeans m = make_etf(3, 2, 4);
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) labels.push_back((i * 7) % 3);
    Eigen::MatrixXd z(2, 30);
    for (int i = 0; i < 30; ++i) z.col(i) = m.col(labels[static_cast<std::size_t>(i)]);
    std::mt19937_64 rng(5);
    const LossValue v = batch_loss(z, labels, kMean, uniform_other_labels(labels, rng), 256);
    CHECK(std::abs(v.value - 0.201413) < 5e-7);
    const std::vector<double> nc(256, -1.5);
    CHECK(std::abs(v.value - psi(kMean, nc)) < 1e-13);
}

TEST_CASE("batch_loss with negatives equal to the anchor") {
    Eigen::MatrixXd z = Eigen::Vector2d(0.3, -0.2).replicate(1, 4);
    const std::vector<int> labels(4, 0);
    const NegativeSource self = [](int anchor, int, std::span<int> out) {
        for (int& o : out) o = anchor;
    };
    CHECK(batch_loss(z, labels, kMean, self, 5).value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("batch_loss two-element batch matches a hand computation") {
    Eigen::MatrixXd z(2, 2);
    z << 0.6, -0.1, 0.8, 0.9;
    const std::vector<int> labels{0, 1};
    std::vector<std::pair<int, int>> drawn;  // (anchor, negative)
    std::mt19937_64 rng(17);
    const NegativeSource ucl = [&](int anchor, int, std::span<int> out) {
        std::uniform_int_distribution<int> pick(0, 1);
        out[0] = pick(rng);
        drawn.emplace_back(anchor, out[0]);
    };
    const LossValue v = batch_loss(z, labels, kMean, ucl, 1);
    REQUIRE(drawn.size() == 2);
    double expect = 0.0;
    for (auto [a, n] : drawn) expect += 0.5 * cl_loss_sample(z.col(a), z.col(a), z.col(n), kMean);
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("per-anchor mean over same-label pairs") {
    // anchors with different class sizes must be weighted equally
    Eigen::MatrixXd z(2, 3);
    z << 1, 0.2, -0.5, 0, 0.3, 0.1;
    const std::vector<int> labels{0, 0, 1};
    const NegativeSource fixed = [&](int anchor, int, std::span<int> out) {
        for (int& o : out) o = labels[static_cast<std::size_t>(anchor)] == 0 ? 2 : 0;
    };
    const LossValue v = batch_loss(z, labels, kTriplet, fixed, 2);
    auto l = [&](int a, int p) {
        Eigen::MatrixXd negs = z.col(labels[static_cast<std::size_t>(a)] == 0 ? 2 : 0).replicate(1, 2);
        return cl_loss_sample(z.col(a), z.col(p), negs, kTriplet);
    };
    const double expect = ((l(0, 0) + l(0, 1)) / 2 + (l(1, 0) + l(1, 1)) / 2 + l(2, 2)) / 3;
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("pair plans enumerate same-label pairs in order") {
    const std::vector<int> labels{1, 0, 1};
    int calls = 0;
    const NegativeSource src = [&](int, int, std::span<int> out) {
        for (int& o : out) o = calls;
        ++calls;
    };
    const PairPlan plan = plan_label_pairs(labels, 2, src);
    CHECK(plan.anchors == std::vector<int>{0, 0, 1, 2, 2});
    CHECK(plan.positives == std::vector<int>{0, 2, 1, 0, 2});
    CHECK(plan.negatives_of(3)[1] == 3);
}

TEST_CASE("pair_loss gradient matches finite differences") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 0.5);
    const std::vector<int> labels{0, 1, 2, 0, 1, 2, 0};
    Eigen::MatrixXd z(3, 7);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
    for (const LossSpec& spec : {kMean, kSum, kTriplet}) {
        const PairPlan plan = plan_label_pairs(labels, 4, uniform_other_labels(labels, rng));
        Eigen::MatrixXd grad;
        const double base = pair_loss(z, plan, spec, &grad).value;
        CHECK(base == doctest::Approx(pair_loss(z, plan, spec).value).epsilon(1e-15));
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            Eigen::MatrixXd hi = z, lo = z;
            hi.data()[i] += 1e-6;
            lo.data()[i] -= 1e-6;
            const double fd = (pair_loss(hi, plan, spec).value - pair_loss(lo, plan, spec).value) / 2e-6;
            CHECK(std::abs(fd - grad.data()[i]) < 1e-7);
        }
    }
}

TEST_CASE("batch_loss reports anchors with no eligible negative") {
    Eigen::MatrixXd z = Eigen::MatrixXd::Ones(2, 3);
    const std::vector<int> labels{0, 0, 0};
    Rng rng(1);
    const NegativeSource src =
        minibatch_negative_source(z, labels, NegativeMode::SupervisedExclude, HardeningSpec::none(), rng);
    try {
        batch_loss(z, labels, kMean, src, 2);
        FAIL("expected an error");
    } catch (const ConfigurationError& e) {
        CHECK(std::string(e.what()).find("anchor 0") != std::string::npos);
    }
}

TEST_CASE("batch_loss is invariant to the batch partition at the ETF configuration") {
    const ClassMeans m = make_etf(4, 3, 8);
    const std::vector<double> nc(6, -4.0 / 3.0);
    const double expect = psi(kSum, nc);
    for (int size : {4, 8, 20}) {
        std::vector<int> labels;
        for (int i = 0; i < size; ++i) labels.push_back(i % 4);
        Eigen::MatrixXd z(3, size);
        for (int i = 0; i < size; ++i) z.col(i) = m.col(labels[static_cast<std::size_t>(i)]);
        std::mt19937_64 rng(static_cast<std::uint64_t>(size));
        CHECK(std::abs(batch_loss(z, labels, kSum, uniform_other_labels(labels, rng), 6).value - expect) < 1e-13);
    }
}

}  // TEST_SUITE
