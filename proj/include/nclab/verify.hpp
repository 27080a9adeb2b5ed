#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nclab/bounds.hpp"
#include "nclab/geometry.hpp"
#include "nclab/loss.hpp"
#include "nclab/sampling.hpp"

namespace nclab {

// Which pair of losses is compared: SCL vs HSCL, or UCL vs HUCL.
enum class Setting { Supervised, Unsupervised };

std::string to_string(Setting setting);
Setting parse_setting(const std::string& name);

struct InequalityReport {
    double lhs_estimate = 0.0;  // hardened / tilted side
    double rhs_estimate = 0.0;  // plain side
    double lhs_stderr = 0.0;
    double rhs_stderr = 0.0;
    // Standard error of lhs - rhs. Monte-Carlo draws share anchors and
    // positives, so this is the paired-difference error, not a sum in quadrature.
    double combined_stderr = 0.0;
    long long n_draws = 0;
    bool exact = false;
    bool holds_within_3se = false;
};

/// Monte-Carlo comparison of the hardened and plain expected losses over the
/// empirical distribution of an embedding table (columns). The anchor is
/// uniform over the table, the positive uniform over samples with the same
/// label, and k negatives are drawn IID from the reference pool (other labels
/// for Supervised, everything for Unsupervised) or from its tilted version.
/// Both samplers use identically seeded streams, so a flat hardening gives
/// lhs == rhs bit for bit.
InequalityReport check_theorem1(const Eigen::Ref<const Eigen::MatrixXd>& table, std::span<const int> labels,
                                Setting setting, const HardeningSpec& hardening, const LossSpec& spec,
                                int k, int n_mc, std::uint64_t seed);

struct ExactLosses {
    double hardened = 0.0;
    double plain = 0.0;
    long long multisets = 0;  // negative multisets visited over all anchors
};

// Work budget for theorem1_exact, in (multiset, positive) evaluations.
inline constexpr double kMaxExactWork = 4e9;

/// Same two expectations as check_theorem1, computed exactly. Negatives are
/// enumerated as multisets of the eligible pool with multinomial weights, which
/// is exact because every psi variant is permutation symmetric and the
/// hardening factorizes over negatives.
ExactLosses theorem1_exact(const Eigen::Ref<const Eigen::MatrixXd>& table, std::span<const int> labels,
                           Setting setting, const HardeningSpec& hardening, const LossSpec& spec, int k);

/// Hardened loss estimated by reweighting plain draws with prod eta / gamma,
/// gamma computed exactly over the finite pool.
GammaEstimate theorem1_importance_weighted(const Eigen::Ref<const Eigen::MatrixXd>& table,
                                           std::span<const int> labels, Setting setting,
                                           const HardeningSpec& hardening, const LossSpec& spec, int k,
                                           int n_mc, std::uint64_t seed);

using TupleFunction = std::function<double(std::span<const double>)>;

// Largest support^k visited by check_harris.
inline constexpr double kMaxHarrisTuples = 1e6;

/// Exact tilted vs plain expectation of `payoff` over u_{1:k} IID from a
/// finite distribution; the tilted law is weight(u) prod p(u_i) / gamma.
/// lhs is the tilted expectation. Holds when lhs >= rhs up to 1e-12 relative rounding.
InequalityReport check_harris(const TupleFunction& weight, const TupleFunction& payoff,
                              std::span<const double> support, std::span<const double> probabilities, int k);

struct NcOptimalityReport {
    double achieved = 0.0;
    double bound = 0.0;
    double gap = 0.0;
};

// Compositions visited by collapsed_encoder_loss.
inline constexpr double kMaxCompositions = 2e6;

/// Exact expected loss of the encoder that sends every sample of class j to
/// column j of `means` (zero within-class variance, equiprobable classes,
/// label-based positives). Negative values that coincide (within 1e-14) are
/// merged so the ETF case collapses to binomial sums.
double collapsed_encoder_loss(const Eigen::Ref<const ClassMeans>& means, int k, const LossSpec& spec,
                              Setting setting);

/// Collapsed encoder on a normalized simplex ETF against the matching bound.
NcOptimalityReport check_nc_optimality(int num_classes, int k, const LossSpec& spec, Setting setting);

/// Collapsed encoder on arbitrary means against the matching bound.
NcOptimalityReport check_collapsed_encoder(const Eigen::Ref<const ClassMeans>& means, int k,
                                           const LossSpec& spec, Setting setting);

struct BatchedReport {
    double value = 0.0;  // n_b-weighted mean of the per-batch losses
    double bound = 0.0;
    double gap = 0.0;
    std::vector<double> per_batch;
};

/// Empirical loss of consecutive disjoint batches of the given sizes over the
/// columns of `embeddings`, supervised exclusion and uniform negatives.
BatchedReport batched_empirical_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                                     std::span<const int> labels, std::span<const int> batch_sizes,
                                     const LossSpec& spec, int k, std::uint64_t seed);

/// Collapsed ETF encoder on a shuffled class-balanced dataset split into the
/// given (unequal) batches; value should equal the supervised bound.
BatchedReport check_batched_equality(int num_classes, int per_class, std::span<const int> batch_sizes,
                                     int k, const LossSpec& spec, std::uint64_t seed = 0);

}  // namespace nclab
