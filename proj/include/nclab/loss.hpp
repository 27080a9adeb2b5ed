#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nclab {

// psi_k variants. InfoNceMean is log(alpha + (1/k) sum e^t), the form used by the
// training loop; InfoNceSum is log(alpha + sum e^t). The two differ only by
// the 1/k inside the logarithm and both are kept.
enum class LossVariant { InfoNceMean, InfoNceSum, Triplet };

struct LossSpec {
    LossVariant variant = LossVariant::InfoNceMean;
    double alpha = 1.0;
};

std::string to_string(LossVariant variant);
LossVariant parse_loss_variant(const std::string& name);
void validate(const LossSpec& spec);

/// Outer loss psi_k(t_1..t_k). Convex and argument-wise non-decreasing for all
/// variants; exponentials are shifted by the largest exponent so entries up to
/// ~700 stay finite.
double psi(const LossSpec& spec, std::span<const double> t);

// Value and gradient in one pass; grad must have the same length as t.
double psi_with_grad(const LossSpec& spec, std::span<const double> t, std::span<double> grad);

// psi with `count_a` arguments equal to a and `k - count_a` equal to b.
double psi_two_level(const LossSpec& spec, int k, int count_a, double a, double b);

// psi of k copies of value.
inline double psi_constant(const LossSpec& spec, int k, double value) {
    return psi_two_level(spec, k, k, value, value);
}

/// l_k(z, z+, z-_{1:k}) = psi_k(z^T(z-_1 - z+), ..., z^T(z-_k - z+)).
/// Negatives are the columns of `negatives`.
double cl_loss_sample(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                      const Eigen::Ref<const Eigen::VectorXd>& positive,
                      const Eigen::Ref<const Eigen::MatrixXd>& negatives, const LossSpec& spec);

struct LossValue {
    double value = 0.0;
    int per_anchor_count = 0;
};

// Draws k negative indices for the (anchor, positive) pair into `out`.
using NegativeSource = std::function<void(int anchor, int positive, std::span<int> out)>;

// Anchor/positive pairs over the columns of an embedding matrix together with
// the k negative column indices drawn for each pair. Pairs are grouped by
// anchor in ascending order.
struct PairPlan {
    int k = 0;
    std::vector<int> anchors;
    std::vector<int> positives;
    std::vector<int> negatives;  // pairs * k, row-major by pair

    std::size_t size() const { return anchors.size(); }
    std::span<const int> negatives_of(std::size_t pair) const {
        return {negatives.data() + pair * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
    }
};

// Every ordered (i, j) with labels[i] == labels[j], i == j included, iterated
// by ascending i then j; negatives drawn through `source` in that order.
PairPlan plan_label_pairs(std::span<const int> labels, int k, const NegativeSource& source);

// One pair (i, partner[i]) per anchor i; used when positives are augmented views.
PairPlan plan_fixed_pairs(std::span<const int> anchors, std::span<const int> positives, int k,
                          const NegativeSource& source);

/// Minibatch loss: mean over anchors of the mean pair loss of that anchor.
/// Embeddings are the columns of `embeddings`. When `grad` is non-null it
/// receives d(loss)/d(embeddings) with the drawn negatives held fixed.
LossValue pair_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, const PairPlan& plan,
                    const LossSpec& spec, Eigen::MatrixXd* grad = nullptr);

LossValue batch_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                     std::span<const int> labels, const LossSpec& spec,
                     const NegativeSource& negatives_for, int k);

}  // namespace nclab
