#include "nclab/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nclab/error.hpp"

namespace nclab {

std::string to_string(LossVariant variant) {
    switch (variant) {
        case LossVariant::InfoNceMean: return "infonce_mean";
        case LossVariant::InfoNceSum: return "infonce_sum";
        case LossVariant::Triplet: return "triplet";
    }
    return "unknown";
}

LossVariant parse_loss_variant(const std::string& name) {
    if (name == "infonce_mean" || name == "infonce") return LossVariant::InfoNceMean;
    if (name == "infonce_sum") return LossVariant::InfoNceSum;
    if (name == "triplet") return LossVariant::Triplet;
    throw ConfigurationError("unknown loss variant '" + name + "'");
}

void validate(const LossSpec& spec) {
    if (!(spec.alpha > 0.0) || !std::isfinite(spec.alpha))
        throw ConfigurationError("loss alpha must be positive and finite");
}

namespace {

double scale_of(LossVariant variant, std::size_t k) {
    return variant == LossVariant::InfoNceMean ? 1.0 / static_cast<double>(k) : 1.0;
}

}  // namespace

double psi(const LossSpec& spec, std::span<const double> t) {
    if (t.empty()) throw DimensionError("psi: need at least one argument");
    if (spec.variant == LossVariant::Triplet) {
        double acc = 0.0;
        for (double v : t) acc += std::max(v + spec.alpha, 0.0);
        return acc;
    }
    const double log_alpha = std::log(spec.alpha);
    const double shift = std::max(*std::max_element(t.begin(), t.end()), log_alpha);
    double acc = 0.0;
    for (double v : t) acc += std::exp(v - shift);
    return shift + std::log(std::exp(log_alpha - shift) + scale_of(spec.variant, t.size()) * acc);
}

double psi_with_grad(const LossSpec& spec, std::span<const double> t, std::span<double> grad) {
    if (t.empty()) throw DimensionError("psi: need at least one argument");
    if (grad.size() != t.size()) throw DimensionError("psi_with_grad: gradient length mismatch");
    if (spec.variant == LossVariant::Triplet) {
        double acc = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double margin = t[i] + spec.alpha;
            acc += std::max(margin, 0.0);
            grad[i] = margin > 0.0 ? 1.0 : 0.0;
        }
        return acc;
    }
    const double log_alpha = std::log(spec.alpha);
    const double shift = std::max(*std::max_element(t.begin(), t.end()), log_alpha);
    const double scale = scale_of(spec.variant, t.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        grad[i] = std::exp(t[i] - shift);
        acc += grad[i];
    }
    const double denom = std::exp(log_alpha - shift) + scale * acc;
    for (double& g : grad) g *= scale / denom;
    return shift + std::log(denom);
}

double psi_two_level(const LossSpec& spec, int k, int count_a, double a, double b) {
    if (k < 1 || count_a < 0 || count_a > k) throw DimensionError("psi_two_level: invalid counts");
    const double na = count_a;
    const double nb = k - count_a;
    if (spec.variant == LossVariant::Triplet)
        return na * std::max(a + spec.alpha, 0.0) + nb * std::max(b + spec.alpha, 0.0);
    const double log_alpha = std::log(spec.alpha);
    double shift = log_alpha;
    if (count_a > 0) shift = std::max(shift, a);
    if (count_a < k) shift = std::max(shift, b);
    const double acc = (count_a > 0 ? na * std::exp(a - shift) : 0.0) +
                       (count_a < k ? nb * std::exp(b - shift) : 0.0);
    const double scale = scale_of(spec.variant, static_cast<std::size_t>(k));
    return shift + std::log(std::exp(log_alpha - shift) + scale * acc);
}

double cl_loss_sample(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                      const Eigen::Ref<const Eigen::VectorXd>& positive,
                      const Eigen::Ref<const Eigen::MatrixXd>& negatives, const LossSpec& spec) {
    if (anchor.size() != positive.size() || negatives.rows() != anchor.size())
        throw DimensionError("cl_loss_sample: embedding dimensions differ");
    if (negatives.cols() < 1) throw DimensionError("cl_loss_sample: need at least one negative");
    const Eigen::VectorXd t =
        (negatives.colwise() - positive).transpose() * anchor;
    return psi(spec, {t.data(), static_cast<std::size_t>(t.size())});
}

PairPlan plan_label_pairs(std::span<const int> labels, int k, const NegativeSource& source) {
    if (k < 1) throw ConfigurationError("need k >= 1 negatives");
    PairPlan plan;
    plan.k = k;
    const int n = static_cast<int>(labels.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (labels[i] != labels[j]) continue;
            plan.anchors.push_back(i);
            plan.positives.push_back(j);
        }
    }
    plan.negatives.resize(plan.anchors.size() * static_cast<std::size_t>(k));
    for (std::size_t p = 0; p < plan.anchors.size(); ++p)
        source(plan.anchors[p], plan.positives[p],
               {plan.negatives.data() + p * static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
    return plan;
}

PairPlan plan_fixed_pairs(std::span<const int> anchors, std::span<const int> positives, int k,
                          const NegativeSource& source) {
    if (anchors.size() != positives.size()) throw DimensionError("plan_fixed_pairs: length mismatch");
    if (k < 1) throw ConfigurationError("need k >= 1 negatives");
    PairPlan plan;
    plan.k = k;
    plan.anchors.assign(anchors.begin(), anchors.end());
    plan.positives.assign(positives.begin(), positives.end());
    if (!std::is_sorted(plan.anchors.begin(), plan.anchors.end()))
        throw ConfigurationError("plan_fixed_pairs: anchors must be ascending");
    plan.negatives.resize(plan.anchors.size() * static_cast<std::size_t>(k));
    for (std::size_t p = 0; p < plan.anchors.size(); ++p)
        source(plan.anchors[p], plan.positives[p],
               {plan.negatives.data() + p * static_cast<std::size_t>(k), static_cast<std::size_t>(k)});
    return plan;
}

LossValue pair_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings, const PairPlan& plan,
                    const LossSpec& spec, Eigen::MatrixXd* grad) {
    if (plan.size() == 0) throw ConfigurationError("pair_loss: empty batch");
    const Eigen::Index n = embeddings.cols();
    const Eigen::MatrixXd gram = embeddings.transpose() * embeddings;
    Eigen::MatrixXd dgram;
    if (grad) dgram = Eigen::MatrixXd::Zero(n, n);

    const auto k = static_cast<std::size_t>(plan.k);
    std::vector<double> t(k), dt(k);

    // Pairs are contiguous per anchor; count anchors first for the outer mean.
    int anchor_count = 0;
    for (std::size_t p = 0; p < plan.size(); ++p)
        if (p == 0 || plan.anchors[p] != plan.anchors[p - 1]) ++anchor_count;

    double total = 0.0;
    std::size_t p = 0;
    while (p < plan.size()) {
        const int a = plan.anchors[p];
        std::size_t end = p;
        while (end < plan.size() && plan.anchors[end] == a) ++end;
        const double pair_weight = 1.0 / static_cast<double>(end - p);
        double anchor_sum = 0.0;
        for (std::size_t q = p; q < end; ++q) {
            const int pos = plan.positives[q];
            const auto negs = plan.negatives_of(q);
            const double ap = gram(a, pos);
            for (std::size_t m = 0; m < k; ++m) {
                if (negs[m] < 0 || negs[m] >= n) throw DimensionError("pair_loss: negative index out of range");
                t[m] = gram(a, negs[m]) - ap;
            }
            if (grad) {
                anchor_sum += psi_with_grad(spec, t, dt);
                const double w = pair_weight / anchor_count;
                double dsum = 0.0;
                for (std::size_t m = 0; m < k; ++m) {
                    dgram(a, negs[m]) += w * dt[m];
                    dsum += dt[m];
                }
                dgram(a, pos) -= w * dsum;
            } else {
                anchor_sum += psi(spec, t);
            }
        }
        total += anchor_sum * pair_weight;
        p = end;
    }

    if (grad) *grad = embeddings * (dgram + dgram.transpose());
    LossValue out{total / anchor_count, anchor_count};
    if (!std::isfinite(out.value)) throw NumericError("pair_loss: non-finite loss");
    return out;
}

LossValue batch_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                     std::span<const int> labels, const LossSpec& spec,
                     const NegativeSource& negatives_for, int k) {
    if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols())
        throw DimensionError("batch_loss: label count does not match embedding count");
    if (labels.empty()) throw ConfigurationError("batch_loss: empty batch");
    return pair_loss(embeddings, plan_label_pairs(labels, k, negatives_for), spec);
}

}  // namespace nclab
