#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nclab/loss.hpp"

namespace nclab {

using Rng = std::mt19937_64;

// Samples are columns; labels are 0-based class indices (1-based on disk).
struct LabeledDataset {
    Eigen::MatrixXd samples;
    std::vector<int> labels;
    int num_classes = 0;
    std::vector<double> priors;

    int size() const { return static_cast<int>(labels.size()); }
    int dim() const { return static_cast<int>(samples.rows()); }
};

void validate(const LabeledDataset& data);

/// Per class a mean with IID Uniform[-1,1] entries, then n_per_class samples
/// from N(mean, I). Samples are stored class by class.
LabeledDataset gen_synthetic(int num_classes, int n_per_class, int dim, std::uint64_t seed);

// One row per sample: label, then features with 15 significant digits.
void write_dataset_csv(const std::string& path, const LabeledDataset& data);
LabeledDataset read_dataset_csv(const std::string& path);

enum class HardeningVariant { None, Exponential, Polynomial };

struct HardeningSpec {
    HardeningVariant variant = HardeningVariant::None;
    double beta = 0.0;     // exponential
    double epsilon = 1.0;  // polynomial

    static HardeningSpec none() { return {}; }
    static HardeningSpec exponential(double beta) { return {HardeningVariant::Exponential, beta, 1.0}; }
    static HardeningSpec polynomial(double epsilon) { return {HardeningVariant::Polynomial, 0.0, epsilon}; }
};

std::string to_string(HardeningVariant variant);
HardeningVariant parse_hardening_variant(const std::string& name);
void validate(const HardeningSpec& spec);

// True when the weight does not depend on t (no tilting).
bool is_flat(const HardeningSpec& spec);

// Single-argument factor of the separable hardening function:
// none -> 1, exponential -> e^{beta t}, polynomial -> max(t+1, 0)^epsilon.
double hardening_weight(const HardeningSpec& spec, double t);
double log_hardening_weight(const HardeningSpec& spec, double t);

// Product of the per-argument factors.
double hardening_weight(const HardeningSpec& spec, std::span<const double> t);

struct PositiveStrategy {
    enum class Kind { LabelBased, GaussianNoise };
    Kind kind = Kind::LabelBased;
    double variance = 0.01;

    static PositiveStrategy label_based() { return {}; }
    static PositiveStrategy gaussian_noise(double variance = 0.01) { return {Kind::GaussianNoise, variance}; }
};

std::string to_string(PositiveStrategy::Kind kind);

struct PositivePair {
    Eigen::VectorXd anchor;
    Eigen::VectorXd positive;
    int label = 0;
};

/// label-based: positive uniform over samples sharing the anchor's label
/// (the anchor included). gaussian-noise: anchor and positive are the
/// reference sample plus two independent N(0, variance I) perturbations.
PositivePair draw_positive(const LabeledDataset& data, int anchor_index,
                           const PositiveStrategy& strategy, Rng& rng);

enum class NegativeMode { SupervisedExclude, UnsupervisedAll };

std::string to_string(NegativeMode mode);
NegativeMode parse_negative_mode(const std::string& name);

// Tilted categorical distribution over the eligible part of a pool for one
// anchor. Probabilities are proportional to hardening_weight(anchor^T pool_j),
// normalized within the eligible pool.
class NegativeSampler {
public:
    NegativeSampler(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                    const Eigen::Ref<const Eigen::MatrixXd>& pool, std::span<const int> pool_labels,
                    std::optional<int> anchor_label, NegativeMode mode, const HardeningSpec& hardening);

    int eligible_count() const { return static_cast<int>(eligible_.size()); }
    const std::vector<int>& eligible() const { return eligible_; }
    // Selection probability of each eligible index, aligned with eligible().
    const std::vector<double>& probabilities() const { return probabilities_; }

    int draw_one(Rng& rng);
    void draw(Rng& rng, std::span<int> out);

private:
    std::vector<int> eligible_;
    std::vector<double> probabilities_;
    bool uniform_ = true;
    std::uniform_int_distribution<int> pick_;
    std::discrete_distribution<int> tilted_;
};

/// k pool indices drawn independently with replacement from the tilted
/// eligible pool. SupervisedExclude drops every candidate sharing anchor_label.
std::vector<int> draw_negatives(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                const Eigen::Ref<const Eigen::MatrixXd>& pool,
                                std::span<const int> pool_labels, std::optional<int> anchor_label,
                                int k, NegativeMode mode, const HardeningSpec& hardening, Rng& rng);

// Negative source for a minibatch whose embeddings are the columns of
// `embeddings`: the pool is the whole minibatch. Samplers are built once per
// anchor. The referenced matrix and labels must outlive the source.
NegativeSource minibatch_negative_source(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                                         NegativeMode mode, const HardeningSpec& hardening, Rng& rng);

struct GammaEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

// Draws k reference negatives (columns) for the anchor.
using NegativeDraw = std::function<Eigen::MatrixXd(Rng&)>;

/// Monte-Carlo estimate of gamma = E[prod_i eta(anchor^T z-_i)] over k IID
/// reference negatives, with its standard error.
GammaEstimate gamma_estimate(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                             const NegativeDraw& negative_sampler, const HardeningSpec& hardening,
                             int n_draws, Rng& rng);

}  // namespace nclab
