#include "nclab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "nclab/csv.hpp"
#include "nclab/error.hpp"

namespace nclab {

void validate(const LabeledDataset& data) {
    if (data.num_classes < 2) throw ConfigurationError("dataset needs at least 2 classes");
    if (static_cast<Eigen::Index>(data.labels.size()) != data.samples.cols())
        throw DimensionError("dataset: sample and label counts differ");
    if (static_cast<int>(data.priors.size()) != data.num_classes)
        throw DimensionError("dataset: one prior per class required");
    double total = 0.0;
    for (double p : data.priors) {
        if (p < 0.0) throw ConfigurationError("dataset: negative prior");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigurationError("dataset: priors do not sum to 1");
    for (int y : data.labels)
        if (y < 0 || y >= data.num_classes) throw ConfigurationError("dataset: label out of range");
    if (!data.samples.allFinite()) throw NumericError("dataset: non-finite sample");
}

LabeledDataset gen_synthetic(int num_classes, int n_per_class, int dim, std::uint64_t seed) {
    if (num_classes < 2) throw ConfigurationError("gen_synthetic: need at least 2 classes");
    if (n_per_class < 1) throw ConfigurationError("gen_synthetic: need at least 1 sample per class");
    if (dim < 1) throw ConfigurationError("gen_synthetic: dimension must be positive");

    Rng rng(seed);
    std::uniform_real_distribution<double> centre(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    LabeledDataset data;
    data.num_classes = num_classes;
    data.samples.resize(dim, static_cast<Eigen::Index>(num_classes) * n_per_class);
    data.labels.reserve(static_cast<std::size_t>(num_classes) * n_per_class);
    data.priors.assign(num_classes, 1.0 / num_classes);

    Eigen::Index col = 0;
    for (int y = 0; y < num_classes; ++y) {
        Eigen::VectorXd mean(dim);
        for (int r = 0; r < dim; ++r) mean(r) = centre(rng);
        for (int i = 0; i < n_per_class; ++i, ++col) {
            for (int r = 0; r < dim; ++r) data.samples(r, col) = mean(r) + noise(rng);
            data.labels.push_back(y);
        }
    }
    return data;
}

void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
    CsvWriter out(path);
    std::vector<std::string> row;
    for (int i = 0; i < data.size(); ++i) {
        row.clear();
        row.push_back(std::to_string(data.labels[i] + 1));
        for (int r = 0; r < data.dim(); ++r) row.push_back(format_real(data.samples(r, i), 15));
        out.row(row);
    }
}

LabeledDataset read_dataset_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw ConfigurationError("dataset file '" + path + "' is empty");
    const std::size_t width = rows.front().size();
    if (width < 2) throw DimensionError("dataset file '" + path + "' has no feature columns");

    LabeledDataset data;
    data.samples.resize(static_cast<Eigen::Index>(width - 1), static_cast<Eigen::Index>(rows.size()));
    int max_label = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != width) throw DimensionError("dataset file '" + path + "' has ragged rows");
        const int label = static_cast<int>(parse_real(rows[i][0]));
        if (label < 1) throw ConfigurationError("dataset labels must be 1-based");
        max_label = std::max(max_label, label);
        data.labels.push_back(label - 1);
        for (std::size_t c = 1; c < width; ++c)
            data.samples(static_cast<Eigen::Index>(c - 1), static_cast<Eigen::Index>(i)) = parse_real(rows[i][c]);
    }
    data.num_classes = max_label;
    std::vector<int> counts(max_label, 0);
    for (int y : data.labels) ++counts[y];
    for (int c : counts) data.priors.push_back(static_cast<double>(c) / data.size());
    validate(data);
    return data;
}

std::string to_string(HardeningVariant variant) {
    switch (variant) {
        case HardeningVariant::None: return "none";
        case HardeningVariant::Exponential: return "exponential";
        case HardeningVariant::Polynomial: return "polynomial";
    }
    return "unknown";
}

HardeningVariant parse_hardening_variant(const std::string& name) {
    if (name == "none") return HardeningVariant::None;
    if (name == "exponential") return HardeningVariant::Exponential;
    if (name == "polynomial") return HardeningVariant::Polynomial;
    throw ConfigurationError("unknown hardening variant '" + name + "'");
}

void validate(const HardeningSpec& spec) {
    if (spec.variant == HardeningVariant::Exponential && !(spec.beta >= 0.0 && std::isfinite(spec.beta)))
        throw ConfigurationError("exponential hardening needs a finite beta >= 0");
    if (spec.variant == HardeningVariant::Polynomial && !(spec.epsilon > 0.0 && std::isfinite(spec.epsilon)))
        throw ConfigurationError("polynomial hardening needs a finite epsilon > 0");
}

bool is_flat(const HardeningSpec& spec) {
    return spec.variant == HardeningVariant::None ||
           (spec.variant == HardeningVariant::Exponential && spec.beta == 0.0);
}

double hardening_weight(const HardeningSpec& spec, double t) {
    switch (spec.variant) {
        case HardeningVariant::None: return 1.0;
        case HardeningVariant::Exponential: return std::exp(spec.beta * t);
        case HardeningVariant::Polynomial: return std::pow(std::max(t + 1.0, 0.0), spec.epsilon);
    }
    return 1.0;
}

double log_hardening_weight(const HardeningSpec& spec, double t) {
    switch (spec.variant) {
        case HardeningVariant::None: return 0.0;
        case HardeningVariant::Exponential: return spec.beta * t;
        case HardeningVariant::Polynomial:
            return t + 1.0 > 0.0 ? spec.epsilon * std::log(t + 1.0) : -std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double hardening_weight(const HardeningSpec& spec, std::span<const double> t) {
    double w = 1.0;
    for (double v : t) w *= hardening_weight(spec, v);
    return w;
}

std::string to_string(PositiveStrategy::Kind kind) {
    return kind == PositiveStrategy::Kind::LabelBased ? "label_based" : "gaussian_noise";
}

PositivePair draw_positive(const LabeledDataset& data, int anchor_index,
                           const PositiveStrategy& strategy, Rng& rng) {
    if (anchor_index < 0 || anchor_index >= data.size())
        throw DimensionError("draw_positive: anchor index out of range");
    const int label = data.labels[anchor_index];
    PositivePair out;
    out.label = label;
    if (strategy.kind == PositiveStrategy::Kind::LabelBased) {
        std::vector<int> same;
        for (int i = 0; i < data.size(); ++i)
            if (data.labels[i] == label) same.push_back(i);
        std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
        out.anchor = data.samples.col(anchor_index);
        out.positive = data.samples.col(same[pick(rng)]);
        return out;
    }
    if (!(strategy.variance >= 0.0)) throw ConfigurationError("gaussian noise variance must be >= 0");
    const Eigen::VectorXd reference = data.samples.col(anchor_index);
    out.anchor = reference;
    out.positive = reference;
    if (strategy.variance > 0.0) {
        std::normal_distribution<double> noise(0.0, std::sqrt(strategy.variance));
        for (Eigen::Index r = 0; r < reference.size(); ++r) out.anchor(r) += noise(rng);
        for (Eigen::Index r = 0; r < reference.size(); ++r) out.positive(r) += noise(rng);
    }
    return out;
}

std::string to_string(NegativeMode mode) {
    return mode == NegativeMode::SupervisedExclude ? "supervised_exclude" : "unsupervised_all";
}

NegativeMode parse_negative_mode(const std::string& name) {
    if (name == "supervised_exclude" || name == "scl") return NegativeMode::SupervisedExclude;
    if (name == "unsupervised_all" || name == "ucl") return NegativeMode::UnsupervisedAll;
    throw ConfigurationError("unknown negative mode '" + name + "'");
}

NegativeSampler::NegativeSampler(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                 const Eigen::Ref<const Eigen::MatrixXd>& pool,
                                 std::span<const int> pool_labels, std::optional<int> anchor_label,
                                 NegativeMode mode, const HardeningSpec& hardening) {
    if (static_cast<Eigen::Index>(pool_labels.size()) != pool.cols())
        throw DimensionError("negative pool: label count does not match pool size");
    if (pool.rows() != anchor.size()) throw DimensionError("negative pool: dimension mismatch");
    const bool exclude = mode == NegativeMode::SupervisedExclude;
    if (exclude && !anchor_label) throw ConfigurationError("supervised exclusion needs the anchor label");
    for (int j = 0; j < static_cast<int>(pool_labels.size()); ++j)
        if (!exclude || pool_labels[j] != *anchor_label) eligible_.push_back(j);
    if (eligible_.empty()) throw ConfigurationError("negative pool has no eligible candidate");

    const std::size_t n = eligible_.size();
    uniform_ = is_flat(hardening);
    if (uniform_) {
        probabilities_.assign(n, 1.0 / static_cast<double>(n));
        pick_ = std::uniform_int_distribution<int>(0, static_cast<int>(n) - 1);
        return;
    }
    // Log-space weights shifted by their maximum: self-normalization makes the
    // shift irrelevant and keeps e^{beta t} finite for large beta.
    std::vector<double> logw(n);
    for (std::size_t i = 0; i < n; ++i)
        logw[i] = log_hardening_weight(hardening, anchor.dot(pool.col(eligible_[i])));
    const double top = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(top)) throw ConfigurationError("hardening weights vanish on the eligible pool");
    probabilities_.resize(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += probabilities_[i] = std::exp(logw[i] - top);
    for (double& p : probabilities_) p /= total;
    tilted_ = std::discrete_distribution<int>(probabilities_.begin(), probabilities_.end());
}

int NegativeSampler::draw_one(Rng& rng) {
    return eligible_[static_cast<std::size_t>(uniform_ ? pick_(rng) : tilted_(rng))];
}

void NegativeSampler::draw(Rng& rng, std::span<int> out) {
    for (int& idx : out) idx = draw_one(rng);
}

std::vector<int> draw_negatives(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                                const Eigen::Ref<const Eigen::MatrixXd>& pool,
                                std::span<const int> pool_labels, std::optional<int> anchor_label,
                                int k, NegativeMode mode, const HardeningSpec& hardening, Rng& rng) {
    if (k < 1) throw ConfigurationError("draw_negatives: need k >= 1");
    NegativeSampler sampler(anchor, pool, pool_labels, anchor_label, mode, hardening);
    std::vector<int> out(static_cast<std::size_t>(k));
    sampler.draw(rng, out);
    return out;
}

NegativeSource minibatch_negative_source(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                                         NegativeMode mode, const HardeningSpec& hardening, Rng& rng) {
    auto cache = std::make_shared<std::map<int, NegativeSampler>>();
    return [&embeddings, labels, mode, hardening, &rng, cache](int anchor, int, std::span<int> out) {
        auto it = cache->find(anchor);
        if (it == cache->end()) {
            try {
                it = cache
                         ->emplace(anchor, NegativeSampler(embeddings.col(anchor), embeddings, labels,
                                                           labels[static_cast<std::size_t>(anchor)], mode,
                                                           hardening))
                         .first;
            } catch (const ConfigurationError& e) {
                throw ConfigurationError("anchor " + std::to_string(anchor) + ": " + e.what());
            }
        }
        it->second.draw(rng, out);
    };
}

GammaEstimate gamma_estimate(const Eigen::Ref<const Eigen::VectorXd>& anchor,
                             const NegativeDraw& negative_sampler, const HardeningSpec& hardening,
                             int n_draws, Rng& rng) {
    if (n_draws < 2) throw ConfigurationError("gamma_estimate: need at least 2 draws");
    double mean = 0.0, m2 = 0.0;
    for (int n = 1; n <= n_draws; ++n) {
        const Eigen::MatrixXd negs = negative_sampler(rng);
        if (negs.rows() != anchor.size()) throw DimensionError("gamma_estimate: dimension mismatch");
        double w = 1.0;
        for (Eigen::Index i = 0; i < negs.cols(); ++i) w *= hardening_weight(hardening, anchor.dot(negs.col(i)));
        if (!std::isfinite(w)) throw NumericError("gamma_estimate: non-finite hardening weight");
        // Welford
        const double delta = w - mean;
        mean += delta / n;
        m2 += delta * (w - mean);
    }
    const double var = m2 / (n_draws - 1);
    return {mean, std::sqrt(var / n_draws)};
}

}  // namespace nclab
