#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nclab/encoder.hpp"
#include "nclab/geometry.hpp"
#include "nclab/loss.hpp"
#include "nclab/sampling.hpp"

namespace nclab {

struct AdamState {
    long long step = 0;
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState for_size(Eigen::Index n, double learning_rate = 1e-3);
};

// Bias-corrected Adam, no weight decay.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad);

struct TrainConfig {
    std::shared_ptr<const LabeledDataset> dataset;
    int epochs = 400;
    int batch_size = 512;
    int k = 256;
    LossSpec loss;
    HardeningSpec hardening;
    Normalization normalization = Normalization::UnitBall;
    PositiveStrategy positives;
    NegativeMode negatives = NegativeMode::SupervisedExclude;
    std::uint64_t seed = 0;
    std::vector<int> hidden_widths{256, 128};
    int embedding_dim = 0;  // 0 selects C-1
    double learning_rate = 1e-3;
    std::optional<std::string> init_from;  // checkpoint to start from

    // Optional outputs; empty paths disable them.
    std::string metrics_csv;
    std::string checkpoint_path;
    int metric_cadence = 1;
};

void validate(const TrainConfig& config);
std::vector<int> layer_widths(const TrainConfig& config);
// FNV-1a of a canonical description of every field that affects training.
std::string config_hash(const TrainConfig& config);

struct MetricsRow {
    int epoch = 0;
    double loss = 0.0;
    NcMetrics nc;
    Eigen::VectorXd dc;
    bool dc_degenerate = false;
    double bound = 0.0;
};

// Columns of one minibatch as fed to the encoder. With label-based positives
// every ordered same-label pair is used; with Gaussian-noise positives the
// inputs are B anchor views followed by B positive views.
struct BatchInputs {
    Eigen::MatrixXd x;
    std::vector<int> labels;  // per column, used for negative exclusion
    bool label_pairs = true;
    std::vector<int> anchors;
    std::vector<int> positives;
};

BatchInputs make_batch_inputs(const LabeledDataset& data, std::span<const int> indices,
                              const PositiveStrategy& strategy, Rng& rng);

struct BatchResult {
    LossValue loss;
    Eigen::VectorXd grad;
    PairPlan plan;
};

/// Forward pass, negative draws on the current embeddings, loss and reverse
/// mode gradient. Drawn negative indices are treated as constants.
BatchResult batch_gradient(const EncoderParams& params, const BatchInputs& batch, const TrainConfig& config,
                           Rng& rng);

/// Loss (and optionally gradient) for a fixed pair plan.
BatchResult evaluate_plan(const EncoderParams& params, const BatchInputs& batch, const PairPlan& plan,
                          const TrainConfig& config, bool with_grad);

// Normalized embeddings of every sample, one column each.
Eigen::MatrixXd embed_dataset(const EncoderParams& params, const LabeledDataset& data, Normalization mode);

// Supervised or unsupervised bound matching the negative mode.
double theoretical_bound(const TrainConfig& config);

MetricsRow measure(const EncoderParams& params, const TrainConfig& config, int epoch, double loss);

struct TrainResult {
    EncoderParams params;
    AdamState optimizer;
    std::vector<MetricsRow> rows;
};

/// Shuffled disjoint minibatches per epoch, one Adam step per minibatch.
/// Row 0 describes the initialization; epoch e is logged when e is a multiple
/// of metric_cadence and always at the last epoch.
TrainResult train(const TrainConfig& config);

void write_metrics_header(const std::string& path, int dc_length);
void append_metrics_row(const std::string& path, const MetricsRow& row);

struct Checkpoint {
    EncoderParams params;
    AdamState optimizer;
    std::string config_hash;
    int epoch = 0;
};

// Versioned JSON; doubles are written with round-trip precision.
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nclab
