#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nclab/geometry.hpp"

namespace nclab {

// Fully connected rectifier network. All weights and biases live in one flat
// vector so the optimizer and gradient checks work on a single array; layer l
// stores W_l (out x in, column-major) followed by b_l.
class EncoderParams {
public:
    EncoderParams() = default;
    explicit EncoderParams(std::vector<int> widths);

    // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    static EncoderParams random(std::vector<int> widths, std::uint64_t seed);

    const std::vector<int>& widths() const { return widths_; }
    int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }

    Eigen::VectorXd& flat() { return flat_; }
    const Eigen::VectorXd& flat() const { return flat_; }
    Eigen::Index size() const { return flat_.size(); }

    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<Eigen::VectorXd> bias(int layer);
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

    Eigen::Index weight_offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
    Eigen::Index bias_offset(int layer) const;
    // Layer that owns flat index i.
    int layer_of(Eigen::Index i) const;

private:
    std::vector<int> widths_;
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd flat_;
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer; inputs[0] is the batch
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
    Eigen::MatrixXd raw;                  // encoder output before normalization
    Eigen::MatrixXd embedded;             // normalized output
};

// Encodes the columns of `inputs` and normalizes each output column.
Eigen::MatrixXd forward_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              Normalization mode, ForwardCache* cache = nullptr);

Embedding forward(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x, Normalization mode);

/// Gradient with respect to the flat parameters given d(loss)/d(embedded).
/// Unit-ball columns with norm <= 1 take the identity branch.
Eigen::VectorXd backward_batch(const EncoderParams& params, const ForwardCache& cache,
                               const Eigen::Ref<const Eigen::MatrixXd>& grad_embedded, Normalization mode);

}  // namespace nclab
