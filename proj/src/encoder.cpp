#include "nclab/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nclab/error.hpp"

namespace nclab {

EncoderParams::EncoderParams(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw DimensionError("encoder needs at least an input and an output width");
    for (int w : widths_)
        if (w < 1) throw DimensionError("encoder widths must be positive");
    Eigen::Index offset = 0;
    for (int l = 0; l < num_layers(); ++l) {
        offsets_.push_back(offset);
        offset += static_cast<Eigen::Index>(widths_[l + 1]) * widths_[l] + widths_[l + 1];
    }
    offsets_.push_back(offset);
    flat_ = Eigen::VectorXd::Zero(offset);
}

EncoderParams EncoderParams::random(std::vector<int> widths, std::uint64_t seed) {
    EncoderParams p(std::move(widths));
    std::mt19937_64 rng(seed);
    for (int l = 0; l < p.num_layers(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.widths_[l]));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto w = p.weight(l);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
        auto b = p.bias(l);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = u(rng);
    }
    return p;
}

Eigen::Map<Eigen::MatrixXd> EncoderParams::weight(int layer) {
    return {flat_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}

Eigen::Map<const Eigen::MatrixXd> EncoderParams::weight(int layer) const {
    return {flat_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}

Eigen::Index EncoderParams::bias_offset(int layer) const {
    return offsets_[layer] + static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer];
}

Eigen::Map<Eigen::VectorXd> EncoderParams::bias(int layer) {
    return {flat_.data() + bias_offset(layer), widths_[layer + 1]};
}

Eigen::Map<const Eigen::VectorXd> EncoderParams::bias(int layer) const {
    return {flat_.data() + bias_offset(layer), widths_[layer + 1]};
}

int EncoderParams::layer_of(Eigen::Index i) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), i);
    return static_cast<int>(it - offsets_.begin()) - 1;
}

Eigen::MatrixXd forward_batch(const EncoderParams& params, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                              Normalization mode, ForwardCache* cache) {
    if (inputs.rows() != params.input_dim())
        throw DimensionError("forward: input dimension " + std::to_string(inputs.rows()) + " != encoder input " +
                             std::to_string(params.input_dim()));
    Eigen::MatrixXd h = inputs;
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    for (int l = 0; l < params.num_layers(); ++l) {
        Eigen::MatrixXd a = params.weight(l) * h;
        a.colwise() += params.bias(l);
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(a);
        }
        h = l + 1 < params.num_layers() ? Eigen::MatrixXd(a.cwiseMax(0.0)) : std::move(a);
    }

    Eigen::MatrixXd z(h.rows(), h.cols());
    for (Eigen::Index c = 0; c < h.cols(); ++c) z.col(c) = normalize(h.col(c), mode);
    if (cache) {
        cache->raw = std::move(h);
        cache->embedded = z;
    }
    return z;
}

Embedding forward(const EncoderParams& params, const Eigen::Ref<const Eigen::VectorXd>& x, Normalization mode) {
    return forward_batch(params, x, mode).col(0);
}

Eigen::VectorXd backward_batch(const EncoderParams& params, const ForwardCache& cache,
                               const Eigen::Ref<const Eigen::MatrixXd>& grad_embedded, Normalization mode) {
    const Eigen::MatrixXd& raw = cache.raw;
    const Eigen::MatrixXd& z = cache.embedded;
    if (grad_embedded.rows() != z.rows() || grad_embedded.cols() != z.cols())
        throw DimensionError("backward: gradient shape does not match the cached batch");

    // through the normalization
    Eigen::MatrixXd delta(raw.rows(), raw.cols());
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double norm = raw.col(c).norm();
        const bool project = mode == Normalization::UnitSphere || (mode == Normalization::UnitBall && norm > 1.0);
        if (mode == Normalization::None) {
            delta.col(c) = grad_embedded.col(c) / std::sqrt(static_cast<double>(raw.rows()));
        } else if (project) {
            delta.col(c) = (grad_embedded.col(c) - z.col(c) * z.col(c).dot(grad_embedded.col(c))) / norm;
        } else {
            delta.col(c) = grad_embedded.col(c);
        }
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    for (int l = params.num_layers() - 1; l >= 0; --l) {
        if (l + 1 < params.num_layers()) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + params.weight_offset(l), params.widths()[l + 1],
                                       params.widths()[l]);
        gw.noalias() = delta * cache.inputs[l].transpose();
        grad.segment(params.bias_offset(l), params.widths()[l + 1]) = delta.rowwise().sum();
        if (l > 0) delta = params.weight(l).transpose() * delta;
        if (!grad.segment(params.weight_offset(l), params.bias_offset(l) - params.weight_offset(l) +
                                                       params.widths()[l + 1])
                 .allFinite())
            throw NumericError("non-finite gradient in layer " + std::to_string(l));
    }
    return grad;
}

}  // namespace nclab
