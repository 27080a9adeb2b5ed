#include "nclab/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nclab/bounds.hpp"
#include "nclab/csv.hpp"
#include "nclab/error.hpp"

namespace nclab {

AdamState AdamState::for_size(Eigen::Index n, double learning_rate) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(n);
    s.second_moment = Eigen::VectorXd::Zero(n);
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad) {
    if (params.size() != grad.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size())
        throw DimensionError("adam_step: parameter, gradient and moment sizes differ");
    ++state.step;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad;
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= state.learning_rate * (state.first_moment.array() / c1) /
                      ((state.second_moment.array() / c2).sqrt() + state.epsilon);
}

void validate(const TrainConfig& config) {
    if (!config.dataset) throw ConfigurationError("dataset: missing");
    validate(*config.dataset);
    if (config.epochs < 0) throw ConfigurationError("epochs: must be >= 0");
    if (config.batch_size < 2) throw ConfigurationError("batch_size: must be >= 2");
    if (config.k < 1) throw ConfigurationError("k: must be >= 1");
    if (!(config.learning_rate > 0.0)) throw ConfigurationError("learning_rate: must be positive");
    if (config.metric_cadence < 1) throw ConfigurationError("metric_cadence: must be >= 1");
    if (config.embedding_dim < 0) throw ConfigurationError("embedding_dim: must be >= 0");
    for (int w : config.hidden_widths)
        if (w < 1) throw ConfigurationError("hidden_widths: widths must be positive");
    validate(config.loss);
    validate(config.hardening);
    if (config.positives.kind == PositiveStrategy::Kind::GaussianNoise && !(config.positives.variance >= 0.0))
        throw ConfigurationError("positives: variance must be >= 0");
}

std::vector<int> layer_widths(const TrainConfig& config) {
    std::vector<int> widths{config.dataset->dim()};
    widths.insert(widths.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    widths.push_back(config.embedding_dim > 0 ? config.embedding_dim : config.dataset->num_classes - 1);
    return widths;
}

std::string config_hash(const TrainConfig& config) {
    std::ostringstream s;
    s << "n=" << config.dataset->size() << ";d=" << config.dataset->dim() << ";C=" << config.dataset->num_classes
      << ";epochs=" << config.epochs << ";B=" << config.batch_size << ";k=" << config.k
      << ";loss=" << to_string(config.loss.variant) << ':' << format_real(config.loss.alpha, 17)
      << ";hard=" << to_string(config.hardening.variant) << ':' << format_real(config.hardening.beta, 17) << ':'
      << format_real(config.hardening.epsilon, 17) << ";norm=" << to_string(config.normalization)
      << ";pos=" << to_string(config.positives.kind) << ':' << format_real(config.positives.variance, 17)
      << ";neg=" << to_string(config.negatives) << ";seed=" << config.seed << ";lr=" << format_real(config.learning_rate, 17)
      << ";widths=";
    for (int w : layer_widths(config)) s << w << ',';
    return hex64(fnv1a64(s.str()));
}

BatchInputs make_batch_inputs(const LabeledDataset& data, std::span<const int> indices,
                              const PositiveStrategy& strategy, Rng& rng) {
    BatchInputs out;
    const int b = static_cast<int>(indices.size());
    if (strategy.kind == PositiveStrategy::Kind::LabelBased) {
        out.x.resize(data.dim(), b);
        for (int i = 0; i < b; ++i) {
            out.x.col(i) = data.samples.col(indices[i]);
            out.labels.push_back(data.labels[indices[i]]);
        }
        return out;
    }
    out.label_pairs = false;
    out.x.resize(data.dim(), 2 * b);
    out.labels.resize(static_cast<std::size_t>(2 * b));
    for (int i = 0; i < b; ++i) {
        const PositivePair pair = draw_positive(data, indices[i], strategy, rng);
        out.x.col(i) = pair.anchor;
        out.x.col(b + i) = pair.positive;
        out.labels[i] = out.labels[b + i] = pair.label;
        out.anchors.push_back(i);
        out.positives.push_back(b + i);
    }
    return out;
}

BatchResult evaluate_plan(const EncoderParams& params, const BatchInputs& batch, const PairPlan& plan,
                          const TrainConfig& config, bool with_grad) {
    ForwardCache cache;
    const Eigen::MatrixXd z = forward_batch(params, batch.x, config.normalization, with_grad ? &cache : nullptr);
    BatchResult out;
    out.plan = plan;
    if (!with_grad) {
        out.loss = pair_loss(z, plan, config.loss);
        return out;
    }
    Eigen::MatrixXd dz;
    out.loss = pair_loss(z, plan, config.loss, &dz);
    out.grad = backward_batch(params, cache, dz, config.normalization);
    return out;
}

BatchResult batch_gradient(const EncoderParams& params, const BatchInputs& batch, const TrainConfig& config,
                           Rng& rng) {
    ForwardCache cache;
    const Eigen::MatrixXd z = forward_batch(params, batch.x, config.normalization, &cache);
    const NegativeSource source = minibatch_negative_source(z, batch.labels, config.negatives, config.hardening, rng);

    BatchResult out;
    out.plan = batch.label_pairs ? plan_label_pairs(batch.labels, config.k, source)
                                 : plan_fixed_pairs(batch.anchors, batch.positives, config.k, source);
    Eigen::MatrixXd dz;
    out.loss = pair_loss(z, out.plan, config.loss, &dz);
    out.grad = backward_batch(params, cache, dz, config.normalization);
    return out;
}

Eigen::MatrixXd embed_dataset(const EncoderParams& params, const LabeledDataset& data, Normalization mode) {
    return forward_batch(params, data.samples, mode);
}

double theoretical_bound(const TrainConfig& config) {
    const int c = config.dataset->num_classes;
    return config.negatives == NegativeMode::SupervisedExclude ? scl_lower_bound(c, config.k, config.loss).value
                                                               : ucl_lower_bound(c, config.k, config.loss).value;
}

MetricsRow measure(const EncoderParams& params, const TrainConfig& config, int epoch, double loss) {
    const LabeledDataset& data = *config.dataset;
    const Eigen::MatrixXd z = embed_dataset(params, data, config.normalization);
    const ClassMeans means = class_means(z, data.labels, data.num_classes);
    MetricsRow row;
    row.epoch = epoch;
    row.loss = loss;
    row.nc = nc_metrics(means);
    const DcSpectrum dc = dc_spectrum(means);
    row.dc = dc.values;
    row.dc_degenerate = dc.degenerate;
    row.bound = theoretical_bound(config);
    return row;
}

namespace {

// Consecutive slices of a permutation; a trailing slice of one sample is
// folded into the previous one because it cannot form a contrastive batch.
std::vector<std::vector<int>> make_batches(const std::vector<int>& order, int batch_size) {
    std::vector<std::vector<int>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (batches.size() > 1 && batches.back().size() < 2) {
        auto last = std::move(batches.back());
        batches.pop_back();
        batches.back().insert(batches.back().end(), last.begin(), last.end());
    }
    return batches;
}

double run_epoch(EncoderParams& params, AdamState& adam, const TrainConfig& config, Rng& rng, bool update) {
    const LabeledDataset& data = *config.dataset;
    std::vector<int> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    const auto batches = make_batches(order, config.batch_size);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        const BatchInputs inputs = make_batch_inputs(data, batches[b], config.positives, rng);
        BatchResult result;
        try {
            result = batch_gradient(params, inputs, config, rng);
        } catch (const ConfigurationError& e) {
            throw ConfigurationError("minibatch " + std::to_string(b) + ": " + e.what());
        }
        total += result.loss.value;
        if (update) adam_step(adam, params.flat(), result.grad);
    }
    return total / static_cast<double>(batches.size());
}

}  // namespace

void write_metrics_header(const std::string& path, int dc_length) {
    CsvWriter out(path);
    std::vector<std::string> header{"epoch", "loss", "zero_sum", "unit_norm", "equal_inner_product"};
    for (int i = 1; i <= dc_length; ++i) header.push_back("dc_" + std::to_string(i));
    header.push_back("bound");
    out.row(header);
}

void append_metrics_row(const std::string& path, const MetricsRow& row) {
    CsvWriter out(path, true);
    std::vector<std::string> fields{std::to_string(row.epoch), format_real(row.loss, 17), format_real(row.nc.zero_sum, 17),
                                    format_real(row.nc.unit_norm, 17), format_real(row.nc.equal_inner_product, 17)};
    for (Eigen::Index i = 0; i < row.dc.size(); ++i) fields.push_back(format_real(row.dc(i), 17));
    fields.push_back(format_real(row.bound, 17));
    out.row(fields);
}

TrainResult train(const TrainConfig& config) {
    validate(config);
    const std::vector<int> widths = layer_widths(config);

    TrainResult result;
    if (config.init_from) {
        Checkpoint ck = load_checkpoint(*config.init_from);
        if (ck.params.widths() != widths)
            throw ConfigurationError("init_from: checkpoint layer widths do not match the configuration");
        result.params = std::move(ck.params);
    } else {
        result.params = EncoderParams::random(widths, config.seed);
    }
    result.optimizer = AdamState::for_size(result.params.size(), config.learning_rate);

    // separate streams so initialization and training draws stay independent
    Rng rng(config.seed ^ 0xa0761d6478bd642fULL);

    auto log_row = [&](int epoch, double loss) {
        MetricsRow row = measure(result.params, config, epoch, loss);
        if (!config.metrics_csv.empty()) {
            if (result.rows.empty()) write_metrics_header(config.metrics_csv, static_cast<int>(row.dc.size()));
            append_metrics_row(config.metrics_csv, row);
        }
        result.rows.push_back(std::move(row));
    };

    {
        // loss of the initialization, no update
        Rng probe(config.seed ^ 0xe7037ed1a0b428dbULL);
        log_row(0, run_epoch(result.params, result.optimizer, config, probe, false));
    }
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const double loss = run_epoch(result.params, result.optimizer, config, rng, true);
        if (epoch % config.metric_cadence == 0 || epoch == config.epochs) log_row(epoch, loss);
    }

    if (!config.checkpoint_path.empty())
        save_checkpoint(config.checkpoint_path, {result.params, result.optimizer, config_hash(config), config.epochs});
    return result;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
    using nlohmann::json;
    const auto to_array = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json j;
    j["format"] = "nclab-checkpoint";
    j["version"] = 1;
    j["epoch"] = checkpoint.epoch;
    j["config_hash"] = checkpoint.config_hash;
    j["widths"] = checkpoint.params.widths();
    j["params"] = to_array(checkpoint.params.flat());
    const AdamState& a = checkpoint.optimizer;
    j["adam"] = {{"step", a.step},
                 {"learning_rate", a.learning_rate},
                 {"beta1", a.beta1},
                 {"beta2", a.beta2},
                 {"epsilon", a.epsilon},
                 {"first_moment", to_array(a.first_moment)},
                 {"second_moment", to_array(a.second_moment)}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint '" + path + "' for writing");
    out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    using nlohmann::json;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open checkpoint '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigurationError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != "nclab-checkpoint" || j.value("version", 0) != 1)
        throw ConfigurationError("checkpoint '" + path + "' has an unsupported format or version");

    const auto to_vector = [](const json& arr) {
        const auto v = arr.get<std::vector<double>>();
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    Checkpoint ck;
    ck.params = EncoderParams(j.at("widths").get<std::vector<int>>());
    const Eigen::VectorXd flat = to_vector(j.at("params"));
    if (flat.size() != ck.params.size()) throw ConfigurationError("checkpoint parameter count does not match widths");
    ck.params.flat() = flat;
    const json& a = j.at("adam");
    ck.optimizer.step = a.at("step").get<long long>();
    ck.optimizer.learning_rate = a.at("learning_rate").get<double>();
    ck.optimizer.beta1 = a.at("beta1").get<double>();
    ck.optimizer.beta2 = a.at("beta2").get<double>();
    ck.optimizer.epsilon = a.at("epsilon").get<double>();
    ck.optimizer.first_moment = to_vector(a.at("first_moment"));
    ck.optimizer.second_moment = to_vector(a.at("second_moment"));
    ck.config_hash = j.at("config_hash").get<std::string>();
    ck.epoch = j.at("epoch").get<int>();
    return ck;
}

}  // namespace nclab
