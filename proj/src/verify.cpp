#include "nclab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nclab/error.hpp"
#include "nclab/parallel.hpp"

namespace nclab {

std::string to_string(Setting setting) {
    return setting == Setting::Supervised ? "scl" : "ucl";
}

Setting parse_setting(const std::string& name) {
    if (name == "scl" || name == "SCL" || name == "SCL_vs_HSCL") return Setting::Supervised;
    if (name == "ucl" || name == "UCL" || name == "UCL_vs_HUCL") return Setting::Unsupervised;
    throw ConfigurationError("unknown setting '" + name + "'");
}

namespace {

NegativeMode mode_of(Setting setting) {
    return setting == Setting::Supervised ? NegativeMode::SupervisedExclude : NegativeMode::UnsupervisedAll;
}

void check_table(const Eigen::Ref<const Eigen::MatrixXd>& table, std::span<const int> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != table.cols())
        throw DimensionError("embedding table: label count does not match column count");
    if (table.cols() < 2) throw ConfigurationError("embedding table: need at least 2 points");
    if (!table.allFinite()) throw NumericError("embedding table: non-finite entry");
}

std::vector<std::vector<int>> same_label_members(std::span<const int> labels) {
    const int n = static_cast<int>(labels.size());
    std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (labels[i] == labels[j]) out[i].push_back(j);
    return out;
}

// Mean and standard error accumulator (Welford).
struct RunningStats {
    long long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double stderr_of_mean() const {
        return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    }
};

double log_sum_exp(std::span<const double> v) {
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - top);
    return top + std::log(acc);
}

double multiset_count(int n, int k) {
    return std::exp(std::lgamma(n + k) - std::lgamma(k + 1.0) - std::lgamma(static_cast<double>(n)));
}

// Visits every multiset of size k over n items as a count vector, passing the
// running state produced by `step` for each (item, count) choice.
template <typename State, typename Step, typename Leaf>
void for_each_multiset(int n, int k, const State& init, const Step& step, const Leaf& leaf) {
    struct Walker {
        int n;
        const Step& step;
        const Leaf& leaf;
        void run(int item, int remaining, const State& s) const {
            if (item == n - 1) {
                leaf(step(s, item, remaining));
                return;
            }
            for (int c = 0; c <= remaining; ++c) run(item + 1, remaining - c, step(s, item, c));
        }
    };
    Walker{n, step, leaf}.run(0, k, init);
}

}  // namespace

InequalityReport check_theorem1(const Eigen::Ref<const Eigen::MatrixXd>& table, std::span<const int> labels,
                                Setting setting, const HardeningSpec& hardening, const LossSpec& spec,
                                int k, int n_mc, std::uint64_t seed) {
    check_table(table, labels);
    validate(spec);
    validate(hardening);
    if (hardening.variant == HardeningVariant::None)
        throw ConfigurationError("check_theorem1: hardening must not be 'none'");
    if (n_mc < 1000) throw ConfigurationError("check_theorem1: need n_mc >= 1000");
    if (k < 1) throw ConfigurationError("check_theorem1: need k >= 1");

    const int n = static_cast<int>(labels.size());
    const auto members = same_label_members(labels);
    const NegativeMode mode = mode_of(setting);
    std::vector<NegativeSampler> plain, tilted;
    plain.reserve(static_cast<std::size_t>(n));
    tilted.reserve(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        try {
            plain.emplace_back(table.col(a), table, labels, labels[a], mode, HardeningSpec::none());
            tilted.emplace_back(table.col(a), table, labels, labels[a], mode, hardening);
        } catch (const ConfigurationError& e) {
            throw ConfigurationError("check_theorem1: anchor " + std::to_string(a) + ": " + e.what());
        }
    }

    Rng pair_rng(seed);
    Rng plain_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    Rng tilted_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> pick_anchor(0, n - 1);
    std::vector<int> idx_plain(static_cast<std::size_t>(k)), idx_tilted(static_cast<std::size_t>(k));
    std::vector<double> t(static_cast<std::size_t>(k));
    RunningStats lhs, rhs, diff;

    for (int draw = 0; draw < n_mc; ++draw) {
        const int a = pick_anchor(pair_rng);
        const auto& same = members[a];
        const int p = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(pair_rng)];
        const Eigen::VectorXd anchor = table.col(a);
        const double ap = anchor.dot(table.col(p));

        plain[a].draw(plain_rng, idx_plain);
        tilted[a].draw(tilted_rng, idx_tilted);
        for (int m = 0; m < k; ++m) t[m] = anchor.dot(table.col(idx_plain[m])) - ap;
        const double loss_plain = psi(spec, t);
        for (int m = 0; m < k; ++m) t[m] = anchor.dot(table.col(idx_tilted[m])) - ap;
        const double loss_tilted = psi(spec, t);

        lhs.add(loss_tilted);
        rhs.add(loss_plain);
        diff.add(loss_tilted - loss_plain);
    }

    InequalityReport out;
    out.lhs_estimate = lhs.mean;
    out.rhs_estimate = rhs.mean;
    out.lhs_stderr = lhs.stderr_of_mean();
    out.rhs_stderr = rhs.stderr_of_mean();
    out.combined_stderr = diff.stderr_of_mean();
    out.n_draws = n_mc;
    out.holds_within_3se = out.lhs_estimate >= out.rhs_estimate - 3.0 * out.combined_stderr;
    return out;
}

ExactLosses theorem1_exact(const Eigen::Ref<const Eigen::MatrixXd>& table, std::span<const int> labels,
                           Setting setting, const HardeningSpec& hardening, const LossSpec& spec, int k) {
    check_table(table, labels);
    validate(spec);
    validate(hardening);
    if (k < 1) throw ConfigurationError("theorem1_exact: need k >= 1");

    const int n = static_cast<int>(labels.size());
    const auto members = same_label_members(labels);
    const bool exclude = setting == Setting::Supervised;

    std::vector<std::vector<int>> pools(static_cast<std::size_t>(n));
    double work = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int j = 0; j < n; ++j)
            if (!exclude || labels[j] != labels[a]) pools[a].push_back(j);
        if (pools[a].empty()) throw ConfigurationError("theorem1_exact: anchor " + std::to_string(a) + " has no negatives");
        if (spec.variant != LossVariant::Triplet)
            work += multiset_count(static_cast<int>(pools[a].size()), k) * (members[a].size() + 4.0);
    }
    if (work > kMaxExactWork) throw EnumerationTooLarge("theorem1_exact: enumeration exceeds the work budget");

    std::vector<double> lgf(static_cast<std::size_t>(k) + 1);
    for (int c = 0; c <= k; ++c) lgf[c] = std::lgamma(c + 1.0);
    const double log_kfact = lgf[k];
    const double scale = spec.variant == LossVariant::InfoNceMean ? 1.0 / k : 1.0;

    std::vector<double> hardened(static_cast<std::size_t>(n)), plain(static_cast<std::size_t>(n));
    std::vector<long long> visited(static_cast<std::size_t>(n), 0);

    parallel_for(n, [&](int a) {
        const auto& pool = pools[a];
        const int m = static_cast<int>(pool.size());
        const Eigen::VectorXd anchor = table.col(a);

        std::vector<double> u(static_cast<std::size_t>(m)), logq(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            u[j] = anchor.dot(table.col(pool[j]));
            logq[j] = log_hardening_weight(hardening, u[j]);
        }
        const double log_gamma = log_sum_exp(logq);
        if (!std::isfinite(log_gamma)) throw ConfigurationError("theorem1_exact: hardening weights vanish");
        for (double& v : logq) v -= log_gamma;
        const double logp = -std::log(static_cast<double>(m));

        const auto& positives = members[a];
        std::vector<double> c(positives.size());
        for (std::size_t i = 0; i < positives.size(); ++i) c[i] = anchor.dot(table.col(positives[i]));

        double sum_plain = 0.0, sum_tilted = 0.0;
        if (spec.variant == LossVariant::Triplet) {
            // separable: E[sum_i max(u_i - c + alpha, 0)] = k E[max(u - c + alpha, 0)]
            for (double cp : c) {
                double ep = 0.0, eq = 0.0;
                for (int j = 0; j < m; ++j) {
                    const double h = std::max(u[j] - cp + spec.alpha, 0.0);
                    ep += std::exp(logp) * h;
                    eq += std::exp(logq[j]) * h;
                }
                sum_plain += k * ep;
                sum_tilted += k * eq;
            }
        } else {
            const double top = *std::max_element(u.begin(), u.end());
            std::vector<double> e(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) e[j] = std::exp(u[j] - top);
            // psi(u - c) = log(alpha + b S), S = sum_i e^{u_i - top}, b = scale e^{top - c}
            std::vector<double> b(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) b[i] = scale * std::exp(top - c[i]);
            const double alpha = spec.alpha;

            struct State {
                double s, lp, lq;
            };
            auto step = [&](const State& st, int item, int count) {
                if (count == 0) return st;
                return State{st.s + count * e[item], st.lp + count * logp - lgf[count],
                             logq[item] == -INFINITY ? -INFINITY : st.lq + count * logq[item] - lgf[count]};
            };
            long long leaves = 0;
            auto leaf = [&](const State& st) {
                ++leaves;
                // sum over positives of log(alpha + b S), as the log of a product flushed before overflow
                double prod = 1.0, logs = 0.0;
                for (double bi : b) {
                    prod *= alpha + bi * st.s;
                    if (prod > 1e250) {
                        logs += std::log(prod);
                        prod = 1.0;
                    }
                }
                logs += std::log(prod);
                sum_plain += std::exp(log_kfact + st.lp) * logs;
                if (st.lq != -INFINITY) sum_tilted += std::exp(log_kfact + st.lq) * logs;
            };
            for_each_multiset(m, k, State{0.0, 0.0, 0.0}, step, leaf);
            visited[a] = leaves;
        }
        plain[a] = sum_plain / static_cast<double>(positives.size());
        hardened[a] = sum_tilted / static_cast<double>(positives.size());
    });

    ExactLosses out;
    for (int a = 0; a < n; ++a) {
        out.plain += plain[a];
        out.hardened += hardened[a];
        out.multisets += visited[a];
    }
    out.plain /= n;
    out.hardened /= n;
    return out;
}

GammaEstimate theorem1_importance_weighted(const Eigen::Ref<const Eigen::MatrixXd>& table,
                                           std::span<const int> labels, Setting setting,
                                           const HardeningSpec& hardening, const LossSpec& spec, int k,
                                           int n_mc, std::uint64_t seed) {
    check_table(table, labels);
    validate(spec);
    validate(hardening);
    if (n_mc < 2) throw ConfigurationError("theorem1_importance_weighted: need n_mc >= 2");
    const int n = static_cast<int>(labels.size());
    const auto members = same_label_members(labels);
    const NegativeMode mode = mode_of(setting);

    std::vector<NegativeSampler> plain;
    std::vector<double> mean_weight(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) {
        plain.emplace_back(table.col(a), table, labels, labels[a], mode, HardeningSpec::none());
        double acc = 0.0;
        for (int j : plain.back().eligible()) acc += hardening_weight(hardening, table.col(a).dot(table.col(j)));
        mean_weight[a] = acc / plain.back().eligible_count();
    }

    Rng rng(seed);
    std::uniform_int_distribution<int> pick_anchor(0, n - 1);
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::vector<double> t(static_cast<std::size_t>(k));
    RunningStats stats;
    for (int draw = 0; draw < n_mc; ++draw) {
        const int a = pick_anchor(rng);
        const auto& same = members[a];
        const int p = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)];
        const Eigen::VectorXd anchor = table.col(a);
        const double ap = anchor.dot(table.col(p));
        plain[a].draw(rng, idx);
        // gamma = (mean weight)^k for a separable hardening over IID negatives
        double ratio = 1.0;
        for (int m = 0; m < k; ++m) {
            const double u = anchor.dot(table.col(idx[m]));
            t[m] = u - ap;
            ratio *= hardening_weight(hardening, u) / mean_weight[a];
        }
        stats.add(ratio * psi(spec, t));
    }
    return {stats.mean, stats.stderr_of_mean()};
}

InequalityReport check_harris(const TupleFunction& weight, const TupleFunction& payoff,
                              std::span<const double> support, std::span<const double> probabilities, int k) {
    if (support.empty() || support.size() != probabilities.size())
        throw DimensionError("check_harris: support and probabilities must be non-empty and aligned");
    if (k < 1) throw ConfigurationError("check_harris: need k >= 1");
    const auto s = static_cast<int>(support.size());
    if (k * std::log(static_cast<double>(s)) > std::log(kMaxHarrisTuples) + 1e-9)
        throw EnumerationTooLarge("check_harris: support^k exceeds " + std::to_string(kMaxHarrisTuples));

    std::vector<int> digits(static_cast<std::size_t>(k), 0);
    std::vector<double> u(static_cast<std::size_t>(k));
    double mass = 0.0, gamma = 0.0, tilted = 0.0, plain = 0.0;
    long long tuples = 0;
    while (true) {
        double p = 1.0;
        for (int i = 0; i < k; ++i) {
            u[i] = support[digits[i]];
            p *= probabilities[digits[i]];
        }
        const double w = weight(u);
        const double g = payoff(u);
        if (!std::isfinite(w) || w < 0.0) throw NumericError("check_harris: weight must be finite and non-negative");
        mass += p;
        gamma += p * w;
        tilted += p * w * g;
        plain += p * g;
        ++tuples;
        int pos = 0;
        while (pos < k && ++digits[pos] == s) digits[pos++] = 0;
        if (pos == k) break;
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw NumericError("check_harris: weights need a positive finite mean");

    InequalityReport out;
    out.lhs_estimate = tilted / gamma;
    out.rhs_estimate = plain / mass;
    out.n_draws = tuples;
    out.exact = true;
    const double slack = 1e-12 * (1.0 + std::abs(out.rhs_estimate));
    out.holds_within_3se = out.lhs_estimate >= out.rhs_estimate - slack;
    return out;
}

double collapsed_encoder_loss(const Eigen::Ref<const ClassMeans>& means, int k, const LossSpec& spec,
                              Setting setting) {
    const int c = static_cast<int>(means.cols());
    if (c < 2) throw DimensionError("collapsed_encoder_loss: need C >= 2");
    if (k < 1) throw ConfigurationError("collapsed_encoder_loss: need k >= 1");
    validate(spec);
    const Eigen::MatrixXd gram = means.transpose() * means;

    double total = 0.0;
    for (int y = 0; y < c; ++y) {
        // distribution of one argument z^T z-_i - z^T z+ given anchor class y
        std::vector<std::pair<double, double>> atoms;
        for (int other = 0; other < c; ++other) {
            if (setting == Setting::Supervised && other == y) continue;
            atoms.emplace_back(gram(y, other) - gram(y, y), 1.0);
        }
        std::sort(atoms.begin(), atoms.end());
        std::vector<double> values, probs;
        const double total_count = static_cast<double>(atoms.size());
        for (std::size_t i = 0; i < atoms.size();) {
            std::size_t j = i;
            double sum = 0.0;
            while (j < atoms.size() && atoms[j].first - atoms[i].first <= 1e-14) sum += atoms[j++].first;
            values.push_back(sum / static_cast<double>(j - i));
            probs.push_back(static_cast<double>(j - i) / total_count);
            i = j;
        }
        const int n = static_cast<int>(values.size());
        if (multiset_count(n, k) > kMaxCompositions)
            throw EnumerationTooLarge("collapsed_encoder_loss: too many distinct negative values");

        std::vector<double> logp(values.size());
        for (int i = 0; i < n; ++i) logp[i] = std::log(probs[i]);
        std::vector<int> counts(static_cast<std::size_t>(n), 0);
        std::vector<double> t(static_cast<std::size_t>(k));
        const double log_kfact = std::lgamma(k + 1.0);

        struct State {
            int depth;
            double logw;
        };
        double acc = 0.0;
        auto step = [&](const State& st, int item, int count) {
            counts[item] = count;
            return State{st.depth + 1, st.logw + count * logp[item] - std::lgamma(count + 1.0)};
        };
        auto leaf = [&](const State& st) {
            std::size_t pos = 0;
            for (int i = 0; i < n; ++i)
                for (int r = 0; r < counts[i]; ++r) t[pos++] = values[i];
            acc += std::exp(log_kfact + st.logw) * psi(spec, t);
        };
        for_each_multiset(n, k, State{0, 0.0}, step, leaf);
        total += acc;
    }
    return total / c;
}

NcOptimalityReport check_collapsed_encoder(const Eigen::Ref<const ClassMeans>& means, int k,
                                           const LossSpec& spec, Setting setting) {
    const int c = static_cast<int>(means.cols());
    NcOptimalityReport out;
    out.achieved = collapsed_encoder_loss(means, k, spec, setting);
    out.bound = setting == Setting::Supervised ? scl_lower_bound(c, k, spec).value
                                               : ucl_lower_bound(c, k, spec).value;
    out.gap = out.achieved - out.bound;
    return out;
}

NcOptimalityReport check_nc_optimality(int num_classes, int k, const LossSpec& spec, Setting setting) {
    return check_collapsed_encoder(make_etf(num_classes, num_classes - 1, 0), k, spec, setting);
}

BatchedReport batched_empirical_loss(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                                     std::span<const int> labels, std::span<const int> batch_sizes,
                                     const LossSpec& spec, int k, std::uint64_t seed) {
    if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols())
        throw DimensionError("batched_empirical_loss: label count does not match embedding count");
    long long covered = 0;
    for (int b : batch_sizes) {
        if (b < 1) throw ConfigurationError("invalid partition: batch sizes must be positive");
        covered += b;
    }
    if (batch_sizes.empty() || covered != static_cast<long long>(labels.size()))
        throw ConfigurationError("invalid partition: batch sizes must sum to the dataset size");

    Rng rng(seed);
    BatchedReport out;
    int offset = 0;
    double weighted = 0.0;
    for (std::size_t b = 0; b < batch_sizes.size(); ++b) {
        const int size = batch_sizes[b];
        const Eigen::MatrixXd z = embeddings.middleCols(offset, size);
        const std::span<const int> y = labels.subspan(static_cast<std::size_t>(offset), static_cast<std::size_t>(size));
        try {
            const auto source =
                minibatch_negative_source(z, y, NegativeMode::SupervisedExclude, HardeningSpec::none(), rng);
            const double value = batch_loss(z, y, spec, source, k).value;
            out.per_batch.push_back(value);
            weighted += size * value;
        } catch (const ConfigurationError& e) {
            throw ConfigurationError("batch " + std::to_string(b) + ": " + e.what());
        }
        offset += size;
    }
    out.value = weighted / static_cast<double>(labels.size());
    return out;
}

BatchedReport check_batched_equality(int num_classes, int per_class, std::span<const int> batch_sizes, int k,
                                     const LossSpec& spec, std::uint64_t seed) {
    if (per_class < 1) throw ConfigurationError("check_batched_equality: need per_class >= 1");
    const ClassMeans etf = make_etf(num_classes, num_classes - 1, seed);
    const int n = num_classes * per_class;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Eigen::MatrixXd z(etf.rows(), n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        labels[i] = order[i] / per_class;
        z.col(i) = etf.col(labels[i]);
    }
    BatchedReport out = batched_empirical_loss(z, labels, batch_sizes, spec, k, seed + 1);
    out.bound = scl_lower_bound(num_classes, k, spec).value;
    out.gap = out.value - out.bound;
    return out;
}

}  // namespace nclab
