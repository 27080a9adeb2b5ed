#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "nclab/bounds.hpp"
#include "nclab/csv.hpp"
#include "nclab/error.hpp"

namespace nclab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kRunConfigKeys{
    "dataset",    "synthetic",      "out_dir",      "epochs",        "batch_size",  "k",
    "loss",       "alpha",          "hardening",    "beta",          "epsilon",     "normalization",
    "positives",  "noise_variance", "negatives",    "seed",          "hidden_widths", "embedding_dim",
    "learning_rate", "metric_cadence", "init_from"};

const std::set<std::string> kSyntheticKeys{"classes", "per_class", "dim", "seed"};

template <class T>
T get_key(const json& doc, const std::string& key, const std::string& prefix = "") {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigurationError(prefix + key + ": missing or of the wrong type");
    }
}

template <class T>
T get_key_or(const json& doc, const std::string& key, T fallback, const std::string& prefix = "") {
    if (!doc.contains(key)) return fallback;
    return get_key<T>(doc, key, prefix);
}

template <class F>
auto keyed(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw ConfigurationError(key + ": " + e.what());
    }
}

PositiveStrategy::Kind parse_positive_kind(const std::string& name) {
    if (name == "label_based" || name == "label") return PositiveStrategy::Kind::LabelBased;
    if (name == "gaussian_noise" || name == "noise") return PositiveStrategy::Kind::GaussianNoise;
    throw ConfigurationError("unknown positive strategy '" + name + "'");
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

json nc_json(const NcMetrics& nc) {
    return {{"zero_sum", nc.zero_sum}, {"unit_norm", nc.unit_norm}, {"equal_inner_product", nc.equal_inner_product}};
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory '" + dir.string() + "'");
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    std::stringstream s(text);
    std::string item;
    while (std::getline(s, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigurationError(flag + ": '" + item + "' is not an integer");
        }
    }
    if (out.empty()) throw ConfigurationError(flag + ": empty list");
    return out;
}

// ---- gen-data ----

struct GenDataArgs {
    int classes = 3;
    int per_class = 100;
    int dim = 64;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
    if (a.per_class < 1) throw ConfigurationError("--per-class: must be >= 1");
    if (a.classes < 2) throw ConfigurationError("--classes: must be >= 2");
    if (a.dim < 1) throw ConfigurationError("--dim: must be >= 1");
    ensure_dir(a.out);
    const fs::path path = fs::path(a.out) / "dataset.csv";
    write_dataset_csv(path.string(), gen_synthetic(a.classes, a.per_class, a.dim, a.seed));
    out << path.string() << ' ' << hex64(file_checksum(path.string())) << '\n';
    return kSuccess;
}

// ---- train ----

void write_dc_plot_data(const fs::path& path, const std::vector<MetricsRow>& rows) {
    CsvWriter csv(path.string());
    if (rows.empty()) return;
    std::vector<std::string> header{"epoch"};
    for (Eigen::Index i = 0; i < rows.front().dc.size(); ++i) header.push_back("dc_" + std::to_string(i + 1));
    csv.row(header);
    for (const MetricsRow& row : rows) {
        std::vector<std::string> fields{std::to_string(row.epoch)};
        for (Eigen::Index i = 0; i < row.dc.size(); ++i)
            fields.push_back(format_real(std::max(row.dc(i), kLogPlotFloor), 17));
        csv.row(fields);
    }
}

int cmd_train(const std::string& config_path, const std::string& init_from, std::ostream& out) {
    RunConfigFile run = load_run_config(config_path);
    if (!init_from.empty()) run.train.init_from = init_from;
    ensure_dir(run.out_dir);
    run.train.metrics_csv = (run.out_dir / "metrics.csv").string();
    run.train.checkpoint_path = (run.out_dir / "checkpoint.json").string();

    const TrainResult result = train(run.train);

    const json summary = summary_json(run.train, result);
    write_text(run.out_dir / "summary.json", summary.dump(2) + "\n");
    const Eigen::MatrixXd z = embed_dataset(result.params, *run.train.dataset, run.train.normalization);
    write_class_means_csv((run.out_dir / "class_means.csv").string(),
                          class_means(z, run.train.dataset->labels, run.train.dataset->num_classes));
    write_dc_plot_data(run.out_dir / "dc_spectrum.csv", result.rows);
    out << summary.dump() << '\n';
    return kSuccess;
}

// ---- bounds ----

struct BoundsArgs {
    int c_min = 2;
    int c_max = 20;
    int k_min = 1;
    int k_max = 5;
    std::string loss = "infonce_mean";
    double alpha = 1.0;
    std::string out;
    bool svg = false;
};

std::string svg_panel(const std::vector<SweepRow>& rows, bool ucl, const BoundsArgs& a, double x0, double y0) {
    const double w = 420, h = 300, margin = 40;
    double lo = INFINITY, hi = -INFINITY;
    for (const SweepRow& r : rows) {
        const double v = ucl ? r.ucl_bound : r.scl_bound;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const auto px = [&](int c) {
        return x0 + margin + (w - 2 * margin) * (a.c_max == a.c_min ? 0.5 : double(c - a.c_min) / (a.c_max - a.c_min));
    };
    const auto py = [&](double v) { return y0 + h - margin - (h - 2 * margin) * (v - lo) / (hi - lo); };

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::ostringstream s;
    s << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << (ucl ? "UCL" : "SCL") << " lower bound (" << a.loss << ")</text>\n";
    s << "<line x1=\"" << x0 + margin << "\" y1=\"" << y0 + h - margin << "\" x2=\"" << x0 + w - margin
      << "\" y2=\"" << y0 + h - margin << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << x0 + margin << "\" y1=\"" << y0 + margin << "\" x2=\"" << x0 + margin << "\" y2=\""
      << y0 + h - margin << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x0 + w / 2 << "\" y=\"" << y0 + h - 8 << "\" text-anchor=\"middle\">C</text>\n";
    s << "<text x=\"" << px(a.c_min) << "\" y=\"" << y0 + h - margin + 14 << "\" text-anchor=\"middle\">" << a.c_min
      << "</text>\n";
    s << "<text x=\"" << px(a.c_max) << "\" y=\"" << y0 + h - margin + 14 << "\" text-anchor=\"middle\">" << a.c_max
      << "</text>\n";
    s << "<text x=\"" << x0 + margin - 4 << "\" y=\"" << py(lo) << "\" text-anchor=\"end\">" << format_real(lo, 4)
      << "</text>\n";
    s << "<text x=\"" << x0 + margin - 4 << "\" y=\"" << py(hi) << "\" text-anchor=\"end\">" << format_real(hi, 4)
      << "</text>\n";
    for (int k = a.k_min; k <= a.k_max; ++k) {
        const char* color = colors[(k - a.k_min) % 10];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const SweepRow& r : rows)
            if (r.k == k) s << px(r.num_classes) << ',' << py(ucl ? r.ucl_bound : r.scl_bound) << ' ';
        s << "\"/>\n";
        s << "<text x=\"" << x0 + w - margin + 4 << "\" y=\"" << y0 + margin + 12 * (k - a.k_min) << "\" fill=\""
          << color << "\">k=" << k << "</text>\n";
    }
    s << "</g>\n";
    return s.str();
}

int cmd_bounds(const BoundsArgs& a, std::ostream& out) {
    if (a.c_min < 2) throw ConfigurationError("--c-min: must be >= 2");
    if (a.c_max < a.c_min) throw ConfigurationError("--c-max: must be >= --c-min");
    if (a.k_min < 1) throw ConfigurationError("--k-min: must be >= 1");
    if (a.k_max < a.k_min) throw ConfigurationError("--k-max: must be >= --k-min");
    const LossSpec spec{keyed("--loss", [&] { return parse_loss_variant(a.loss); }), a.alpha};
    keyed("--alpha", [&] { validate(spec); return 0; });

    std::vector<int> cs, ks;
    for (int c = a.c_min; c <= a.c_max; ++c) cs.push_back(c);
    for (int k = a.k_min; k <= a.k_max; ++k) ks.push_back(k);
    const auto rows = lb_sweep(cs, ks, spec);

    ensure_dir(a.out);
    const fs::path csv = fs::path(a.out) / "bounds.csv";
    write_sweep_csv(csv.string(), rows);
    out << csv.string() << ' ' << hex64(file_checksum(csv.string())) << '\n';
    if (a.svg) {
        std::ostringstream s;
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"320\">\n"
          << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << svg_panel(rows, false, a, 10, 10) << svg_panel(rows, true, a, 430, 10) << "</svg>\n";
        const fs::path svg = fs::path(a.out) / "bounds.svg";
        write_text(svg, s.str());
        out << svg.string() << '\n';
    }
    return kSuccess;
}

// ---- verify ----

struct VerifyArgs {
    std::string check;
    int classes = 3;
    int k = 2;
    std::string loss = "infonce_mean";
    double alpha = 1.0;
    double beta = 1.0;
    std::string setting = "both";
    std::uint64_t seed = 0;
    int n_mc = 20000;
    int tables = 1;
    int points = 30;
    int dim = 2;
    int per_class = 100;
    std::string batch_sizes = "50,100,150";
    int pairs = 50;
    std::string fixture = "monotone";
    std::string out;
};

std::vector<Setting> settings_of(const std::string& name) {
    if (name == "both") return {Setting::Supervised, Setting::Unsupervised};
    return {keyed("--setting", [&] { return parse_setting(name); })};
}

json report_json(const InequalityReport& r) {
    return {{"lhs", r.lhs_estimate},       {"rhs", r.rhs_estimate},   {"lhs_stderr", r.lhs_stderr},
            {"rhs_stderr", r.rhs_stderr}, {"combined_stderr", r.combined_stderr}, {"n_draws", r.n_draws},
            {"exact", r.exact}};
}

// Random table: `points` samples in the unit ball, labels assigned round robin.
std::pair<Eigen::MatrixXd, std::vector<int>> random_table(int points, int dim, int classes, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd table(dim, points);
    std::vector<int> labels(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        for (int r = 0; r < dim; ++r) table(r, i) = n(rng);
        table.col(i) *= std::pow(u(rng), 1.0 / dim) / table.col(i).norm();
        labels[static_cast<std::size_t>(i)] = i % classes;
    }
    return {table, labels};
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
    const LossSpec spec{keyed("--loss", [&] { return parse_loss_variant(a.loss); }), a.alpha};
    keyed("--alpha", [&] { validate(spec); return 0; });
    if (a.k < 1) throw ConfigurationError("--k: must be >= 1");
    if (a.classes < 2) throw ConfigurationError("--classes: must be >= 2");

    std::ofstream file;
    if (!a.out.empty()) {
        ensure_dir(a.out);
        file.open(fs::path(a.out) / ("verify_" + a.check + ".jsonl"), std::ios::binary | std::ios::trunc);
    }
    bool all_pass = true;
    const auto emit = [&](json params, json estimates, bool pass) {
        all_pass = all_pass && pass;
        const json record{{"check", a.check}, {"parameters", std::move(params)}, {"estimates", std::move(estimates)},
                          {"verdict", pass ? "pass" : "fail"}};
        out << record.dump() << '\n';
        if (file) file << record.dump() << '\n';
    };

    if (a.check == "theorem1") {
        if (a.points < a.classes) throw ConfigurationError("--points: must be >= --classes");
        if (a.dim < 1) throw ConfigurationError("--dim: must be >= 1");
        if (a.tables < 1) throw ConfigurationError("--tables: must be >= 1");
        if (a.n_mc < 1000) throw ConfigurationError("--n-mc: must be >= 1000");
        const HardeningSpec hardening = HardeningSpec::exponential(a.beta);
        keyed("--beta", [&] { validate(hardening); return 0; });
        for (Setting setting : settings_of(a.setting)) {
            for (int t = 0; t < a.tables; ++t) {
                const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(t);
                const auto [table, labels] = random_table(a.points, a.dim, a.classes, seed);
                const InequalityReport mc =
                    check_theorem1(table, labels, setting, hardening, spec, a.k, a.n_mc, seed + 1000003);
                json estimates{{"monte_carlo", report_json(mc)}};
                bool pass = mc.holds_within_3se;
                try {
                    const ExactLosses ex = theorem1_exact(table, labels, setting, hardening, spec, a.k);
                    estimates["exact"] = {{"hardened", ex.hardened}, {"plain", ex.plain}, {"multisets", ex.multisets}};
                    pass = pass && ex.hardened >= ex.plain - 1e-12 * (1.0 + std::abs(ex.plain));
                } catch (const EnumerationTooLarge&) {
                    estimates["exact"] = nullptr;
                }
                emit({{"setting", to_string(setting)}, {"classes", a.classes}, {"points", a.points}, {"dim", a.dim},
                      {"k", a.k}, {"beta", a.beta}, {"loss", to_string(spec.variant)}, {"alpha", spec.alpha},
                      {"seed", seed}, {"n_mc", a.n_mc}},
                     estimates, pass);
            }
        }
    } else if (a.check == "harris") {
        if (a.pairs < 1) throw ConfigurationError("--pairs: must be >= 1");
        bool decreasing = false;
        if (a.fixture == "decreasing") decreasing = true;
        else if (a.fixture != "monotone") throw ConfigurationError("--fixture: expected monotone or decreasing");
        for (int p = 0; p < a.pairs; ++p) {
            const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(p);
            const HarrisCase hc = random_harris_case(seed, decreasing);
            const InequalityReport r = hc.check();
            emit({{"fixture", a.fixture}, {"seed", seed}, {"k", hc.k}, {"support", hc.support}}, report_json(r),
                 r.holds_within_3se);
        }
    } else if (a.check == "nc-optimality") {
        for (Setting setting : settings_of(a.setting)) {
            const NcOptimalityReport r = check_nc_optimality(a.classes, a.k, spec, setting);
            emit({{"setting", to_string(setting)}, {"classes", a.classes}, {"k", a.k},
                  {"loss", to_string(spec.variant)}, {"alpha", spec.alpha}},
                 {{"achieved", r.achieved}, {"bound", r.bound}, {"gap", r.gap}}, std::abs(r.gap) <= 1e-12);
        }
    } else if (a.check == "batched") {
        const std::vector<int> sizes = parse_int_list(a.batch_sizes, "--batch-sizes");
        const BatchedReport r = keyed("--batch-sizes", [&] {
            return check_batched_equality(a.classes, a.per_class, sizes, a.k, spec, a.seed);
        });
        emit({{"classes", a.classes}, {"per_class", a.per_class}, {"batch_sizes", sizes}, {"k", a.k},
              {"loss", to_string(spec.variant)}, {"alpha", spec.alpha}, {"seed", a.seed}},
             {{"value", r.value}, {"bound", r.bound}, {"gap", r.gap}, {"per_batch", r.per_batch}},
             std::abs(r.gap) <= 1e-12);
    } else {
        throw ConfigurationError("--check: unknown check '" + a.check + "'");
    }
    return all_pass ? kSuccess : kFailure;
}

}  // namespace

RunConfigFile parse_run_config(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) throw ConfigurationError("run config: expected a JSON object");
    for (const auto& item : doc.items())
        if (!kRunConfigKeys.count(item.key())) throw ConfigurationError(item.key() + ": unknown key");

    RunConfigFile run;
    TrainConfig& c = run.train;
    if (doc.contains("dataset") == doc.contains("synthetic"))
        throw ConfigurationError("dataset: exactly one of 'dataset' or 'synthetic' is required");
    if (doc.contains("dataset")) {
        const fs::path path = resolve(base_dir, get_key<std::string>(doc, "dataset"));
        c.dataset = std::make_shared<const LabeledDataset>(
            keyed("dataset", [&] { return read_dataset_csv(path.string()); }));
    } else {
        const json& syn = doc.at("synthetic");
        if (!syn.is_object()) throw ConfigurationError("synthetic: expected an object");
        for (const auto& item : syn.items())
            if (!kSyntheticKeys.count(item.key())) throw ConfigurationError("synthetic." + item.key() + ": unknown key");
        const int classes = get_key<int>(syn, "classes", "synthetic.");
        const int per_class = get_key<int>(syn, "per_class", "synthetic.");
        const int dim = get_key<int>(syn, "dim", "synthetic.");
        const auto seed = get_key<std::uint64_t>(syn, "seed", "synthetic.");
        if (classes < 2) throw ConfigurationError("synthetic.classes: must be >= 2");
        if (per_class < 1) throw ConfigurationError("synthetic.per_class: must be >= 1");
        if (dim < 1) throw ConfigurationError("synthetic.dim: must be >= 1");
        c.dataset = std::make_shared<const LabeledDataset>(gen_synthetic(classes, per_class, dim, seed));
    }
    run.out_dir = resolve(base_dir, get_key<std::string>(doc, "out_dir"));
    c.epochs = get_key<int>(doc, "epochs");
    c.batch_size = get_key<int>(doc, "batch_size");
    c.k = get_key<int>(doc, "k");
    if (c.epochs < 0) throw ConfigurationError("epochs: must be >= 0");
    if (c.batch_size < 2) throw ConfigurationError("batch_size: must be >= 2");
    if (c.k < 1) throw ConfigurationError("k: must be >= 1");

    c.loss.variant = keyed("loss", [&] { return parse_loss_variant(get_key_or<std::string>(doc, "loss", "infonce_mean")); });
    c.loss.alpha = get_key_or(doc, "alpha", 1.0);
    keyed("alpha", [&] { validate(c.loss); return 0; });

    c.hardening.variant =
        keyed("hardening", [&] { return parse_hardening_variant(get_key_or<std::string>(doc, "hardening", "none")); });
    c.hardening.beta = get_key_or(doc, "beta", 0.0);
    c.hardening.epsilon = get_key_or(doc, "epsilon", 1.0);
    keyed(c.hardening.variant == HardeningVariant::Polynomial ? "epsilon" : "beta", [&] {
        validate(c.hardening);
        return 0;
    });

    c.normalization = keyed("normalization", [&] {
        return parse_normalization(get_key_or<std::string>(doc, "normalization", "unit-ball"));
    });
    c.positives.kind =
        keyed("positives", [&] { return parse_positive_kind(get_key_or<std::string>(doc, "positives", "label_based")); });
    c.positives.variance = get_key_or(doc, "noise_variance", 0.01);
    if (!(c.positives.variance >= 0.0)) throw ConfigurationError("noise_variance: must be >= 0");
    c.negatives = keyed("negatives", [&] {
        return parse_negative_mode(get_key_or<std::string>(doc, "negatives", "supervised_exclude"));
    });
    c.seed = get_key_or<std::uint64_t>(doc, "seed", 0);
    c.hidden_widths = get_key_or(doc, "hidden_widths", std::vector<int>{256, 128});
    for (int w : c.hidden_widths)
        if (w < 1) throw ConfigurationError("hidden_widths: widths must be positive");
    c.embedding_dim = get_key_or(doc, "embedding_dim", 0);
    if (c.embedding_dim < 0) throw ConfigurationError("embedding_dim: must be >= 0");
    c.learning_rate = get_key_or(doc, "learning_rate", 1e-3);
    if (!(c.learning_rate > 0.0)) throw ConfigurationError("learning_rate: must be positive");
    c.metric_cadence = get_key_or(doc, "metric_cadence", 1);
    if (c.metric_cadence < 1) throw ConfigurationError("metric_cadence: must be >= 1");
    if (doc.contains("init_from")) c.init_from = resolve(base_dir, get_key<std::string>(doc, "init_from")).string();

    validate(c);
    return run;
}

RunConfigFile load_run_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigurationError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_run_config(doc, path.parent_path());
}

json summary_json(const TrainConfig& config, const TrainResult& result) {
    const MetricsRow& last = result.rows.back();
    return {{"epochs", config.epochs},
            {"setting", config.negatives == NegativeMode::SupervisedExclude ? "scl" : "ucl"},
            {"hardening", to_string(config.hardening.variant)},
            {"config_hash", config_hash(config)},
            {"final_loss", last.loss},
            {"nc", nc_json(last.nc)},
            {"dc_spectrum", to_vector(last.dc)},
            {"dc_degenerate", last.dc_degenerate},
            {"bound", last.bound},
            {"gap", last.loss - last.bound}};
}

double HarrisCase::weight(std::span<const double> u) const {
    double w = 1.0;
    for (double x : u) w *= weight_base + weight_slope * (x + 1.0) + weight_hinge * std::max(x - weight_knot, 0.0);
    return w;
}

double HarrisCase::payoff(std::span<const double> u) const {
    const auto term = [&](std::size_t i) { return slopes[i] * u[i] + hinges[i] * std::max(u[i] - knots[i], 0.0); };
    if (decreasing) return -term(0);
    double g = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) g += term(i);
    return g;
}

InequalityReport HarrisCase::check() const {
    return check_harris([this](std::span<const double> u) { return weight(u); },
                        [this](std::span<const double> u) { return payoff(u); }, support, probabilities, k);
}

HarrisCase random_harris_case(std::uint64_t seed, bool decreasing) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.1, 2.0);
    HarrisCase hc;
    hc.decreasing = decreasing;
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
        hc.support.push_back(u(rng));
        hc.probabilities.push_back(pos(rng));
        total += hc.probabilities.back();
    }
    std::sort(hc.support.begin(), hc.support.end());
    for (double& p : hc.probabilities) p /= total;
    hc.weight_base = pos(rng);
    hc.weight_slope = pos(rng);
    hc.weight_knot = u(rng);
    hc.weight_hinge = pos(rng);
    for (int i = 0; i < hc.k; ++i) {
        hc.slopes.push_back(pos(rng));
        hc.hinges.push_back(pos(rng));
        hc.knots.push_back(u(rng));
    }
    return hc;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neural-collapse contrastive learning lab"};
    app.name("nclab");
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic Gaussian class dataset");
    gen_cmd->add_option("--classes", gen.classes, "Number of classes")->required();
    gen_cmd->add_option("--per-class", gen.per_class, "Samples per class")->required();
    gen_cmd->add_option("--dim", gen.dim, "Input dimension")->required();
    gen_cmd->add_option("--seed", gen.seed, "RNG seed");
    gen_cmd->add_option("--out", gen.out, "Output directory")->required();

    std::string config_path, init_from;
    auto* train_cmd = app.add_subcommand("train", "Train an encoder from a JSON run config");
    train_cmd->add_option("--config", config_path, "Run config file")->required();
    train_cmd->add_option("--init-from", init_from, "Start from the parameters of a checkpoint");

    BoundsArgs bounds;
    auto* bounds_cmd = app.add_subcommand("bounds", "Tabulate the SCL and UCL lower bounds");
    bounds_cmd->add_option("--c-min", bounds.c_min, "Smallest class count");
    bounds_cmd->add_option("--c-max", bounds.c_max, "Largest class count");
    bounds_cmd->add_option("--k-min", bounds.k_min, "Smallest negative count");
    bounds_cmd->add_option("--k-max", bounds.k_max, "Largest negative count");
    bounds_cmd->add_option("--loss", bounds.loss, "infonce_mean, infonce_sum or triplet");
    bounds_cmd->add_option("--alpha", bounds.alpha, "Loss constant");
    bounds_cmd->add_option("--out", bounds.out, "Output directory")->required();
    bounds_cmd->add_flag("--svg", bounds.svg, "Also write a line plot");

    VerifyArgs verify;
    auto* verify_cmd = app.add_subcommand("verify", "Numerical checks of the optimality results");
    verify_cmd->add_option("--check", verify.check, "theorem1, harris, nc-optimality or batched")->required();
    verify_cmd->add_option("--classes", verify.classes, "Number of classes");
    verify_cmd->add_option("--k", verify.k, "Negatives per anchor");
    verify_cmd->add_option("--loss", verify.loss, "infonce_mean, infonce_sum or triplet");
    verify_cmd->add_option("--alpha", verify.alpha, "Loss constant");
    verify_cmd->add_option("--beta", verify.beta, "Exponential hardening strength");
    verify_cmd->add_option("--setting", verify.setting, "scl, ucl or both");
    verify_cmd->add_option("--seed", verify.seed, "RNG seed");
    verify_cmd->add_option("--n-mc", verify.n_mc, "Monte-Carlo draws");
    verify_cmd->add_option("--tables", verify.tables, "Random embedding tables");
    verify_cmd->add_option("--points", verify.points, "Points per table");
    verify_cmd->add_option("--dim", verify.dim, "Embedding dimension of the tables");
    verify_cmd->add_option("--per-class", verify.per_class, "Samples per class for the batched check");
    verify_cmd->add_option("--batch-sizes", verify.batch_sizes, "Comma separated batch sizes");
    verify_cmd->add_option("--pairs", verify.pairs, "Random Harris cases");
    verify_cmd->add_option("--fixture", verify.fixture, "monotone or decreasing");
    verify_cmd->add_option("--out", verify.out, "Directory for a copy of the JSON lines");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "nclab: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen, out);
        if (*train_cmd) return cmd_train(config_path, init_from, out);
        if (*bounds_cmd) return cmd_bounds(bounds, out);
        if (*verify_cmd) return cmd_verify(verify, out);
    } catch (const ConfigurationError& e) {
        err << "nclab: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "nclab: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}

}  // namespace nclab::cli
