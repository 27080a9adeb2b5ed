#include "nclab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "nclab/csv.hpp"
#include "nclab/error.hpp"

namespace nclab {

std::string to_string(BoundMethod method) {
    switch (method) {
        case BoundMethod::ClosedForm: return "closed_form";
        case BoundMethod::Binomial: return "binomial";
        case BoundMethod::Enumeration: return "enumeration";
    }
    return "unknown";
}

double log_binomial(int n, int m) {
    if (m < 0 || m > n) return -INFINITY;
    return std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
}

namespace {

void check_args(int num_classes, int k, const LossSpec& spec) {
    if (num_classes < 2) throw ConfigurationError("bound: need C >= 2");
    if (k < 1) throw ConfigurationError("bound: need k >= 1");
    validate(spec);
}

constexpr int kDirectBinomialMaxK = 60;

// Multiplicative formula; every partial product is an integer.
double binomial_coefficient(int n, int m) {
    m = std::min(m, n - m);
    double c = 1.0;
    for (int i = 1; i <= m; ++i) c = c * (n - m + i) / i;
    return c;
}

double separated(int num_classes) {
    return -static_cast<double>(num_classes) / (num_classes - 1);
}

}  // namespace

BoundResult scl_lower_bound(int num_classes, int k, const LossSpec& spec) {
    check_args(num_classes, k, spec);
    return {psi_constant(spec, k, separated(num_classes)), num_classes, k, spec, BoundMethod::ClosedForm};
}

BoundResult ucl_lower_bound(int num_classes, int k, const LossSpec& spec, BoundMethod method) {
    check_args(num_classes, k, spec);
    const double far = separated(num_classes);
    BoundResult out{0.0, num_classes, k, spec, method};

    if (method == BoundMethod::Enumeration) {
        if ((k + 1) * std::log(static_cast<double>(num_classes)) > std::log(kMaxEnumeration) + 1e-9)
            throw EnumerationTooLarge("ucl_lower_bound: C^(k+1) exceeds " + std::to_string(kMaxEnumeration));
        // odometer over (y, y-_1..y-_k)
        std::vector<int> tuple(static_cast<std::size_t>(k) + 1, 0);
        std::vector<double> t(static_cast<std::size_t>(k));
        double acc = 0.0;
        long long count = 0;
        while (true) {
            for (int i = 0; i < k; ++i) t[i] = tuple[i + 1] != tuple[0] ? far : 0.0;
            acc += psi(spec, t);
            ++count;
            std::size_t pos = 0;
            while (pos < tuple.size() && ++tuple[pos] == num_classes) tuple[pos++] = 0;
            if (pos == tuple.size()) break;
        }
        out.value = acc / static_cast<double>(count);
        return out;
    }
    if (method != BoundMethod::Binomial) throw ConfigurationError("ucl_lower_bound: method must be binomial or enumeration");

    // m collisions ~ Binomial(k, 1/C). Small k uses direct products so that
    // e.g. k = 1 reproduces 1/C bit for bit; larger k works in log space.
    const double hit = 1.0 / num_classes;
    const double miss = 1.0 - hit;
    const double log_hit = -std::log(static_cast<double>(num_classes));
    const double log_miss = std::log1p(-hit);
    double acc = 0.0;
    for (int m = 0; m <= k; ++m) {
        double w = 0.0;
        if (k <= kDirectBinomialMaxK)
            w = binomial_coefficient(k, m) * std::pow(hit, m) * std::pow(miss, k - m);
        else
            w = std::exp(log_binomial(k, m) + m * log_hit + (k - m) * log_miss);
        acc += w * psi_two_level(spec, k, m, 0.0, far);
    }
    out.value = acc;
    return out;
}

BoundResult ucl_lb_closed_form_k1(int num_classes, const LossSpec& spec) {
    check_args(num_classes, 1, spec);
    const double c = num_classes;
    const double value =
        ((c - 1.0) * psi_constant(spec, 1, separated(num_classes)) + psi_constant(spec, 1, 0.0)) / c;
    return {value, num_classes, 1, spec, BoundMethod::ClosedForm};
}

std::vector<SweepRow> lb_sweep(std::span<const int> class_range, std::span<const int> k_range,
                               const LossSpec& spec) {
    if (class_range.empty() || k_range.empty()) throw ConfigurationError("lb_sweep: empty range");
    std::vector<SweepRow> rows;
    rows.reserve(class_range.size() * k_range.size());
    for (int c : class_range)
        for (int k : k_range)
            rows.push_back({c, k, spec, scl_lower_bound(c, k, spec).value, ucl_lower_bound(c, k, spec).value});
    return rows;
}

std::vector<MonotonicityViolation> sweep_violations(std::span<const SweepRow> rows) {
    std::map<std::pair<int, int>, const SweepRow*> grid;
    for (const auto& r : rows) grid[{r.num_classes, r.k}] = &r;
    std::vector<MonotonicityViolation> out;
    for (const auto& [key, row] : grid) {
        const auto [c, k] = key;
        // next larger C and next larger k present in the table
        auto next_c = grid.end();
        for (auto it = grid.begin(); it != grid.end(); ++it)
            if (it->first.second == k && it->first.first > c &&
                (next_c == grid.end() || it->first.first < next_c->first.first))
                next_c = it;
        auto next_k = grid.upper_bound({c, k});
        if (next_k != grid.end() && next_k->first.first != c) next_k = grid.end();

        if (next_c != grid.end()) {
            const SweepRow& n = *next_c->second;
            if (!(n.ucl_bound < row->ucl_bound))
                out.push_back({"ucl_decreasing_in_C", c, k, row->ucl_bound, n.ucl_bound});
            if (!(n.scl_bound >= row->scl_bound))
                out.push_back({"scl_nondecreasing_in_C", c, k, row->scl_bound, n.scl_bound});
        }
        if (next_k != grid.end()) {
            const SweepRow& n = *next_k->second;
            if (!(n.ucl_bound > row->ucl_bound))
                out.push_back({"ucl_increasing_in_k", c, k, row->ucl_bound, n.ucl_bound});
        }
    }
    return out;
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
    CsvWriter out(path);
    out.row({"C", "k", "variant", "alpha", "scl_bound", "ucl_bound"});
    for (const auto& r : rows)
        out.row({std::to_string(r.num_classes), std::to_string(r.k), to_string(r.spec.variant),
                 format_real(r.spec.alpha, 17), format_real(r.scl_bound, 17), format_real(r.ucl_bound, 17)});
}

}  // namespace nclab
