#pragma once

#include <span>
#include <string>
#include <vector>

#include "nclab/loss.hpp"

namespace nclab {

enum class BoundMethod { ClosedForm, Binomial, Enumeration };

std::string to_string(BoundMethod method);

struct BoundResult {
    double value = 0.0;
    int num_classes = 0;
    int k = 0;
    LossSpec spec;
    BoundMethod method = BoundMethod::ClosedForm;
};

// Largest label-tuple count the enumeration route will visit.
inline constexpr double kMaxEnumeration = 1e6;

double log_binomial(int n, int m);

/// Supervised bound psi_k(-C/(C-1), ..., -C/(C-1)).
BoundResult scl_lower_bound(int num_classes, int k, const LossSpec& spec);

/// Unsupervised bound: the average of psi_k over all (C)^{k+1} label tuples,
/// where an argument is 0 on a class collision and -C/(C-1) otherwise.
/// Binomial groups tuples by collision count (valid for the permutation
/// symmetric psi variants provided); Enumeration visits every tuple and is
/// limited to C^{k+1} <= 1e6.
BoundResult ucl_lower_bound(int num_classes, int k, const LossSpec& spec,
                            BoundMethod method = BoundMethod::Binomial);

/// k = 1 closed form (1/C)((C-1) psi_1(-C/(C-1)) + psi_1(0)).
BoundResult ucl_lb_closed_form_k1(int num_classes, const LossSpec& spec);

struct SweepRow {
    int num_classes = 0;
    int k = 0;
    LossSpec spec;
    double scl_bound = 0.0;
    double ucl_bound = 0.0;
};

// Cartesian table over C_range x k_range, C-major.
std::vector<SweepRow> lb_sweep(std::span<const int> class_range, std::span<const int> k_range,
                               const LossSpec& spec);

struct MonotonicityViolation {
    std::string property;
    int num_classes = 0;
    int k = 0;
    double before = 0.0;
    double after = 0.0;
};

// Checks UCL strictly decreasing in C, UCL strictly increasing in k and SCL
// non-decreasing in C across neighbouring rows of a sweep.
std::vector<MonotonicityViolation> sweep_violations(std::span<const SweepRow> rows);

// Columns C,k,variant,alpha,scl_bound,ucl_bound.
void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

}  // namespace nclab
