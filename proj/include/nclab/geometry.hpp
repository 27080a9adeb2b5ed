#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nclab {

using Embedding = Eigen::VectorXd;
// d_Z x C, column j is the mean embedding of class j.
using ClassMeans = Eigen::MatrixXd;

enum class Normalization { UnitBall, UnitSphere, None };

std::string to_string(Normalization mode);
Normalization parse_normalization(const std::string& name);

enum class EtfRotation { Auto, Always, Never };

/// Simplex equiangular tight frame with C unit-norm, zero-sum columns in R^d.
///
/// The first C-1 coordinates carry the Helmert basis scaled by sqrt(C/(C-1)),
/// which gives Gram = C/(C-1) I - 1/(C-1) J without iteration. With
/// EtfRotation::Auto a Haar-random rotation seeded by rotation_seed is applied
/// only when d > C-1, so the padded coordinates are mixed in.
ClassMeans make_etf(int num_classes, int dim, std::uint64_t rotation_seed,
                    EtfRotation rotation = EtfRotation::Auto);

// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed);

/// Maps a raw encoder output into representation space.
/// unit-ball: unchanged when ||z|| <= 1, else z/||z||; unit-sphere: z/||z||; none: z/sqrt(d).
template <typename Derived>
Embedding normalize(const Eigen::MatrixBase<Derived>& z, Normalization mode);

ClassMeans class_means(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                       std::span<const int> labels, int num_classes);

struct NcMetrics {
    double zero_sum = 0.0;
    double unit_norm = 0.0;
    double equal_inner_product = 0.0;
};

NcMetrics nc_metrics(const Eigen::Ref<const ClassMeans>& means);

struct DcSpectrum {
    // Singular values of the class-mean covariance over the largest, descending.
    Eigen::VectorXd values;
    bool degenerate = false;
};

DcSpectrum dc_spectrum(const Eigen::Ref<const ClassMeans>& means);

// Headerless CSV, one row per dimension and one column per class.
void write_class_means_csv(const std::string& path, const Eigen::Ref<const ClassMeans>& means);
ClassMeans read_class_means_csv(const std::string& path);

}  // namespace nclab

#include "nclab/geometry_impl.hpp"
