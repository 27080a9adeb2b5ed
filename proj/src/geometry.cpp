#include "nclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nclab/csv.hpp"
#include "nclab/error.hpp"

namespace nclab {

std::string to_string(Normalization mode) {
    switch (mode) {
        case Normalization::UnitBall: return "unit-ball";
        case Normalization::UnitSphere: return "unit-sphere";
        case Normalization::None: return "none";
    }
    return "unknown";
}

Normalization parse_normalization(const std::string& name) {
    if (name == "unit-ball") return Normalization::UnitBall;
    if (name == "unit-sphere") return Normalization::UnitSphere;
    if (name == "none") return Normalization::None;
    throw ConfigurationError("unknown normalization mode '" + name + "'");
}

Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd g(dim, dim);
    for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r) g(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    // sign fix makes the distribution Haar
    for (int i = 0; i < dim; ++i)
        if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    return q;
}

ClassMeans make_etf(int num_classes, int dim, std::uint64_t rotation_seed, EtfRotation rotation) {
    if (num_classes < 2) throw DimensionError("make_etf: need at least 2 classes");
    if (dim < num_classes - 1)
        throw DimensionError("make_etf: dimension " + std::to_string(dim) + " < C-1 = " +
                             std::to_string(num_classes - 1));
    const int c = num_classes;
    const double scale = std::sqrt(static_cast<double>(c) / (c - 1));

    // Helmert rows span the orthogonal complement of the all-ones vector.
    ClassMeans m = ClassMeans::Zero(dim, c);
    for (int row = 1; row < c; ++row) {
        const double denom = std::sqrt(static_cast<double>(row) * (row + 1));
        for (int col = 0; col < row; ++col) m(row - 1, col) = scale / denom;
        m(row - 1, row) = -scale * row / denom;
    }

    const bool rotate = rotation == EtfRotation::Always ||
                        (rotation == EtfRotation::Auto && dim > c - 1);
    if (rotate) m = random_orthogonal(dim, rotation_seed) * m;
    return m;
}

ClassMeans class_means(const Eigen::Ref<const Eigen::MatrixXd>& embeddings,
                       std::span<const int> labels, int num_classes) {
    if (static_cast<Eigen::Index>(labels.size()) != embeddings.cols())
        throw DimensionError("class_means: label count does not match embedding count");
    ClassMeans sums = ClassMeans::Zero(embeddings.rows(), num_classes);
    std::vector<int> counts(num_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes)
            throw DimensionError("class_means: label " + std::to_string(y) + " out of range");
        sums.col(y) += embeddings.col(static_cast<Eigen::Index>(i));
        ++counts[y];
    }
    std::vector<int> empty;
    for (int j = 0; j < num_classes; ++j)
        if (counts[j] == 0) empty.push_back(j);
    if (!empty.empty()) {
        std::ostringstream msg;
        msg << "class_means: empty classes:";
        for (int j : empty) msg << ' ' << j;
        throw ConfigurationError(msg.str());
    }
    for (int j = 0; j < num_classes; ++j) sums.col(j) /= counts[j];
    return sums;
}

NcMetrics nc_metrics(const Eigen::Ref<const ClassMeans>& means) {
    const Eigen::Index c = means.cols();
    if (c < 2) throw DimensionError("nc_metrics: need at least 2 classes");
    NcMetrics out;
    out.zero_sum = means.rowwise().sum().norm();
    for (Eigen::Index j = 0; j < c; ++j) out.unit_norm += std::abs(means.col(j).norm() - 1.0);
    out.unit_norm /= static_cast<double>(c);

    const Eigen::MatrixXd gram = means.transpose() * means;
    const double target = -1.0 / static_cast<double>(c - 1);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index k = 0; k < c; ++k)
            if (j != k) acc += std::abs(gram(j, k) - target);
    out.equal_inner_product = acc / static_cast<double>(c * (c - 1));
    return out;
}

DcSpectrum dc_spectrum(const Eigen::Ref<const ClassMeans>& means) {
    const Eigen::Index c = means.cols();
    if (c < 2) throw DimensionError("dc_spectrum: need at least 2 classes");
    const Eigen::VectorXd centre = means.rowwise().mean();
    const Eigen::MatrixXd centred = means.colwise() - centre;
    const Eigen::MatrixXd cov = centred * centred.transpose() / static_cast<double>(c);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cov);
    const Eigen::VectorXd sv = svd.singularValues();
    const Eigen::Index len = std::min(means.rows(), c);

    DcSpectrum out;
    out.values = Eigen::VectorXd::Zero(len);
    const double scale = std::max(1.0, means.colwise().squaredNorm().maxCoeff());
    if (sv.size() == 0 || sv(0) <= 1e-14 * scale) {
        out.degenerate = true;
        return out;
    }
    for (Eigen::Index i = 0; i < len; ++i) out.values(i) = std::clamp(sv(i) / sv(0), 0.0, 1.0);
    out.values(0) = 1.0;
    return out;
}

void write_class_means_csv(const std::string& path, const Eigen::Ref<const ClassMeans>& means) {
    CsvWriter out(path);
    for (Eigen::Index r = 0; r < means.rows(); ++r) {
        std::vector<std::string> row;
        row.reserve(static_cast<std::size_t>(means.cols()));
        for (Eigen::Index c = 0; c < means.cols(); ++c) row.push_back(format_real(means(r, c), 17));
        out.row(row);
    }
}

ClassMeans read_class_means_csv(const std::string& path) {
    const auto rows = read_csv(path);
    if (rows.empty()) throw DimensionError("read_class_means_csv: empty file " + path);
    const std::size_t cols = rows.front().size();
    ClassMeans m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw DimensionError("read_class_means_csv: ragged row in " + path);
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_real(rows[r][c]);
    }
    return m;
}

}  // namespace nclab
