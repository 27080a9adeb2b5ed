#pragma once

#include <cmath>

#include "nclab/error.hpp"

namespace nclab {

template <typename Derived>
Embedding normalize(const Eigen::MatrixBase<Derived>& z, Normalization mode) {
    static_assert(Derived::ColsAtCompileTime == 1 || Derived::ColsAtCompileTime == Eigen::Dynamic);
    Embedding out = z.template cast<double>();
    if (!out.allFinite()) throw DegenerateInputError("normalize: non-finite embedding");
    const double norm = out.norm();
    switch (mode) {
        case Normalization::UnitBall:
            if (norm > 1.0) out /= norm;
            break;
        case Normalization::UnitSphere:
            if (norm < 1e-30) throw DegenerateInputError("normalize: zero vector has no direction on the unit sphere");
            out /= norm;
            break;
        case Normalization::None:
            out /= std::sqrt(static_cast<double>(out.size()));
            break;
    }
    return out;
}

}  // namespace nclab
