#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include <Eigen/Dense>

namespace test {

inline double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Upper 0.999 quantile of chi-square with `df` degrees of freedom
// (Wilson-Hilferty, accurate to a few percent for df >= 3).
inline double chi_square_999(int df) {
    const double z = 3.090232306167813;
    const double a = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

}  // namespace test
