#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "nclab/train.hpp"
#include "nclab/verify.hpp"

namespace nclab::cli {

enum ExitCode { kSuccess = 0, kFailure = 1, kUsage = 2 };

// Values below this are clamped when spectra are written for log-scale plots.
inline constexpr double kLogPlotFloor = 1e-12;

// A training run as described by a JSON file. Relative paths resolve against
// the directory holding the file.
struct RunConfigFile {
    TrainConfig train;
    std::filesystem::path out_dir;
};

RunConfigFile parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfigFile load_run_config(const std::filesystem::path& path);

nlohmann::json summary_json(const TrainConfig& config, const TrainResult& result);

// Harris fixture over a 5-point support with k = 2: a separable piecewise
// linear weight prod_i phi(u_i) and a piecewise linear payoff
// sum_i a_i u_i + w_i max(u_i - knot_i, 0). The decreasing fixture keeps only
// the first coordinate's term and negates it.
struct HarrisCase {
    std::vector<double> support;
    std::vector<double> probabilities;
    int k = 2;
    double weight_base = 1.0;
    double weight_slope = 0.0;
    double weight_knot = 0.0;
    double weight_hinge = 0.0;
    std::vector<double> slopes;
    std::vector<double> hinges;
    std::vector<double> knots;
    bool decreasing = false;

    double weight(std::span<const double> u) const;
    double payoff(std::span<const double> u) const;
    InequalityReport check() const;
};

HarrisCase random_harris_case(std::uint64_t seed, bool decreasing);

// Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nclab::cli
