#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace delayrecon {

// Dense row-major storage: rows are time samples, columns are state dimensions.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a computation produces non-finite values or diverges.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on malformed DMAT/CSV input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for invalid experiment configuration or CLI usage.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using WarningSink = std::function<void(std::string_view)>;

/// Replaces the warning sink (default writes to stderr). Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

void warn(std::string_view message);

bool all_finite(const Matrix& m);

}  // namespace delayrecon
