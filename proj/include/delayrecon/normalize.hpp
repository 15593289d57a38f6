#pragma once

#include "delayrecon/core.hpp"

#include <string_view>
#include <utility>

namespace delayrecon::normalize {

enum class Mode { None, AffineLinf, ZScore };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

/// Per-column affine map x -> (x - center) / scale and its inverse.
struct Transform {
    Mode mode = Mode::None;
    Vector center;
    Vector scale;

    static Transform identity(Index columns);

    Matrix apply(const Matrix& data) const;
    Matrix invert(const Matrix& normalized) const;
};

/// affine_linf: one midrange center and one scale for all entries, so |x'| <= 1 everywhere.
/// zscore: per-column mean and population standard deviation; constant columns pass
/// through unchanged with a warning.
std::pair<Matrix, Transform> normalize(const Matrix& data, Mode mode);

}  // namespace delayrecon::normalize
