#include "delayrecon/normalize.hpp"

#include <cmath>
#include <string>

namespace delayrecon::normalize {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::None: return "none";
        case Mode::AffineLinf: return "affine_linf";
        case Mode::ZScore: return "zscore";
    }
    return "none";
}

Mode parse_mode(std::string_view name) {
    if (name == "none") return Mode::None;
    if (name == "affine_linf") return Mode::AffineLinf;
    if (name == "zscore") return Mode::ZScore;
    throw std::invalid_argument("unknown normalization '" + std::string(name) + "'");
}

Transform Transform::identity(Index columns) {
    return {Mode::None, Vector::Zero(columns), Vector::Ones(columns)};
}

Matrix Transform::apply(const Matrix& data) const {
    if (data.cols() != center.size()) throw std::invalid_argument("transform column count mismatch");
    return ((data.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Matrix Transform::invert(const Matrix& normalized) const {
    if (normalized.cols() != center.size()) throw std::invalid_argument("transform column count mismatch");
    return ((normalized.array().rowwise() * scale.transpose().array()).rowwise() + center.transpose().array()).matrix();
}

std::pair<Matrix, Transform> normalize(const Matrix& data, Mode mode) {
    if (data.size() == 0) throw std::invalid_argument("cannot normalize an empty matrix");
    const Index cols = data.cols();
    Transform t = Transform::identity(cols);
    t.mode = mode;
    switch (mode) {
        case Mode::None: break;
        case Mode::AffineLinf: {
            const double center = 0.5 * (data.minCoeff() + data.maxCoeff());
            double scale = (data.array() - center).abs().maxCoeff();
            if (!(scale > 0.0)) {
                warn("affine_linf normalization of constant data; scale left at 1");
                scale = 1.0;
            }
            t.center.setConstant(center);
            t.scale.setConstant(scale);
            break;
        }
        case Mode::ZScore: {
            const double rows = static_cast<double>(data.rows());
            for (Index j = 0; j < cols; ++j) {
                const double mean = data.col(j).sum() / rows;
                const double var = (data.col(j).array() - mean).square().sum() / rows;
                if (!(var > 0.0)) {
                    warn("column " + std::to_string(j) + " has zero variance and passes through unnormalized");
                    continue;
                }
                t.center[j] = mean;
                t.scale[j] = std::sqrt(var);
            }
            break;
        }
    }
    return {t.apply(data), t};
}

}  // namespace delayrecon::normalize
