#pragma once

#include "delayrecon/core.hpp"
#include "delayrecon/model.hpp"
#include "delayrecon/pod.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace delayrecon::io {

struct Section {
    std::string name;
    Matrix data;
};

using Sections = std::vector<Section>;

/// DMAT container layout, all little-endian:
///   "DMAT" | u16 version (=1) | u16 section count |
///   per section: u16 name length | UTF-8 name | u64 rows | u64 cols | rows*cols f64 row-major
inline constexpr std::uint16_t kDmatVersion = 1;

std::vector<std::uint8_t> encode_dmat(const Sections& sections);
/// Throws FormatError naming the byte offset of the first problem; never returns partial data.
Sections decode_dmat(const std::vector<std::uint8_t>& bytes);

void save_dmat(const std::filesystem::path& path, const Sections& sections);
Sections load_dmat(const std::filesystem::path& path);

const Matrix& find_section(const Sections& sections, std::string_view name);
const Matrix* try_find_section(const Sections& sections, std::string_view name);

/// Column selectors are zero-based indices or header names; empty selects every column.
Matrix load_csv_series(const std::filesystem::path& path, const std::vector<std::string>& columns = {});
Matrix parse_csv_series(const std::string& text, const std::vector<std::string>& columns = {});

void save_csv(const std::filesystem::path& path, const Matrix& data, const std::vector<std::string>& header = {});

/// Reads a matrix from .csv or .dmat (section `name`, or the first section when empty).
Matrix load_matrix(const std::filesystem::path& path, std::string_view name = {});
/// Writes a matrix as .csv or as a single-section .dmat named `name`.
void save_matrix(const std::filesystem::path& path, const Matrix& data, std::string_view name = "data");

/// Network checkpoint: "layer_dims" (1 x L) then weight_l / bias_l for each layer.
Sections checkpoint_sections(const model::MlpParams& params);
model::MlpParams params_from_sections(const Sections& sections);

/// POD basis as sections "mean", "modes", "eigenvalues".
Sections basis_sections(const pod::PodBasis& basis);
pod::PodBasis basis_from_sections(const Sections& sections);

/// Stable 64-bit FNV-1a digest of the encoded bytes.
std::uint64_t digest(const std::vector<std::uint8_t>& bytes) noexcept;

/// Formats a double with 17 significant digits (round-trippable, locale independent).
std::string format_double(double value);

}  // namespace delayrecon::io
