#include "delayrecon/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

namespace delayrecon::io {

namespace {

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

    void need(std::size_t n, std::string_view what) const {
        if (remaining() < n) {
            throw FormatError("DMAT truncated at byte offset " + std::to_string(pos_) + " while reading " +
                              std::string(what));
        }
    }
    std::uint16_t u16(std::string_view what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint64_t u64(std::string_view what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64(std::string_view what) { return std::bit_cast<double>(u64(what)); }
    std::string str(std::size_t n, std::string_view what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
        pos_ += n;
        return s;
    }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::optional<double> parse_number(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split_row(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool has_extension(const std::filesystem::path& path, std::string_view ext) {
    return path.extension() == ext;
}

}  // namespace

std::vector<std::uint8_t> encode_dmat(const Sections& sections) {
    if (sections.size() > 0xffff) throw std::invalid_argument("DMAT holds at most 65535 sections");
    Writer w;
    w.bytes("DMAT", 4);
    w.u16(kDmatVersion);
    w.u16(static_cast<std::uint16_t>(sections.size()));
    for (const Section& s : sections) {
        if (s.name.size() > 0xffff) throw std::invalid_argument("DMAT section name too long: " + s.name);
        w.u16(static_cast<std::uint16_t>(s.name.size()));
        w.bytes(s.name.data(), s.name.size());
        w.u64(static_cast<std::uint64_t>(s.data.rows()));
        w.u64(static_cast<std::uint64_t>(s.data.cols()));
        for (Index i = 0; i < s.data.size(); ++i) w.f64(s.data.data()[i]);
    }
    return w.take();
}

Sections decode_dmat(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    const std::string magic = r.str(4, "magic");
    if (magic != "DMAT") throw FormatError("bad DMAT magic at byte offset 0");
    const std::size_t version_at = r.offset();
    const std::uint16_t version = r.u16("version");
    if (version != kDmatVersion) {
        throw FormatError("unsupported DMAT version " + std::to_string(version) + " at byte offset " +
                          std::to_string(version_at));
    }
    const std::uint16_t count = r.u16("section count");
    Sections sections;
    sections.reserve(count);
    for (std::uint16_t s = 0; s < count; ++s) {
        Section sec;
        const std::uint16_t name_len = r.u16("section name length");
        sec.name = r.str(name_len, "section name");
        const std::size_t shape_at = r.offset();
        const std::uint64_t rows = r.u64("row count");
        const std::uint64_t cols = r.u64("column count");
        if (cols != 0 && rows > (r.remaining() / 8) / cols) {
            throw FormatError("DMAT truncated: section '" + sec.name + "' declared at byte offset " +
                              std::to_string(shape_at) + " needs " + std::to_string(rows) + "x" + std::to_string(cols) +
                              " values but only " + std::to_string(r.remaining()) + " bytes remain after offset " +
                              std::to_string(r.offset()));
        }
        sec.data.resize(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index i = 0; i < sec.data.size(); ++i) sec.data.data()[i] = r.f64("matrix data");
        sections.push_back(std::move(sec));
    }
    if (r.remaining() != 0) {
        throw FormatError("unexpected trailing bytes at byte offset " + std::to_string(r.offset()));
    }
    return sections;
}

void save_dmat(const std::filesystem::path& path, const Sections& sections) {
    const std::vector<std::uint8_t> bytes = encode_dmat(sections);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Sections load_dmat(const std::filesystem::path& path) { return decode_dmat(read_file(path)); }

const Matrix* try_find_section(const Sections& sections, std::string_view name) {
    for (const Section& s : sections) {
        if (s.name == name) return &s.data;
    }
    return nullptr;
}

const Matrix& find_section(const Sections& sections, std::string_view name) {
    if (const Matrix* m = try_find_section(sections, name)) return *m;
    throw FormatError("DMAT has no section named '" + std::string(name) + "'");
}

Matrix parse_csv_series(const std::string& text, const std::vector<std::string>& columns) {
    std::vector<std::string_view> lines;
    std::string_view rest(text);
    while (!rest.empty()) {
        const std::size_t nl = rest.find('\n');
        lines.push_back(rest.substr(0, nl));
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw FormatError("CSV input is empty");

    std::vector<std::string> header;
    std::size_t first_data = 0;
    {
        const auto cells = split_row(lines[0]);
        bool numeric = true;
        for (auto c : cells) numeric = numeric && parse_number(c).has_value();
        if (!numeric) {
            for (auto c : cells) header.emplace_back(trim(c));
            first_data = 1;
        }
    }
    if (first_data >= lines.size()) throw FormatError("CSV input has a header but no data rows");

    const std::size_t width = split_row(lines[first_data]).size();
    if (!header.empty() && header.size() != width) {
        throw FormatError("CSV header has " + std::to_string(header.size()) + " columns but row " +
                          std::to_string(first_data + 1) + " has " + std::to_string(width));
    }
    std::vector<std::size_t> picked;
    if (columns.empty()) {
        for (std::size_t c = 0; c < width; ++c) picked.push_back(c);
    } else {
        for (const std::string& sel : columns) {
            std::size_t index = width;
            auto found = std::find(header.begin(), header.end(), sel);
            if (found != header.end()) {
                index = static_cast<std::size_t>(found - header.begin());
            } else {
                const auto [ptr, ec] = std::from_chars(sel.data(), sel.data() + sel.size(), index);
                if (ec != std::errc() || ptr != sel.data() + sel.size()) index = width;
            }
            if (index >= width) throw std::invalid_argument("CSV column '" + sel + "' does not exist");
            picked.push_back(index);
        }
    }

    Matrix out(static_cast<Index>(lines.size() - first_data), static_cast<Index>(picked.size()));
    for (std::size_t r = first_data; r < lines.size(); ++r) {
        const auto cells = split_row(lines[r]);
        if (cells.size() != width) {
            throw FormatError("CSV row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                              " columns, expected " + std::to_string(width));
        }
        for (std::size_t k = 0; k < picked.size(); ++k) {
            const auto v = parse_number(cells[picked[k]]);
            if (!v) {
                throw FormatError("CSV row " + std::to_string(r + 1) + ", column " + std::to_string(picked[k] + 1) +
                                  " is not numeric: '" + std::string(trim(cells[picked[k]])) + "'");
            }
            out(static_cast<Index>(r - first_data), static_cast<Index>(k)) = *v;
        }
    }
    return out;
}

Matrix load_csv_series(const std::filesystem::path& path, const std::vector<std::string>& columns) {
    const auto bytes = read_file(path);
    return parse_csv_series(std::string(bytes.begin(), bytes.end()), columns);
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void save_csv(const std::filesystem::path& path, const Matrix& data, const std::vector<std::string>& header) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    if (!header.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
        out << '\n';
    }
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data(i, j));
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Matrix load_matrix(const std::filesystem::path& path, std::string_view name) {
    if (has_extension(path, ".dmat")) {
        const Sections sections = load_dmat(path);
        if (name.empty()) {
            if (sections.empty()) throw FormatError("'" + path.string() + "' has no sections");
            return sections.front().data;
        }
        return find_section(sections, name);
    }
    return load_csv_series(path);
}

void save_matrix(const std::filesystem::path& path, const Matrix& data, std::string_view name) {
    if (has_extension(path, ".dmat")) {
        save_dmat(path, {{std::string(name), data}});
    } else {
        save_csv(path, data);
    }
}

Sections checkpoint_sections(const model::MlpParams& params) {
    Sections out;
    Matrix dims(1, static_cast<Index>(params.layer_dims.size()));
    for (std::size_t i = 0; i < params.layer_dims.size(); ++i) dims(0, static_cast<Index>(i)) = static_cast<double>(params.layer_dims[i]);
    out.push_back({"layer_dims", dims});
    for (std::size_t l = 0; l < params.n_layers(); ++l) {
        out.push_back({"weight_" + std::to_string(l), params.weights[l]});
        out.push_back({"bias_" + std::to_string(l), Matrix(params.biases[l].transpose())});
    }
    return out;
}

model::MlpParams params_from_sections(const Sections& sections) {
    const Matrix& dims = find_section(sections, "layer_dims");
    model::MlpParams params;
    for (Index i = 0; i < dims.size(); ++i) {
        const double d = dims.data()[i];
        if (!(d >= 1.0) || d != std::floor(d)) throw FormatError("checkpoint layer_dims entry is not a positive integer");
        params.layer_dims.push_back(static_cast<std::size_t>(d));
    }
    if (params.layer_dims.size() < 2) throw FormatError("checkpoint needs at least two layer dims");
    for (std::size_t l = 0; l + 1 < params.layer_dims.size(); ++l) {
        const Matrix& w = find_section(sections, "weight_" + std::to_string(l));
        const Matrix& b = find_section(sections, "bias_" + std::to_string(l));
        if (static_cast<std::size_t>(w.rows()) != params.layer_dims[l + 1] ||
            static_cast<std::size_t>(w.cols()) != params.layer_dims[l] ||
            static_cast<std::size_t>(b.size()) != params.layer_dims[l + 1]) {
            throw FormatError("checkpoint tensors for layer " + std::to_string(l) + " do not match layer_dims");
        }
        params.weights.push_back(w);
        params.biases.push_back(Eigen::Map<const Vector>(b.data(), b.size()));
    }
    return params;
}

Sections basis_sections(const pod::PodBasis& basis) {
    return {{"mean", Matrix(basis.mean.transpose())}, {"modes", basis.modes}, {"eigenvalues", Matrix(basis.eigenvalues.transpose())}};
}

pod::PodBasis basis_from_sections(const Sections& sections) {
    pod::PodBasis basis;
    const Matrix& mean = find_section(sections, "mean");
    const Matrix& eig = find_section(sections, "eigenvalues");
    basis.mean = Eigen::Map<const Vector>(mean.data(), mean.size());
    basis.modes = find_section(sections, "modes");
    basis.eigenvalues = Eigen::Map<const Vector>(eig.data(), eig.size());
    if (basis.modes.rows() != basis.mean.size()) throw FormatError("POD modes do not match the mean length");
    return basis;
}

std::uint64_t digest(const std::vector<std::uint8_t>& bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace delayrecon::io
