#include "delayrecon/io.hpp"
#include "delayrecon/model.hpp"
#include "delayrecon/pod.hpp"
#include "support.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace delayrecon;
using namespace delayrecon::io;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "delayrecon_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

// Independent little-endian writer for the byte-level oracle.
struct Bytes {
    std::vector<std::uint8_t> v;
    void u16(std::uint16_t x) {
        for (int i = 0; i < 2; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }
    void u64(std::uint64_t x) {
        for (int i = 0; i < 8; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
    }
    void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
    void str(std::string_view s) { v.insert(v.end(), s.begin(), s.end()); }
};

}  // namespace

TEST_CASE("dmat layout is byte exact") {
    Matrix m(2, 3);
    m << 1.5, -2.0, 3.25, 0.0, 1e300, -0.125;
    const auto bytes = encode_dmat({{"w", m}});

    Bytes expected;
    expected.str("DMAT");
    expected.u16(1);
    expected.u16(1);
    expected.u16(1);
    expected.str("w");
    expected.u64(2);
    expected.u64(3);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j) expected.f64(m(i, j));
    CHECK(bytes == expected.v);

    const auto back = decode_dmat(bytes);
    REQUIRE(back.size() == 1);
    CHECK(back[0].name == "w");
    CHECK(back[0].data == m);
}

TEST_CASE("empty container is eight bytes") {
    const auto bytes = encode_dmat({});
    CHECK(bytes.size() == 8);
    CHECK(decode_dmat(bytes).empty());

    const auto path = scratch("empty.dmat");
    save_dmat(path, {});
    CHECK(fs::file_size(path) == 8);
    CHECK(load_dmat(path).empty());
}

TEST_CASE("dmat round trip through a file is bit identical") {
    Matrix a = Matrix::Random(4, 5);
    a(0, 0) = -0.0;
    a(1, 1) = std::numeric_limits<double>::denorm_min();
    const Sections s{{"alpha", a}, {"empty", Matrix(0, 3)}, {"unicodé", Matrix::Ones(1, 1)}};
    const auto path = scratch("roundtrip.dmat");
    save_dmat(path, s);
    const auto back = load_dmat(path);
    REQUIRE(back.size() == 3);
    CHECK(std::memcmp(back[0].data.data(), a.data(), sizeof(double) * 20) == 0);
    CHECK(back[1].data.rows() == 0);
    CHECK(back[1].data.cols() == 3);
    CHECK(back[2].name == "unicodé");
    CHECK(encode_dmat(back) == encode_dmat(s));
    CHECK(&find_section(back, "alpha") == &back[0].data);
    CHECK(try_find_section(back, "beta") == nullptr);
    CHECK_THROWS_AS(find_section(back, "beta"), FormatError);
}

TEST_CASE("corrupt dmat input names the byte offset") {
    const auto good = encode_dmat({{"w", Matrix::Ones(2, 2)}});

    auto truncated = good;
    truncated.resize(good.size() - 5);
    try {
        decode_dmat(truncated);
        FAIL("expected truncation error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    auto header_cut = good;
    header_cut.resize(13);
    CHECK_THROWS_AS(decode_dmat(header_cut), FormatError);

    auto magic = good;
    magic[0] = 'X';
    CHECK_THROWS_WITH_AS(decode_dmat(magic), doctest::Contains("offset 0"), FormatError);

    auto version = good;
    version[4] = 2;
    CHECK_THROWS_WITH_AS(decode_dmat(version), doctest::Contains("offset 4"), FormatError);

    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_dmat(trailing), FormatError);

    const auto path = scratch("cut.dmat");
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char*>(truncated.data()), static_cast<std::streamsize>(truncated.size()));
    }
    CHECK_THROWS_AS(load_dmat(path), FormatError);
    CHECK_THROWS(load_dmat(scratch("missing.dmat")));
}

TEST_CASE("csv parsing") {
    Matrix expected(2, 2);
    expected << 1, 2, 3, 4;
    CHECK(parse_csv_series("1,2\n3,4") == expected);
    CHECK(parse_csv_series("t,x\n1,2\n3,4\n") == expected);
    CHECK(parse_csv_series("t,x\n1,2\n3,4\n", {"x"}) == expected.col(1));
    CHECK(parse_csv_series("1,2\n3,4", {"1", "0"}) == expected.rowwise().reverse());
    CHECK(parse_csv_series("1e-3, -2.5\r\n3,4\r\n")(0, 0) == 1e-3);

    CHECK_THROWS_WITH_AS(parse_csv_series("1,2\n3"), doctest::Contains("row 2"), FormatError);
    CHECK_THROWS_WITH_AS(parse_csv_series("1,2\n3,abc"), doctest::Contains("row 2"), FormatError);
    CHECK_THROWS_AS(parse_csv_series(""), FormatError);
    CHECK_THROWS(parse_csv_series("1,2", {"7"}));
    CHECK_THROWS(parse_csv_series("a,b\n1,2", {"c"}));
}

TEST_CASE("csv and matrix files round trip") {
    Matrix m(3, 2);
    m << 0.1, 1.0 / 3.0, -7.0, 1e-300, 12345.678, 2.0;
    const auto csv = scratch("m.csv");
    save_csv(csv, m, {"a", "b"});
    CHECK(load_csv_series(csv) == m);
    CHECK(load_csv_series(csv, {"b"}) == m.col(1));

    const auto dm = scratch("m.dmat");
    save_matrix(dm, m, "data");
    CHECK(load_matrix(dm) == m);
    CHECK(load_matrix(dm, "data") == m);
    save_matrix(csv, m);
    CHECK(load_matrix(csv) == m);
}

TEST_CASE("checkpoints and bases round trip") {
    const auto p = model::init_mlp(std::vector<std::size_t>{3, 5, 4, 2}, 8);
    const auto back = params_from_sections(checkpoint_sections(p));
    CHECK(back.layer_dims == p.layer_dims);
    CHECK(model::flatten(back) == model::flatten(p));

    auto broken = checkpoint_sections(p);
    broken.pop_back();
    CHECK_THROWS(params_from_sections(broken));

    const Matrix snaps = Matrix::Random(10, 6);
    const auto basis = pod::pod_basis(snaps, 3);
    const auto b2 = basis_from_sections(basis_sections(basis));
    CHECK(b2.mean == basis.mean);
    CHECK(b2.modes == basis.modes);
    CHECK(b2.eigenvalues == basis.eigenvalues);
}

TEST_CASE("double formatting round trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.0, 123456789.125}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(6.0) == "6");
    CHECK(digest(encode_dmat({})) == digest(encode_dmat({})));
    CHECK(digest(encode_dmat({})) != digest(encode_dmat({{"a", Matrix::Zero(1, 1)}})));
}
