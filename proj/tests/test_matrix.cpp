#include <doctest.h>

#include <cstring>
#include <fstream>

#include "conex/errors.hpp"
#include "conex/matrix_file.hpp"
#include "test_util.hpp"

using namespace conex;
using testutil::TempDir;

TEST_SUITE("matrix") {
  TEST_CASE("shape and access") {
    DenseMatrix m = DenseMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 6);
    CHECK(m.column(1) == std::vector<double>{2, 5});
    const DenseMatrix t = m.transposed();
    CHECK(t.rows() == 3);
    CHECK(t(2, 1) == 6);
    CHECK(m.row_slice(1, 2) == DenseMatrix::from_rows({{4, 5, 6}}));
    CHECK(m.frobenius_sq() == doctest::Approx(91.0));
    CHECK(m.all_nonnegative());
    m(0, 0) = -1;
    CHECK_FALSE(m.all_nonnegative());
    CHECK_THROWS_AS(DenseMatrix::from_rows({{1, 2}, {3}}), PreconditionError);
  }

  TEST_CASE("file round trip within f32 precision") {
    TempDir dir("matrix");
    Rng rng(3);
    const DenseMatrix m = testutil::uniform_matrix(100, 64, rng, 0.0, 10.0);
    write_matrix(m, dir / "m.mat", "acts");
    const DenseMatrix back = read_matrix(dir / "m.mat");
    REQUIRE(back.rows() == 100);
    REQUIRE(back.cols() == 64);
    CHECK(testutil::max_abs_diff(m, back) <= 1e-6 * 10.0);
    CHECK(read_matrix_name(dir / "m.mat") == "acts");
  }

  TEST_CASE("header layout and payload bytes") {
    TempDir dir("matrix");
    write_matrix(DenseMatrix::from_rows({{1.5, -2.0}}), dir / "h.mat", "x");
    std::ifstream in(dir / "h.mat", std::ios::binary);
    std::string header;
    std::getline(in, header);
    CHECK(header == R"({"name":"x","rows":1,"cols":2,"dtype":"f32","byte_order":"LE"})");
    unsigned char payload[8];
    in.read(reinterpret_cast<char*>(payload), 8);
    CHECK(in.gcount() == 8);
    // 1.5f = 0x3FC00000, -2.0f = 0xC0000000, little-endian.
    const unsigned char expect[8] = {0x00, 0x00, 0xC0, 0x3F, 0x00, 0x00, 0x00, 0xC0};
    CHECK(std::memcmp(payload, expect, 8) == 0);
    in.get();
    CHECK(in.eof());
  }

  TEST_CASE("empty shapes round trip") {
    TempDir dir("matrix");
    write_matrix(DenseMatrix(0, 5), dir / "e.mat");
    const DenseMatrix e = read_matrix(dir / "e.mat");
    CHECK(e.rows() == 0);
    CHECK(e.cols() == 5);
  }

  TEST_CASE("malformed files raise format errors") {
    TempDir dir("matrix");
    write_matrix(DenseMatrix(3, 4, 1.0), dir / "ok.mat");
    std::ifstream src(dir / "ok.mat", std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(src)), std::istreambuf_iterator<char>());

    auto write_raw = [&](const std::string& name, const std::string& content) {
      std::ofstream(dir / name, std::ios::binary) << content;
      return dir / name;
    };
    CHECK_THROWS_AS(read_matrix(write_raw("trunc.mat", bytes.substr(0, bytes.size() - 3))), FormatError);
    CHECK_THROWS_AS(read_matrix(write_raw("extra.mat", bytes + "xx")), FormatError);
    CHECK_THROWS_AS(read_matrix(write_raw("nojson.mat", "not json\n")), FormatError);
    CHECK_THROWS_AS(read_matrix(write_raw("dtype.mat", R"({"name":"","rows":1,"cols":1,"dtype":"f64","byte_order":"LE"})"
                                                       "\n12345678")),
                    FormatError);
    CHECK_THROWS_AS(read_matrix(write_raw("order.mat", R"({"name":"","rows":1,"cols":1,"dtype":"f32","byte_order":"BE"})"
                                                       "\n1234")),
                    FormatError);
    CHECK_THROWS_AS(read_matrix(write_raw("rows.mat", R"({"name":"","cols":1,"dtype":"f32","byte_order":"LE"})"
                                                      "\n1234")),
                    FormatError);
    CHECK_THROWS_AS(read_matrix(dir / "missing.mat"), DataError);
  }
}
