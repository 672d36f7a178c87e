#include <doctest.h>

#include <filesystem>

#include "zul/errors.hpp"
#include "zul/matrix_io.hpp"
#include "zul/rng.hpp"

using namespace zul;

TEST_CASE("zumx round trip is bit exact") {
  RngStream rng(17, "io");
  const Matrix m = 1e3 * rng.gaussian_matrix(5, 7);
  const Matrix back = from_zumx(to_zumx(m));
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 7);
  CHECK((back.array() == m.array()).all());
}

TEST_CASE("zumx header carries dimensions") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const std::string text = to_zumx(m);
  CHECK(text.rfind("# zumx v1 rows=2 cols=3\n", 0) == 0);
}

TEST_CASE("zumx parser rejects malformed input") {
  CHECK_THROWS_AS(from_zumx(""), ValidationError);
  CHECK_THROWS_AS(from_zumx("rows=2 cols=2\n1,2\n3,4\n"), ValidationError);
  // fewer rows than the header promises
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=2 cols=2\n1,2\n"), ValidationError);
  // fewer columns in a row
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=1 cols=3\n1,2\n"), ValidationError);
  // extra columns
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=1 cols=1\n1,2\n"), ValidationError);
  // extra rows
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=1 cols=1\n1\n2\n"), ValidationError);
  // non-finite entries
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=1 cols=1\nnan\n"), ValidationError);
  CHECK_THROWS_AS(from_zumx("# zumx v1 rows=1 cols=1\ninf\n"), ValidationError);
}

TEST_CASE("zumx supports zero-dimension matrices") {
  const Matrix empty_cols(3, 0);
  const Matrix back = from_zumx(to_zumx(empty_cols));
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 0);

  const Matrix empty_rows(0, 4);
  const Matrix back2 = from_zumx(to_zumx(empty_rows));
  CHECK(back2.rows() == 0);
  CHECK(back2.cols() == 4);
}

TEST_CASE("zumx file io round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "zul_io_test";
  std::filesystem::create_directories(dir);
  RngStream rng(23, "io-file");
  const Matrix m = rng.gaussian_matrix(4, 4);
  write_zumx(m, dir / "m.csv");
  CHECK((read_zumx(dir / "m.csv").array() == m.array()).all());
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(read_zumx(dir / "missing.csv"), IoError);
  CHECK_THROWS_AS(write_zumx(m, dir / "nodir" / "m.csv"), IoError);
}
