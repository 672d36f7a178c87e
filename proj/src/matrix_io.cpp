#include "zul/matrix_io.hpp"

#include <cerrno>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "zul/errors.hpp"

namespace zul {

namespace {

void fail(const std::string& origin, const std::string& why) {
  throw ValidationError("zumx parse error (" + origin + "): " + why);
}

// strtod accepts "nan"/"inf"; finiteness is checked afterwards.
double parse_double(const char*& p, const char* end, const std::string& origin) {
  char* out = nullptr;
  errno = 0;
  const double v = std::strtod(p, &out);
  if (out == p || out > end || errno == ERANGE)
    fail(origin, "malformed numeric entry");
  p = out;
  return v;
}

}  // namespace

std::string to_zumx(const Matrix& m) {
  if (!m.allFinite())
    throw NumericalError("refusing to serialize non-finite matrix");
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 26 + 64);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# zumx v1 rows=%" PRId64 " cols=%" PRId64 "\n",
                static_cast<std::int64_t>(m.rows()),
                static_cast<std::int64_t>(m.cols()));
  out += buf;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Matrix from_zumx(const std::string& text, const std::string& origin) {
  std::int64_t rows = -1, cols = -1;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(origin, "empty input");
  if (std::sscanf(line.c_str(), "# zumx v1 rows=%" SCNd64 " cols=%" SCNd64,
                  &rows, &cols) != 2)
    fail(origin, "bad header, expected `# zumx v1 rows=<r> cols=<c>`");
  if (rows < 0 || cols < 0) fail(origin, "negative dimensions");

  Matrix m(rows, cols);
  for (std::int64_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      fail(origin, "expected " + std::to_string(rows) + " data rows, got " +
                       std::to_string(i));
    const char* p = line.c_str();
    const char* end = p + line.size();
    for (std::int64_t j = 0; j < cols; ++j) {
      if (j) {
        if (p >= end || *p != ',') fail(origin, "expected ',' in row " +
                                                    std::to_string(i));
        ++p;
      }
      m(i, j) = parse_double(p, end, origin);
    }
    while (p < end && (*p == ' ' || *p == '\r')) ++p;
    if (p != end) fail(origin, "trailing data in row " + std::to_string(i));
  }
  while (std::getline(in, line)) {
    for (char c : line)
      if (c != ' ' && c != '\r') fail(origin, "trailing data after last row");
  }
  if (!m.allFinite()) fail(origin, "non-finite entry");
  return m;
}

void write_zumx(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << to_zumx(m);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_zumx(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_zumx(buf.str(), path.string());
}

}  // namespace zul
