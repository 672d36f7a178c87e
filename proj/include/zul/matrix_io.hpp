#pragma once

#include <filesystem>
#include <string>

#include "zul/matrix.hpp"

namespace zul {

// zumx-csv v1: header line `# zumx v1 rows=<r> cols=<c>`, then r lines of
// c comma-separated decimals printed with 17 significant digits (lossless
// double round-trip). The parser rejects dimension mismatches and
// non-finite entries.
std::string to_zumx(const Matrix& m);
Matrix from_zumx(const std::string& text, const std::string& origin = "<string>");

void write_zumx(const Matrix& m, const std::filesystem::path& path);
Matrix read_zumx(const std::filesystem::path& path);

}  // namespace zul
