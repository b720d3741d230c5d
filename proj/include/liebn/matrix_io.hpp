#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "liebn/matkernels.hpp"

namespace liebn {

/// Plain-text matrix container: first line "dim <n> count <m>", then m*n
/// lines of n whitespace-separated decimals (17 significant digits),
/// row-major, matrices concatenated.
void write_matrices(std::ostream& os, const std::vector<Matrix>& matrices);
void write_matrices_file(const std::string& path, const std::vector<Matrix>& matrices);

std::vector<Matrix> read_matrices(std::istream& is);
std::vector<Matrix> read_matrices_file(const std::string& path);

}  // namespace liebn
