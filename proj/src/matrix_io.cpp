#include "liebn/matrix_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace liebn {

void write_matrices(std::ostream& os, const std::vector<Matrix>& matrices) {
  if (matrices.empty()) throw InvalidInput("write_matrices: nothing to write");
  const Eigen::Index n = matrices.front().rows();
  for (const Matrix& m : matrices)
    if (m.rows() != n || m.cols() != n)
      throw InvalidInput("write_matrices: all matrices must be square of one dimension");
  os << "dim " << n << " count " << matrices.size() << "\n";
  os << std::setprecision(17);
  for (const Matrix& m : matrices) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j) os << ' ';
        os << m(i, j);
      }
      os << '\n';
    }
  }
}

void write_matrices_file(const std::string& path, const std::vector<Matrix>& matrices) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("write_matrices_file: cannot open " + path);
  write_matrices(f, matrices);
}

std::vector<Matrix> read_matrices(std::istream& is) {
  std::string tag_dim;
  std::string tag_count;
  Eigen::Index n = 0;
  std::size_t count = 0;
  if (!(is >> tag_dim >> n >> tag_count >> count) || tag_dim != "dim" || tag_count != "count" ||
      n < 1)
    throw InvalidInput("read_matrices: malformed header, expected 'dim <n> count <m>'");
  std::vector<Matrix> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (!(is >> m(i, j))) {
          std::ostringstream os;
          os << "read_matrices: truncated data in matrix " << k;
          throw InvalidInput(os.str());
        }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<Matrix> read_matrices_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("read_matrices_file: cannot open " + path);
  return read_matrices(f);
}

}  // namespace liebn
