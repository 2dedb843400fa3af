#include <fstream>
#include <iomanip>

#include "mtbem/operators.hpp"

namespace mtbem {

void write_matrix_market(const Eigen::MatrixXcd& m, const std::string& path, double drop_below) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  // Column-major traversal, 1-based indices.
  std::size_t nnz = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > drop_below) ++nnz;
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  out << std::setprecision(17);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const cd v = m(r, c);
      if (std::abs(v) > drop_below) out << r + 1 << ' ' << c + 1 << ' ' << v.real() << ' ' << v.imag() << '\n';
    }
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace mtbem
