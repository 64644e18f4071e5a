#pragma once

#include <vector>

#include "agm/linalg.hpp"
#include "agm/symsum.hpp"

namespace agm::testing {

inline double opnorm(const Matrix& m) { return linalg::spectral_norm(m).value; }

/// Unnormalised complex Gaussian family.
inline symsum::OperatorFamily gaussian_family(int n, int m, Rng& rng) {
  std::vector<Matrix> ops;
  for (int j = 0; j < n; ++j) ops.push_back(complex_gaussian_matrix(m, m, rng));
  return symsum::OperatorFamily(std::move(ops));
}

/// Reference sandwich sum: walks all n^d tuples with a base-n counter and
/// multiplies each product out from scratch. Term for (j_1..j_d) is P* P
/// with P = A_{j_d} ... A_{j_1}.
inline Matrix brute_sandwich(const std::vector<Matrix>& ops, int d, bool distinct) {
  const int n = static_cast<int>(ops.size());
  const auto m = ops.front().rows();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Matrix acc = Matrix::Zero(m, m);
  double count = 0;
  while (true) {
    bool ok = true;
    if (distinct)
      for (int a = 0; a < d && ok; ++a)
        for (int b = a + 1; b < d; ++b)
          if (idx[a] == idx[b]) ok = false;
    if (ok) {
      Matrix p = Matrix::Identity(m, m);
      for (int q = 0; q < d; ++q) p = (ops[idx[q]] * p).eval();
      acc += p.adjoint() * p;
      count += 1;
    }
    int pos = d - 1;
    while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return acc / count;
}

}  // namespace agm::testing
