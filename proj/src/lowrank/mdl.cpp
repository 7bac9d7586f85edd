#include "cycloroute/lowrank/mdl.hpp"

#include <cmath>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::lowrank {

MdlResult mdl_order(std::span<const double> singular_values, std::size_t m, std::size_t n) {
  if (m == 0 || m > n) {
    throw Error(ErrorCode::InvalidArgument, "MDL needs 0 < m <= n");
  }
  if (singular_values.size() < m) {
    throw Error(ErrorCode::DimensionMismatch, "MDL needs m singular values, got " +
                                                  std::to_string(singular_values.size()));
  }
  std::vector<double> lambda(m);
  for (std::size_t i = 0; i < m; ++i) {
    lambda[i] = singular_values[i] * singular_values[i] / static_cast<double>(n);
    if (!(lambda[i] > 0.0)) {
      throw Error(ErrorCode::DegenerateSpectrum,
                  "eigenvalue " + std::to_string(i + 1) + " is not positive");
    }
  }

  // Suffix sums of lambda and log(lambda) give each tail in O(1).
  std::vector<double> tail_sum(m + 1, 0.0), tail_log(m + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) {
    tail_sum[i] = tail_sum[i + 1] + lambda[i];
    tail_log[i] = tail_log[i + 1] + std::log(lambda[i]);
  }

  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  MdlResult out;
  out.curve.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double len = dm - static_cast<double>(k);
    const double log_ratio = tail_log[k] / len - std::log(tail_sum[k] / len);
    const double dk = static_cast<double>(k);
    out.curve[k] = -dn * len * log_ratio + 0.5 * dk * (2.0 * dm - dk) * std::log(dn);
    if (out.curve[k] < out.curve[out.best_k]) out.best_k = k;
  }
  return out;
}

}  // namespace cycloroute::lowrank
