#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cycloroute::lowrank {

struct MdlResult {
  std::size_t best_k = 0;
  /// curve[k] = MDL(k) for k = 0..m-1.
  std::vector<double> curve;
};

/// Wax-Kailath minimum description length over sample eigenvalues
/// lambda_i = sigma_i^2 / n. Uses the first m singular values.
MdlResult mdl_order(std::span<const double> singular_values, std::size_t m, std::size_t n);

}  // namespace cycloroute::lowrank
