#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cycloroute::evaluation {

/// Extra realized travel time of a predictor over the real-time benchmark.
/// Negative values are legal.
inline double regret(double t_pred, double t_rt) { return t_pred - t_rt; }

/// Smallest y in the sample support with (#samples > y) / N <= alpha.
double upper_quantile(std::span<const double> samples, double alpha);

struct Ccdf {
  std::vector<double> support;     // sorted unique sample values
  std::vector<double> exceedance;  // Pr(R > support[i])
};

Ccdf ccdf(std::span<const double> samples);

/// Reads q^up(alpha) off a CCDF: the first support point whose exceedance
/// is at most alpha.
double quantile_from_ccdf(const Ccdf& curve, double alpha);

struct QuantileValue {
  double alpha = 0.0;
  double value = 0.0;
};

struct RegretStats {
  std::size_t count = 0;
  double mean = 0.0;
  std::vector<QuantileValue> quantiles;
  Ccdf curve;
};

/// Mean (summed in sample order), quantiles at each alpha and, optionally,
/// the CCDF. An empty sample set yields count 0 and no quantiles.
RegretStats summarize(std::span<const double> samples, std::span<const double> alphas,
                      bool with_ccdf = true);

}  // namespace cycloroute::evaluation
