#include "cycloroute/evaluation/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::evaluation {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

}  // namespace

double upper_quantile(std::span<const double> samples, double alpha) {
  check_alpha(alpha);
  return quantile_from_ccdf(ccdf(samples), alpha);
}

Ccdf ccdf(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "CCDF of an empty sample set");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite regret sample");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  Ccdf out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.support.push_back(sorted[i]);
    out.exceedance.push_back(static_cast<double>(sorted.size() - j) / n);
    i = j;
  }
  return out;
}

double quantile_from_ccdf(const Ccdf& curve, double alpha) {
  check_alpha(alpha);
  for (std::size_t i = 0; i < curve.support.size(); ++i) {
    if (curve.exceedance[i] <= alpha) return curve.support[i];
  }
  // The last support point always has exceedance 0.
  throw Error(ErrorCode::InvalidArgument, "malformed CCDF");
}

RegretStats summarize(std::span<const double> samples, std::span<const double> alphas, bool with_ccdf) {
  RegretStats out;
  out.count = samples.size();
  if (samples.empty()) return out;
  double sum = 0.0;
  for (double v : samples) sum += v;
  out.mean = sum / static_cast<double>(samples.size());
  Ccdf curve = ccdf(samples);
  for (double a : alphas) out.quantiles.push_back({a, quantile_from_ccdf(curve, a)});
  if (with_ccdf) out.curve = std::move(curve);
  return out;
}

}  // namespace cycloroute::evaluation
