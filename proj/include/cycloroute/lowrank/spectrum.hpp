#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cycloroute::lowrank {

struct WelchParams {
  double fs = 144.0;                           // samples per day
  std::size_t nfft = 144 * 28;
  std::optional<std::size_t> segment_length;   // defaults to nfft
  std::optional<std::size_t> overlap;          // samples; defaults to half a segment

  std::size_t resolved_segment() const { return segment_length.value_or(nfft); }
  std::size_t resolved_overlap() const { return overlap.value_or(resolved_segment() / 2); }
};

struct SpectrumReport {
  std::size_t mode = 0;
  std::vector<double> frequencies;  // cycles/day, 0 .. fs/2
  std::vector<double> psd;          // one-sided density
  std::size_t segments = 0;
  WelchParams params;

  /// Index of the largest PSD value.
  std::size_t peak_bin() const;
};

/// Welch average of Hann-windowed periodograms, one-sided density scaling.
SpectrumReport welch_psd(std::span<const double> series, const WelchParams& params = {});

/// Welch PSD of selected columns (0-based) of an n x k right-factor matrix.
std::vector<SpectrumReport> psd_of_modes(const Eigen::MatrixXd& right_factors,
                                         std::span<const std::size_t> modes,
                                         const WelchParams& params = {});

}  // namespace cycloroute::lowrank
