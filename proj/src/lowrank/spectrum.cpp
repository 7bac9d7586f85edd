#include "cycloroute/lowrank/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::lowrank {

namespace {

// FFTW planning is not thread-safe; execution of a private plan is.
std::mutex& planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t nfft) : nfft_(nfft) {
    in_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * nfft)));
    out_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (nfft / 2 + 1))));
    if (!in_ || !out_) throw Error(ErrorCode::InvalidArgument, "FFT buffer allocation failed");
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw Error(ErrorCode::InvalidArgument, "FFT planning failed");
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t bin) const {
    return out_.get()[bin][0] * out_.get()[bin][0] + out_.get()[bin][1] * out_.get()[bin][1];
  }

 private:
  std::size_t nfft_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

std::size_t SpectrumReport::peak_bin() const {
  return static_cast<std::size_t>(std::max_element(psd.begin(), psd.end()) - psd.begin());
}

SpectrumReport welch_psd(std::span<const double> series, const WelchParams& params) {
  const std::size_t seg = params.resolved_segment();
  const std::size_t overlap = params.resolved_overlap();
  const std::size_t nfft = params.nfft;
  if (!(params.fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling frequency must be positive");
  if (seg < 2) throw Error(ErrorCode::InvalidArgument, "segment length must be at least 2");
  if (overlap >= seg) throw Error(ErrorCode::InvalidArgument, "overlap must be below the segment length");
  if (nfft < seg) throw Error(ErrorCode::InvalidArgument, "nfft must be at least the segment length");
  if (series.size() < seg) {
    throw Error(ErrorCode::SeriesTooShort, "series of length " + std::to_string(series.size()) +
                                               " shorter than segment length " + std::to_string(seg));
  }

  std::vector<double> window(seg);
  double window_energy = 0.0;
  for (std::size_t i = 0; i < seg; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(seg));
    window_energy += window[i] * window[i];
  }

  const std::size_t bins = nfft / 2 + 1;
  const std::size_t step = seg - overlap;
  SpectrumReport report;
  report.params = params;
  report.psd.assign(bins, 0.0);
  report.frequencies.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    report.frequencies[b] = static_cast<double>(b) * params.fs / static_cast<double>(nfft);
  }

  RealFft fft(nfft);
  double* in = fft.input();
  for (std::size_t start = 0; start + seg <= series.size(); start += step) {
    for (std::size_t i = 0; i < seg; ++i) in[i] = series[start + i] * window[i];
    std::fill(in + seg, in + nfft, 0.0);
    fft.execute();
    for (std::size_t b = 0; b < bins; ++b) report.psd[b] += fft.power(b);
    ++report.segments;
  }

  const double scale = 1.0 / (params.fs * window_energy * static_cast<double>(report.segments));
  for (std::size_t b = 0; b < bins; ++b) {
    const bool edge = b == 0 || (nfft % 2 == 0 && b == bins - 1);
    report.psd[b] *= edge ? scale : 2.0 * scale;
  }
  return report;
}

std::vector<SpectrumReport> psd_of_modes(const Eigen::MatrixXd& right_factors,
                                         std::span<const std::size_t> modes,
                                         const WelchParams& params) {
  std::vector<SpectrumReport> out;
  out.reserve(modes.size());
  for (std::size_t mode : modes) {
    if (mode >= static_cast<std::size_t>(right_factors.cols())) {
      throw Error(ErrorCode::OutOfRange, "mode " + std::to_string(mode) + " not among the " +
                                             std::to_string(right_factors.cols()) + " retained modes");
    }
    const auto col = right_factors.col(static_cast<Eigen::Index>(mode));
    SpectrumReport r = welch_psd(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), params);
    r.mode = mode;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cycloroute::lowrank
