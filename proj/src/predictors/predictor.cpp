#include "cycloroute/predictors/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::predictors {

const char* to_string(Variant v) noexcept {
  switch (v) {
    case Variant::CycloLowRank: return "cyclo_lowrank";
    case Variant::CycloFullRank: return "cyclo_fullrank";
    case Variant::LowRankStatic: return "lowrank_static";
    case Variant::Lag: return "lag";
    case Variant::Realtime: return "realtime";
    case Variant::StaticOracle: return "static_oracle";
  }
  return "unknown";
}

Predictor::Predictor(std::string name, double floor) : name_(std::move(name)), floor_(floor) {
  if (!(floor > 0.0)) throw Error(ErrorCode::InvalidArgument, "prediction floor must be positive");
}

Eigen::VectorXd Predictor::predict_weights(Timestamp t, const TrafficMatrix& live) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(live.m()));
  predict(t, live, std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

namespace {

void check_size(std::span<double> out, std::size_t m) {
  if (out.size() != m) {
    throw Error(ErrorCode::DimensionMismatch,
                "output buffer of " + std::to_string(out.size()) + " for m=" + std::to_string(m));
  }
}

class CycleSnapshot final : public Predictor {
 public:
  CycleSnapshot(const CycleModel& model, double floor, std::string name)
      : Predictor(std::move(name), floor),
        variant_(model.kind() == ModelKind::CycloLowRank    ? Variant::CycloLowRank
                 : model.kind() == ModelKind::CycloFullRank ? Variant::CycloFullRank
                                                            : Variant::LowRankStatic),
        m_(model.m()),
        resolution_(static_cast<double>(model.config().resolution)),
        anchor_(static_cast<double>(model.anchor_epoch())),
        counts_(model.counts()),
        table_(static_cast<Eigen::Index>(model.m()), static_cast<Eigen::Index>(model.L())) {
    for (std::size_t l = 0; l < model.L(); ++l) {
      if (counts_[l] == 0) {
        table_.col(static_cast<Eigen::Index>(l)).setZero();
        continue;
      }
      table_.col(static_cast<Eigen::Index>(l)) = model.predict_phase(l).cwiseMax(floor);
    }
  }

  Variant variant() const noexcept override { return variant_; }

  void predict(Timestamp t, const TrafficMatrix&, std::span<double> out) const override {
    check_size(out, m_);
    const auto L = static_cast<long long>(counts_.size());
    long long l = static_cast<long long>(std::floor((t - anchor_) / resolution_)) % L;
    if (l < 0) l += L;
    if (counts_[static_cast<std::size_t>(l)] == 0) {
      throw Error(ErrorCode::ColdStart, "no completed cycle observed for phase " + std::to_string(l));
    }
    const double* col = table_.col(static_cast<Eigen::Index>(l)).data();
    std::copy(col, col + m_, out.begin());
  }

 private:
  Variant variant_;
  std::size_t m_;
  double resolution_;
  double anchor_;
  std::vector<std::uint64_t> counts_;
  Eigen::MatrixXd table_;  // m x L
};

class LagPredictor final : public Predictor {
 public:
  LagPredictor(Variant variant, Seconds delta, double floor, std::string name)
      : Predictor(std::move(name), floor), variant_(variant), delta_(delta) {
    if (!(delta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lag must be nonnegative");
  }

  Variant variant() const noexcept override { return variant_; }

  void predict(Timestamp t, const TrafficMatrix& live, std::span<double> out) const override {
    check_size(out, live.m());
    if (!live.grid().covers(t)) {
      throw Error(ErrorCode::OutOfRange, "timestamp " + std::to_string(t) + " outside the live grid");
    }
    const Timestamp source = t - delta_;
    if (source < live.grid().start()) {
      throw Error(ErrorCode::ColdStart, "lag source time precedes the grid");
    }
    const std::size_t col = interval_index(live.grid(), source);
    const auto values = live.column(col);
    for (std::size_t i = 0; i < live.m(); ++i) {
      if (!live.observed(i, col)) {
        throw Error(ErrorCode::MissingValue, "live weight missing for row " + std::to_string(i));
      }
      out[i] = std::max(values[i], floor());
    }
  }

 private:
  Variant variant_;
  Seconds delta_;
};

std::string lag_name(Seconds delta) {
  if (delta == static_cast<double>(kWeekSeconds)) return "lag_week";
  if (delta == static_cast<double>(kDaySeconds)) return "lag_day";
  return "lag_" + std::to_string(static_cast<long long>(delta)) + "s";
}

}  // namespace

PredictorSnapshot freeze(const CycleModel& model, double floor, std::string name) {
  if (name.empty()) {
    name = model.kind() == ModelKind::CycloFullRank ? "cyclo_fullrank"
           : model.kind() == ModelKind::LowRankStatic
               ? "lowrank_static"
               : (model.config().cycle_period == kWeekSeconds ? "cyclo_weekly" : "cyclo_daily");
  }
  return std::make_shared<CycleSnapshot>(model, floor, std::move(name));
}

PredictorSnapshot make_lag(Seconds delta, double floor, std::string name) {
  if (name.empty()) name = lag_name(delta);
  return std::make_shared<LagPredictor>(Variant::Lag, delta, floor, std::move(name));
}

PredictorSnapshot make_realtime(double floor) {
  return std::make_shared<LagPredictor>(Variant::Realtime, 0.0, floor, "realtime");
}

}  // namespace cycloroute::predictors
