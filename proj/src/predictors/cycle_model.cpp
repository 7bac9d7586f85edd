#include "cycloroute/predictors/cycle_model.hpp"

#include <cmath>
#include <string>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::predictors {

std::size_t CycleConfig::L() const {
  validate();
  return static_cast<std::size_t>(cycle_period / resolution);
}

void CycleConfig::validate() const {
  if (resolution <= 0 || cycle_period <= 0 || cycle_period % resolution != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "cycle period " + std::to_string(cycle_period) +
                    " s is not a positive multiple of resolution " + std::to_string(resolution) + " s");
  }
}

Eigen::VectorXd project_coefficients(std::span<const double> w, const Eigen::MatrixXd& basis) {
  if (w.size() != static_cast<std::size_t>(basis.rows())) {
    throw Error(ErrorCode::DimensionMismatch, "observation length " + std::to_string(w.size()) +
                                                  " vs basis rows " + std::to_string(basis.rows()));
  }
  const Eigen::Map<const Eigen::VectorXd> v(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd rhs = basis.transpose() * v;
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  const double off = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (off <= 1e-10) return rhs;
  return gram.ldlt().solve(rhs);
}

CycleModel::CycleModel(ModelKind kind, std::shared_ptr<const lowrank::SpatialBasis> basis,
                       std::size_t m, std::size_t dim, CycleConfig cfg, std::int64_t anchor_epoch)
    : kind_(kind), basis_(std::move(basis)), m_(m), cfg_(cfg), anchor_epoch_(anchor_epoch) {
  const std::size_t L = cfg_.L();
  alphas_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(dim));
  counts_.assign(L, 0);
}

CycleModel CycleModel::lowrank(std::shared_ptr<const lowrank::SpatialBasis> basis, CycleConfig cfg,
                               std::int64_t anchor_epoch) {
  if (!basis || basis->k() == 0) throw Error(ErrorCode::InvalidArgument, "low-rank model needs a basis");
  const std::size_t m = basis->m();
  const std::size_t k = basis->k();
  return CycleModel(ModelKind::CycloLowRank, std::move(basis), m, k, cfg, anchor_epoch);
}

CycleModel CycleModel::fullrank(std::size_t m, CycleConfig cfg, std::int64_t anchor_epoch) {
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "full-rank model needs m > 0");
  return CycleModel(ModelKind::CycloFullRank, nullptr, m, m, cfg, anchor_epoch);
}

CycleModel CycleModel::static_lowrank(std::shared_ptr<const lowrank::SpatialBasis> basis,
                                      std::int64_t resolution, std::int64_t anchor_epoch) {
  if (!basis || basis->k() == 0) throw Error(ErrorCode::InvalidArgument, "low-rank model needs a basis");
  const std::size_t m = basis->m();
  const std::size_t k = basis->k();
  return CycleModel(ModelKind::LowRankStatic, std::move(basis), m, k, {resolution, resolution},
                    anchor_epoch);
}

std::size_t CycleModel::phase(Timestamp t) const {
  const double steps = std::floor((t - static_cast<double>(anchor_epoch_)) /
                                  static_cast<double>(cfg_.resolution));
  const auto L = static_cast<long long>(counts_.size());
  long long l = static_cast<long long>(steps) % L;
  if (l < 0) l += L;
  return static_cast<std::size_t>(l);
}

Eigen::VectorXd CycleModel::coefficients(std::span<const double> w) const {
  if (w.size() != m_) {
    throw Error(ErrorCode::DimensionMismatch,
                "observation length " + std::to_string(w.size()) + " vs m=" + std::to_string(m_));
  }
  if (!basis_) return Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return project_coefficients(w, basis_->u_bar);
}

void CycleModel::ingest(std::size_t l, std::span<const double> w) {
  update_running_mean(*this, l, coefficients(w));
}

Eigen::VectorXd CycleModel::predict_phase(std::size_t l) const {
  if (l >= counts_.size()) throw Error(ErrorCode::OutOfRange, "phase " + std::to_string(l) + " out of range");
  if (counts_[l] == 0) {
    throw Error(ErrorCode::ColdStart, "no completed cycle observed for phase " + std::to_string(l));
  }
  const Eigen::VectorXd a = alphas_.row(static_cast<Eigen::Index>(l)).transpose();
  if (!basis_) return a;
  return basis_->u_bar * a;
}

void CycleModel::restore(Eigen::MatrixXd alphas, std::vector<std::uint64_t> counts) {
  if (alphas.rows() != alphas_.rows() || alphas.cols() != alphas_.cols() || counts.size() != counts_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "restored state does not match model shape");
  }
  alphas_ = std::move(alphas);
  counts_ = std::move(counts);
}

void update_running_mean(CycleModel& model, std::size_t l, const Eigen::VectorXd& alpha_hat) {
  if (l >= model.counts_.size()) {
    throw Error(ErrorCode::OutOfRange, "phase " + std::to_string(l) + " out of range");
  }
  if (alpha_hat.size() != model.alphas_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient vector has wrong length");
  }
  const double p = static_cast<double>(++model.counts_[l]);
  auto row = model.alphas_.row(static_cast<Eigen::Index>(l));
  row = ((p - 1.0) / p) * row + (1.0 / p) * alpha_hat.transpose();
}

std::size_t ingest_columns(CycleModel& model, const TrafficMatrix& training) {
  if (training.m() != model.m()) {
    throw Error(ErrorCode::DimensionMismatch, "training matrix has " + std::to_string(training.m()) +
                                                  " rows, model expects " + std::to_string(model.m()));
  }
  if (training.grid().resolution() != model.config().resolution) {
    throw Error(ErrorCode::InvalidArgument, "training resolution differs from cycle resolution");
  }
  std::size_t used = 0;
  for (std::size_t j = 0; j < training.n(); ++j) {
    if (!training.column_observed(j)) continue;
    model.ingest(model.phase(training.grid().interval_start(j)), training.column(j));
    ++used;
  }
  return used;
}

namespace {

CycleModel finish_fit(CycleModel model, const TrafficMatrix& training) {
  if (ingest_columns(model, training) == 0) {
    throw Error(ErrorCode::InsufficientData, "no fully observed training interval");
  }
  return model;
}

}  // namespace

CycleModel fit_cyclo(const TrafficMatrix& training,
                     std::shared_ptr<const lowrank::SpatialBasis> basis, const CycleConfig& cfg) {
  return finish_fit(CycleModel::lowrank(std::move(basis), cfg, training.grid().start_epoch()), training);
}

CycleModel fit_fullrank(const TrafficMatrix& training, const CycleConfig& cfg) {
  return finish_fit(CycleModel::fullrank(training.m(), cfg, training.grid().start_epoch()), training);
}

CycleModel fit_static(const TrafficMatrix& training,
                      std::shared_ptr<const lowrank::SpatialBasis> basis) {
  return finish_fit(CycleModel::static_lowrank(std::move(basis), training.grid().resolution(),
                                               training.grid().start_epoch()),
                    training);
}

}  // namespace cycloroute::predictors
