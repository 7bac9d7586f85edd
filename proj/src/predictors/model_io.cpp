#include "cycloroute/predictors/model_io.hpp"

#include <memory>

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"
#include "cycloroute/lowrank/basis_io.hpp"

namespace cycloroute::predictors {

namespace fs = std::filesystem;

namespace {

const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::CycloLowRank: return "cyclo_lowrank";
    case ModelKind::CycloFullRank: return "cyclo_fullrank";
    case ModelKind::LowRankStatic: return "lowrank_static";
  }
  return "unknown";
}

ModelKind parse_kind(const std::string& s) {
  if (s == "cyclo_lowrank") return ModelKind::CycloLowRank;
  if (s == "cyclo_fullrank") return ModelKind::CycloFullRank;
  if (s == "lowrank_static") return ModelKind::LowRankStatic;
  throw Error(ErrorCode::ParseError, "unknown model kind '" + s + "'");
}

fs::path model_dir(const fs::path& path) {
  return fs::absolute(path).parent_path();
}

}  // namespace

void save_model(const fs::path& path, const CycleModel& model, const fs::path& basis_path) {
  io::Container c;
  c.header = {{"kind", "cycle_model"},
              {"model", kind_name(model.kind())},
              {"cycle_period", model.config().cycle_period},
              {"resolution", model.config().resolution},
              {"L", model.L()},
              {"segments", model.m()},
              {"anchor_epoch", model.anchor_epoch()},
              {"counts", model.counts()}};
  if (model.basis()) {
    if (basis_path.empty()) {
      throw Error(ErrorCode::InvalidArgument, "low-rank model files need a basis path");
    }
    c.header["basis"] = {
        {"path", fs::proximate(fs::absolute(basis_path), model_dir(path)).generic_string()},
        {"fingerprint", io::fingerprint(model.basis()->u_bar)}};
  }
  c.data = model.alphas();
  io::write_container(path, c);
}

CycleModel load_model(const fs::path& path) {
  io::Container c = io::read_container(path);
  try {
    if (c.header.at("kind") != "cycle_model") {
      throw Error(ErrorCode::ParseError, path.string() + " is not a model file");
    }
    const ModelKind kind = parse_kind(c.header.at("model").get<std::string>());
    CycleConfig cfg{c.header.at("cycle_period").get<std::int64_t>(),
                    c.header.at("resolution").get<std::int64_t>()};
    const auto anchor = c.header.at("anchor_epoch").get<std::int64_t>();
    auto counts = c.header.at("counts").get<std::vector<std::uint64_t>>();

    std::shared_ptr<const lowrank::SpatialBasis> basis;
    if (kind != ModelKind::CycloFullRank) {
      const auto& ref = c.header.at("basis");
      fs::path bp = ref.at("path").get<std::string>();
      if (bp.is_relative()) bp = model_dir(path) / bp;
      auto loaded = std::make_shared<lowrank::SpatialBasis>(lowrank::read_basis(bp));
      if (io::fingerprint(loaded->u_bar) != ref.at("fingerprint").get<std::uint64_t>()) {
        throw Error(ErrorCode::ParseError, "basis " + bp.string() + " does not match the model's fingerprint");
      }
      basis = std::move(loaded);
    }

    CycleModel model = kind == ModelKind::CycloLowRank ? CycleModel::lowrank(basis, cfg, anchor)
                       : kind == ModelKind::LowRankStatic
                           ? CycleModel::static_lowrank(basis, cfg.resolution, anchor)
                           : CycleModel::fullrank(c.header.at("segments").get<std::size_t>(), cfg, anchor);
    model.restore(std::move(c.data), std::move(counts));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace cycloroute::predictors
