#pragma once

#include <filesystem>

#include "cycloroute/predictors/cycle_model.hpp"

namespace cycloroute::predictors {

/// Container kind "cycle_model": data is the L x dim running-mean table. The
/// header holds the model kind, cycle config, anchor, counts, segment count
/// and, for
/// low-rank kinds, a reference {path, fingerprint} to the basis file. The
/// stored path is relative to the model file's directory.
void save_model(const std::filesystem::path& path, const CycleModel& model,
                const std::filesystem::path& basis_path = {});

/// Loads the model and its referenced basis; ParseError if the basis
/// fingerprint does not match.
CycleModel load_model(const std::filesystem::path& path);

}  // namespace cycloroute::predictors
