#pragma once

#include <filesystem>

#include "cycloroute/lowrank/svd.hpp"

namespace cycloroute::lowrank {

/// Container kind "spatial_basis": data is the m x k basis; the header carries
/// k, singular_values and trained_on {start_epoch, end_epoch, m, n}.
void write_basis(const std::filesystem::path& path, const SpatialBasis& basis);
SpatialBasis read_basis(const std::filesystem::path& path);

}  // namespace cycloroute::lowrank
