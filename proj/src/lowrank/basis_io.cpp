#include "cycloroute/lowrank/basis_io.hpp"

#include "cycloroute/core/errors.hpp"
#include "cycloroute/core/io.hpp"

namespace cycloroute::lowrank {

void write_basis(const std::filesystem::path& path, const SpatialBasis& basis) {
  io::Container c;
  c.header = {{"kind", "spatial_basis"},
              {"k", basis.k()},
              {"singular_values", basis.singular_values},
              {"trained_on",
               {{"start_epoch", basis.trained_on.start_epoch},
                {"end_epoch", basis.trained_on.end_epoch},
                {"m", basis.trained_on.m},
                {"n", basis.trained_on.n}}}};
  c.data = basis.u_bar;
  io::write_container(path, c);
}

SpatialBasis read_basis(const std::filesystem::path& path) {
  io::Container c = io::read_container(path);
  try {
    if (c.header.at("kind") != "spatial_basis") {
      throw Error(ErrorCode::ParseError, path.string() + " is not a spatial basis file");
    }
    SpatialBasis b;
    b.u_bar = std::move(c.data);
    b.singular_values = c.header.at("singular_values").get<std::vector<double>>();
    const auto& t = c.header.at("trained_on");
    b.trained_on.start_epoch = t.at("start_epoch").get<std::int64_t>();
    b.trained_on.end_epoch = t.at("end_epoch").get<std::int64_t>();
    b.trained_on.m = t.at("m").get<std::size_t>();
    b.trained_on.n = t.at("n").get<std::size_t>();
    if (c.header.at("k").get<std::size_t>() != b.k()) {
      throw Error(ErrorCode::ParseError, "basis header k disagrees with data");
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

}  // namespace cycloroute::lowrank
