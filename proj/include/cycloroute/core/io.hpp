#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "cycloroute/core/road_network.hpp"
#include "cycloroute/core/traffic_matrix.hpp"

namespace cycloroute::io {

// Graph file: UTF-8 text, one edge per line as
//   edge_id,from_vertex,to_vertex,segment_row
// Blank lines and lines starting with '#' are ignored. A comment of the form
// "# vertices=N" fixes the vertex count (otherwise max vertex id + 1).
RoadNetwork read_graph(const std::filesystem::path& path);
RoadNetwork parse_graph(const std::string& text);
void write_graph(const std::filesystem::path& path, const RoadNetwork& network);

// Binary container:
//   8 bytes   magic "CYCLOMAT"
//   8 bytes   header length H, unsigned little-endian
//   H bytes   JSON header (UTF-8)
//   rows*cols IEEE-754 float64 values, row-major, byte order per header
//   ceil(rows*cols/8) bytes packed mask (only if has_mask): bit i of the
//             row-major cell index is bit (i % 8) of byte (i / 8), 1 = observed
// Required header keys: kind, m (rows), n (cols), byte_order, layout, has_mask.
struct Container {
  nlohmann::json header;
  Eigen::MatrixXd data;
  std::optional<Mask> mask;
};

inline constexpr char kContainerMagic[8] = {'C', 'Y', 'C', 'L', 'O', 'M', 'A', 'T'};

void write_container(const std::filesystem::path& path, const Container& container);
Container read_container(const std::filesystem::path& path);
/// Reads and validates only the JSON header.
nlohmann::json read_container_header(const std::filesystem::path& path);

/// Traffic matrices use kind "traffic_matrix" plus start_epoch and resolution.
void write_matrix(const std::filesystem::path& path, const TrafficMatrix& matrix,
                  const nlohmann::json& extra = nlohmann::json::object());
TrafficMatrix read_matrix(const std::filesystem::path& path);

/// CSV import: one row per segment, one column per interval, empty cell =
/// missing. A first line whose first cell is not numeric is treated as a header.
TrafficMatrix import_matrix_csv(const std::filesystem::path& path, std::int64_t start_epoch,
                                std::int64_t resolution);
void export_matrix_csv(const std::filesystem::path& path, const TrafficMatrix& matrix);

/// 64-bit FNV-1a over the raw float64 bit patterns, used to tie model files
/// to the basis they were fitted against.
std::uint64_t fingerprint(const Eigen::MatrixXd& data);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace cycloroute::io
