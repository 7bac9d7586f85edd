#include "cycloroute/core/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "cycloroute/core/errors.hpp"

namespace cycloroute::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void put_u64_le(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(bytes, 8);
}

std::uint64_t get_u64_le(const unsigned char* bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void read_exact(std::istream& is, void* dst, std::size_t n, const std::filesystem::path& path) {
  is.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) {
    throw Error(ErrorCode::ParseError, "truncated container " + path.string());
  }
}

std::ifstream open_in(const std::filesystem::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

nlohmann::json parse_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  read_exact(in, magic, 8, path);
  if (std::memcmp(magic, kContainerMagic, 8) != 0) {
    throw Error(ErrorCode::ParseError, path.string() + " is not a matrix container");
  }
  unsigned char len_bytes[8];
  read_exact(in, len_bytes, 8, path);
  const std::uint64_t len = get_u64_le(len_bytes);
  if (len > (1u << 26)) throw Error(ErrorCode::ParseError, "implausible header length");
  std::string text(len, '\0');
  read_exact(in, text.data(), len, path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "bad container header in " + path.string() + ": " + e.what());
  }
  for (const char* key : {"kind", "m", "n", "byte_order", "layout", "has_mask"}) {
    if (!header.contains(key)) {
      throw Error(ErrorCode::ParseError, std::string("container header missing '") + key + "'");
    }
  }
  if (header["layout"] != "row-major-f64") {
    throw Error(ErrorCode::ParseError, "unsupported layout " + header["layout"].dump());
  }
  const auto order = header["byte_order"].get<std::string>();
  if (order != "little" && order != "big") {
    throw Error(ErrorCode::ParseError, "unsupported byte order " + order);
  }
  return header;
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path, false);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, false);
  out << text;
}

RoadNetwork parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Edge> edges;
  std::optional<std::size_t> declared_vertices;
  std::size_t max_vertex = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const auto pos = t.find("vertices=");
      if (pos != std::string::npos) {
        std::size_t v = 0;
        if (!parse_number(trim(t.substr(pos + 9)), v)) {
          throw Error(ErrorCode::ParseError, "bad vertices comment on line " + std::to_string(line_no));
        }
        declared_vertices = v;
      }
      continue;
    }
    const auto cells = split_csv(t);
    std::uint64_t id = 0, from = 0, to = 0, row = 0;
    if (cells.size() != 4 || !parse_number(cells[0], id) || !parse_number(cells[1], from) ||
        !parse_number(cells[2], to) || !parse_number(cells[3], row)) {
      throw Error(ErrorCode::ParseError, "graph line " + std::to_string(line_no) +
                                             ": expected edge_id,from_vertex,to_vertex,segment_row");
    }
    edges.push_back({static_cast<EdgeId>(id), static_cast<VertexId>(from),
                     static_cast<VertexId>(to), static_cast<std::size_t>(row)});
    max_vertex = std::max<std::size_t>({max_vertex, from + 1, to + 1});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
  const std::size_t vertices = declared_vertices.value_or(max_vertex);
  return RoadNetwork(vertices, std::move(edges));
}

RoadNetwork read_graph(const std::filesystem::path& path) { return parse_graph(read_text(path)); }

void write_graph(const std::filesystem::path& path, const RoadNetwork& network) {
  auto out = open_out(path, false);
  out << "# edge_id,from_vertex,to_vertex,segment_row\n";
  out << "# vertices=" << network.vertex_count() << "\n";
  for (const Edge& e : network.edges()) {
    out << e.id << ',' << e.from << ',' << e.to << ',' << e.segment_row << '\n';
  }
}

void write_container(const std::filesystem::path& path, const Container& c) {
  nlohmann::json header = c.header;
  const auto rows = static_cast<std::size_t>(c.data.rows());
  const auto cols = static_cast<std::size_t>(c.data.cols());
  header["m"] = rows;
  header["n"] = cols;
  header["byte_order"] = "little";
  header["layout"] = "row-major-f64";
  header["has_mask"] = c.mask.has_value();
  if (!header.contains("kind")) throw Error(ErrorCode::InvalidArgument, "container needs a kind");

  auto out = open_out(path, true);
  const std::string text = header.dump();
  out.write(kContainerMagic, 8);
  put_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  std::vector<char> buf(rows * cols * 8);
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t col = 0; col < cols; ++col) {
      const auto bits = std::bit_cast<std::uint64_t>(c.data(r, col));
      for (int i = 0; i < 8; ++i) buf[k++] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  if (c.mask) {
    std::vector<char> packed((rows * cols + 7) / 8, 0);
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t col = 0; col < cols; ++col, ++i) {
        if ((*c.mask)(r, col)) packed[i / 8] = static_cast<char>(packed[i / 8] | (1 << (i % 8)));
      }
    }
    out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

nlohmann::json read_container_header(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  return parse_header(in, path);
}

Container read_container(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  Container c;
  c.header = parse_header(in, path);
  const auto rows = c.header["m"].get<std::size_t>();
  const auto cols = c.header["n"].get<std::size_t>();
  const bool big = c.header["byte_order"] == "big";

  std::vector<unsigned char> buf(rows * cols * 8);
  read_exact(in, buf.data(), buf.size(), path);
  c.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t col = 0; col < cols; ++col, k += 8) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) {
        const int shift = big ? 8 * (7 - i) : 8 * i;
        bits |= static_cast<std::uint64_t>(buf[k + static_cast<std::size_t>(i)]) << shift;
      }
      c.data(r, col) = std::bit_cast<double>(bits);
    }
  }
  if (c.header["has_mask"].get<bool>()) {
    std::vector<unsigned char> packed((rows * cols + 7) / 8);
    read_exact(in, packed.data(), packed.size(), path);
    Mask mask(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    std::size_t i = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t col = 0; col < cols; ++col, ++i) {
        mask(r, col) = (packed[i / 8] >> (i % 8)) & 1;
      }
    }
    c.mask = std::move(mask);
  }
  return c;
}

void write_matrix(const std::filesystem::path& path, const TrafficMatrix& matrix,
                  const nlohmann::json& extra) {
  Container c;
  c.header = extra;
  c.header["kind"] = "traffic_matrix";
  c.header["start_epoch"] = matrix.grid().start_epoch();
  c.header["resolution"] = matrix.grid().resolution();
  c.data = matrix.values();
  c.mask = matrix.mask();
  write_container(path, c);
}

TrafficMatrix read_matrix(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.header["kind"] != "traffic_matrix") {
    throw Error(ErrorCode::ParseError, path.string() + " does not hold a traffic matrix");
  }
  TimeGrid grid(c.header.at("start_epoch").get<std::int64_t>(),
                c.header.at("resolution").get<std::int64_t>(),
                static_cast<std::size_t>(c.data.cols()));
  Mask mask = c.mask ? std::move(*c.mask) : Mask::Constant(c.data.rows(), c.data.cols(), true);
  return TrafficMatrix(grid, std::move(c.data), std::move(mask));
}

TrafficMatrix import_matrix_csv(const std::filesystem::path& path, std::int64_t start_epoch,
                                std::int64_t resolution) {
  auto in = open_in(path, false);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (rows.empty() && line_no == 1) {
      double probe = 0;
      if (!cells[0].empty() && !parse_number(cells[0], probe)) continue;  // header row
    }
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw Error(ErrorCode::ParseError, path.string() + " has no data rows");
  const std::size_t n = rows.front().size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  Mask mask(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n) {
      throw Error(ErrorCode::ParseError, "CSV row " + std::to_string(r) + " has " +
                                             std::to_string(rows[r].size()) + " cells, expected " +
                                             std::to_string(n));
    }
    for (std::size_t c = 0; c < n; ++c) {
      const std::string& cell = rows[r][c];
      if (cell.empty()) {
        values(r, c) = std::numeric_limits<double>::quiet_NaN();
        mask(r, c) = false;
        continue;
      }
      double v = 0;
      if (!parse_number(cell, v)) {
        throw Error(ErrorCode::ParseError, "bad CSV cell '" + cell + "' at row " + std::to_string(r));
      }
      values(r, c) = v;
      mask(r, c) = true;
    }
  }
  return TrafficMatrix(TimeGrid(start_epoch, resolution, n), std::move(values), std::move(mask));
}

void export_matrix_csv(const std::filesystem::path& path, const TrafficMatrix& matrix) {
  auto out = open_out(path, false);
  char buf[32];
  for (std::size_t r = 0; r < matrix.m(); ++r) {
    for (std::size_t c = 0; c < matrix.n(); ++c) {
      if (c) out << ',';
      if (matrix.observed(r, c)) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), matrix.value(r, c));
        out.write(buf, ptr - buf);
      }
    }
    out << '\n';
  }
}

std::uint64_t fingerprint(const Eigen::MatrixXd& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(data.data()[i]);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace cycloroute::io
