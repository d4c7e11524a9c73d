#include "fdlab/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace fdlab {
namespace {

using nlohmann::json;

json header_of(const Field& f) {
  const auto& g = f.grid();
  return json{{"n", g.n()},   {"L", g.L()}, {"N", g.N()},
              {"T", g.T()},   {"M", g.M()},
              {"kind", f.is_slice() ? "slice" : "space-time"}};
}

std::pair<SpaceTimeGrid, FieldKind> parse_header(const json& h) {
  try {
    SpaceTimeGrid g(h.at("n").get<int>(), h.at("L").get<double>(), h.at("N").get<int>(),
                    h.at("T").get<double>(), h.at("M").get<int>());
    std::string kind = h.at("kind").get<std::string>();
    if (kind != "slice" && kind != "space-time")
      throw InvalidArgument("field header: unknown kind '" + kind + "'");
    return {g, kind == "slice" ? FieldKind::Slice : FieldKind::SpaceTime};
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("field header: ") + e.what());
  }
}

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw InvalidArgument("field: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_field_binary(std::ostream& out, const Field& field) {
  out.write(kFieldMagic, sizeof kFieldMagic);
  std::string h = header_of(field).dump();
  put_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (double v : field.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

Field read_field_binary(std::istream& in) {
  char magic[16];
  if (!in.read(magic, 16) || std::memcmp(magic, kFieldMagic, 16) != 0)
    throw InvalidArgument("field: bad magic");
  std::uint64_t len = get_u64(in);
  if (len > (1u << 20)) throw InvalidArgument("field: header too long");
  std::string h(len, '\0');
  if (!in.read(h.data(), static_cast<std::streamsize>(len)))
    throw InvalidArgument("field: truncated header");
  auto [grid, kind] = parse_header(json::parse(h));
  std::size_t count = kind == FieldKind::Slice ? grid.slice_size() : grid.size();
  std::vector<double> values(count);
  for (auto& v : values) v = std::bit_cast<double>(get_u64(in));
  return Field(grid, kind, std::move(values));
}

void write_field_csv(std::ostream& out, const Field& field) {
  const auto& g = field.grid();
  out << "# " << header_of(field).dump() << '\n';
  out << (g.n() == 1 ? "k,t,x0,value\n" : "k,t,x0,x1,value\n");
  out << std::setprecision(17);
  for (int k = 0; k < field.time_levels(); ++k) {
    auto s = field.at_time(k);
    for (std::size_t i = 0; i < g.slice_size(); ++i) {
      Point p = g.point(i);
      out << k << ',' << g.t(k) << ',' << p[0] << ',';
      if (g.n() == 2) out << p[1] << ',';
      out << s[i] << '\n';
    }
  }
}

Field read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw InvalidArgument("field csv: missing header line");
  auto [grid, kind] = parse_header(json::parse(line.substr(2)));
  std::getline(in, line);
  std::size_t count = kind == FieldKind::Slice ? grid.slice_size() : grid.size();
  std::vector<double> values;
  values.reserve(count);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto pos = line.rfind(',');
    values.push_back(std::stod(line.substr(pos + 1)));
  }
  return Field(grid, kind, std::move(values));
}

void save_field(const std::string& path, const Field& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    write_field_csv(out, field);
  else
    write_field_binary(out, field);
}

Field load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
    return read_field_csv(in);
  return read_field_binary(in);
}

}  // namespace fdlab
