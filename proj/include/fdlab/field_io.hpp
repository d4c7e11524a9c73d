#pragma once

#include <iosfwd>
#include <string>

#include "fdlab/grid.hpp"

namespace fdlab {

/// First 16 bytes of every binary field file.
inline constexpr char kFieldMagic[16] = {'F', 'D', 'L', 'A', 'B', '-', 'F', 'I',
                                         'E', 'L', 'D', '-', 'v', '1', '\0', '\0'};

/// Binary layout: 16-byte magic, uint64 little-endian header length, JSON header
/// {"n","L","N","T","M","kind"}, then float64 little-endian values in time-major,
/// row-major spatial order.
void write_field_binary(std::ostream& out, const Field& field);
Field read_field_binary(std::istream& in);

/// CSV layout: one line "# <json header>", a column header line, then one row per
/// sample: k,t,x0[,x1],value.
void write_field_csv(std::ostream& out, const Field& field);
Field read_field_csv(std::istream& in);

void save_field(const std::string& path, const Field& field);
Field load_field(const std::string& path);

}  // namespace fdlab
