#pragma once

// Text serialization of gauge fields ("orbitgauge v1").
//
//   orbitgauge v1 <n1> <n2>
//   <x1> <x2> <j> <q0> <q1> <q2> <q3>      one line per edge, row-major order
//
// Numbers are written with 17 significant digits, which round-trips doubles
// exactly. Lines starting with '#' are comments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbitgauge/lattice.hpp"

namespace orbitgauge {

class FieldFormatError : public std::runtime_error {
 public:
  enum class Kind { header, parse, norm, count, order, io };
  FieldFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr double kFieldNormTolerance = 1e-9;

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Writes via a temporary file and a rename so readers never see partial output.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FieldFormatError(FieldFormatError::Kind::io, "cannot open " + tmp.string());
    out << contents;
    if (!out) throw FieldFormatError(FieldFormatError::Kind::io, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string field_to_string(const GaugeField& u, const std::vector<std::string>& comments = {}) {
  const Lattice& lat = u.lattice();
  std::string out = "orbitgauge v1 " + std::to_string(lat.n1()) + " " + std::to_string(lat.n2()) + "\n";
  for (const auto& c : comments) out += "# " + c + "\n";
  for (int i = 0; i < lat.edge_count(); ++i) {
    const EdgeId& e = lat.edge_at(i);
    const UnitQuaternion& q = u[i];
    out += std::to_string(e.site.x1) + " " + std::to_string(e.site.x2) + " " + std::to_string(e.dir) + " " +
           format_double(q.q0) + " " + format_double(q.q1) + " " + format_double(q.q2) + " " +
           format_double(q.q3) + "\n";
  }
  return out;
}

inline GaugeField field_from_string(const std::string& text) {
  using Kind = FieldFormatError::Kind;
  std::istringstream in(text);
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line()) throw FieldFormatError(Kind::header, "empty field file");
  std::istringstream header(line);
  std::string magic, version;
  int n1 = 0, n2 = 0;
  if (!(header >> magic >> version >> n1 >> n2) || magic != "orbitgauge" || version != "v1") {
    throw FieldFormatError(Kind::header, "malformed header: '" + line + "'");
  }
  if (n1 < 1 || n2 < 1) throw FieldFormatError(Kind::header, "non-positive lattice extent in header");

  const Lattice lat(n1, n2);
  GaugeField u(lat);
  int count = 0;
  while (next_line()) {
    if (count >= lat.edge_count()) {
      throw FieldFormatError(Kind::count, "too many edge lines (expected " + std::to_string(lat.edge_count()) + ")");
    }
    std::istringstream row(line);
    int x1 = 0, x2 = 0, dir = 0;
    std::string s0, s1, s2, s3;
    if (!(row >> x1 >> x2 >> dir >> s0 >> s1 >> s2 >> s3)) {
      throw FieldFormatError(Kind::parse, "cannot parse edge line: '" + line + "'");
    }
    const EdgeId expected = lat.edge_at(count);
    if (!(EdgeId{{x1, x2}, dir} == expected)) {
      throw FieldFormatError(Kind::order, "edge line " + std::to_string(count) + " is " +
                                              to_string(EdgeId{{x1, x2}, dir}) + ", expected " + to_string(expected));
    }
    UnitQuaternion q;
    try {
      q = {std::stod(s0), std::stod(s1), std::stod(s2), std::stod(s3)};
    } catch (const std::exception&) {
      throw FieldFormatError(Kind::parse, "bad number on edge line: '" + line + "'");
    }
    if (!(std::abs(q.norm() - 1.0) <= kFieldNormTolerance)) {
      throw FieldFormatError(Kind::norm, "quaternion on edge " + to_string(expected) + " has norm " +
                                             format_double(q.norm()));
    }
    u[count++] = q;
  }
  if (count != lat.edge_count()) {
    throw FieldFormatError(Kind::count, "found " + std::to_string(count) + " edge lines, expected " +
                                            std::to_string(lat.edge_count()));
  }
  return u;
}

inline GaugeField field_io_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FieldFormatError(FieldFormatError::Kind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return field_from_string(ss.str());
}

inline void field_io_write(const std::filesystem::path& path, const GaugeField& u,
                           const std::vector<std::string>& comments = {}) {
  write_file_atomic(path, field_to_string(u, comments));
}

// Table of plaquette traces, columns x1,x2,trace.
inline std::string plaquette_csv(const GaugeField& u) {
  std::string out = "x1,x2,trace\n";
  for (const Site& c : plaquette_corners(u.lattice())) {
    out += std::to_string(c.x1) + "," + std::to_string(c.x2) + "," + format_double(plaquette_trace(u, c)) + "\n";
  }
  return out;
}

}  // namespace orbitgauge
