#pragma once
// Path CSV serialization and small text-output helpers.
//
// Doubles are printed with %.17g so a write/read cycle reproduces the exact
// bits. Infinite lifetimes round-trip as "inf"/"-inf".

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "exc/path.hpp"

namespace exc {

inline std::string fmt_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end == c || *end != '\0')
    throw std::invalid_argument("parse_double: bad token '" + s + "'");
  return v;
}

inline const char* mode_token(SegmentMode m) {
  return m == SegmentMode::Linear ? "linear" : "constant-right";
}

inline SegmentMode parse_mode(const std::string& s) {
  if (s == "linear") return SegmentMode::Linear;
  if (s == "constant-right") return SegmentMode::ConstantRight;
  throw std::invalid_argument("unknown segment mode '" + s + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_path_csv(std::ostream& os, const CadlagPath& p) {
  os << "t";
  for (int i = 0; i < p.dim(); ++i) os << ",x" << (i + 1);
  os << ",mode\n";
  for (const auto& k : p.knots()) {
    os << fmt_double(k.t);
    for (int i = 0; i < p.dim(); ++i) os << ',' << fmt_double(k.value[i]);
    os << ',' << mode_token(k.mode) << '\n';
  }
  os << "lifetime=" << fmt_double(p.lifetime()) << '\n';
}

inline void write_path_csv(const std::string& file, const CadlagPath& p) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open for write: " + file);
  write_path_csv(os, p);
}

inline CadlagPath read_path_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("path csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto hdr = detail::split_csv_line(line);
  if (hdr.size() < 3 || hdr.size() > 4 || hdr.front() != "t" || hdr.back() != "mode")
    throw std::invalid_argument("path csv: bad header '" + line + "'");
  const int d = static_cast<int>(hdr.size()) - 2;
  std::vector<Knot> ks;
  bool saw_lifetime = false;
  double lifetime = 0.0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("lifetime=", 0) == 0) {
      lifetime = parse_double(line.substr(9));
      saw_lifetime = true;
      break;
    }
    auto f = detail::split_csv_line(line);
    if (static_cast<int>(f.size()) != d + 2)
      throw std::invalid_argument("path csv: bad row '" + line + "'");
    Knot k;
    k.t = parse_double(f[0]);
    k.value = d == 1 ? Vec::scalar(parse_double(f[1]))
                     : Vec::planar(parse_double(f[1]), parse_double(f[2]));
    k.mode = parse_mode(f[static_cast<size_t>(d) + 1]);
    ks.push_back(k);
  }
  if (!saw_lifetime) throw std::invalid_argument("path csv: missing lifetime row");
  return CadlagPath::make(std::move(ks), lifetime);
}

inline CadlagPath read_path_csv(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw std::runtime_error("cannot open for read: " + file);
  return read_path_csv(is);
}

// Sorted key=value lines; std::map keeps the order deterministic.
inline void write_manifest(const std::string& file,
                           const std::map<std::string, std::string>& kv) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot open for write: " + file);
  for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

}  // namespace exc
