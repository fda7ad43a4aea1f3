#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "exc/homogenization.hpp"
#include "exc/io.hpp"

namespace exc {

inline void check_report_rows(const HomReport& rep) {
  for (const auto& r : rep.rows) {
    if (r.functional.empty() || r.statistic.empty())
      throw std::invalid_argument("report: row with empty functional or statistic");
    if (std::isnan(r.value)) throw std::invalid_argument("report: NaN value in row " +
                                                         r.functional + "/" + r.statistic);
  }
}

// Schema: n,functional,statistic,value,null_band,verdict. Summary rows keep
// n = -1. Bytes are a pure function of the report.
inline void write_hom_report_csv(const HomReport& rep, const std::string& path) {
  check_report_rows(rep);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot open " + path);
  out << "n,functional,statistic,value,null_band,verdict\n";
  for (const auto& r : rep.rows)
    out << r.n << ',' << r.functional << ',' << r.statistic << ',' << fmt_double(r.value) << ','
        << fmt_double(r.null_band) << ',' << r.verdict << "\n";
  out << "# converged=" << (rep.converged ? 1 : 0) << "\n";
}

inline HomReport read_hom_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path);
  HomReport rep;
  std::string line;
  if (!std::getline(in, line) || line != "n,functional,statistic,value,null_band,verdict")
    throw std::invalid_argument("report: bad header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# converged=", 0) == 0) {
      rep.converged = line == "# converged=1";
      continue;
    }
    std::vector<std::string> f;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    f.push_back(cur);
    if (f.size() != 6) throw std::invalid_argument("report: bad row in " + path);
    HomRow r;
    r.n = static_cast<int>(parse_double(f[0]));
    r.functional = f[1];
    r.statistic = f[2];
    r.value = parse_double(f[3]);
    r.null_band = parse_double(f[4]);
    r.verdict = f[5];
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

namespace detail {

inline std::string plot_file_name(const std::string& functional) {
  std::string s = "plot_";
  for (char ch : functional)
    s += (std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  return s + ".svg";
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct PlotSeries {
  std::string statistic;
  std::vector<std::pair<int, double>> pts;    // (n, value)
  std::vector<std::pair<int, double>> band;   // (n, null_band), finite only
};

}  // namespace detail

// One standalone SVG per functional: per-statistic value polylines over n,
// with the matching null band dashed in the same color. Output bytes depend
// only on the report rows (fixed canvas, fixed decimal formatting), so a
// rerun of the same experiment reproduces the files exactly.
inline std::vector<std::string> emit_plots(const HomReport& rep, const std::string& dir) {
  check_report_rows(rep);

  // summary rows (n = -1) carry no abscissa
  std::vector<std::string> order;
  std::map<std::string, std::vector<detail::PlotSeries>> by_fun;
  for (const auto& r : rep.rows) {
    if (r.n < 0) continue;
    auto& series = by_fun[r.functional];
    if (series.empty() && by_fun.size() > order.size()) order.push_back(r.functional);
    detail::PlotSeries* s = nullptr;
    for (auto& cand : series)
      if (cand.statistic == r.statistic) s = &cand;
    if (!s) {
      series.push_back({r.statistic, {}, {}});
      s = &series.back();
    }
    s->pts.emplace_back(r.n, r.value);
    if (std::isfinite(r.null_band)) s->band.emplace_back(r.n, r.null_band);
  }

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  const double W = 560, H = 360, L = 56, R = 16, T = 24, B = 40;

  std::vector<std::string> written;
  for (const auto& fun : order) {
    const auto& series = by_fun[fun];
    int n_lo = series[0].pts[0].first, n_hi = n_lo;
    double y_hi = 0.0;
    for (const auto& s : series) {
      for (const auto& [n, v] : s.pts) {
        n_lo = std::min(n_lo, n);
        n_hi = std::max(n_hi, n);
        y_hi = std::max(y_hi, v);
      }
      for (const auto& [n, v] : s.band) y_hi = std::max(y_hi, v);
    }
    if (n_lo == n_hi) {
      --n_lo;
      ++n_hi;
    }
    if (!(y_hi > 0.0)) y_hi = 1.0;
    y_hi *= 1.08;
    auto px = [&](double n) { return L + (n - n_lo) / double(n_hi - n_lo) * (W - L - R); };
    auto py = [&](double v) { return H - B - v / y_hi * (H - T - B); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"360\" "
           "viewBox=\"0 0 560 360\">\n";
    svg += "<rect width=\"560\" height=\"360\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"" + detail::svg_num(L) + "\" y=\"16\" font-family=\"monospace\" "
           "font-size=\"13\" fill=\"#000000\">" + fun + "</text>\n";
    // axes
    svg += "<line x1=\"" + detail::svg_num(L) + "\" y1=\"" + detail::svg_num(H - B) + "\" x2=\"" +
           detail::svg_num(W - R) + "\" y2=\"" + detail::svg_num(H - B) +
           "\" stroke=\"#000000\"/>\n";
    svg += "<line x1=\"" + detail::svg_num(L) + "\" y1=\"" + detail::svg_num(T) + "\" x2=\"" +
           detail::svg_num(L) + "\" y2=\"" + detail::svg_num(H - B) +
           "\" stroke=\"#000000\"/>\n";
    for (int n = n_lo; n <= n_hi; ++n) {
      svg += "<text x=\"" + detail::svg_num(px(n)) + "\" y=\"" + detail::svg_num(H - B + 16) +
             "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\" "
             "fill=\"#000000\">" + std::to_string(n) + "</text>\n";
    }
    svg += "<text x=\"" + detail::svg_num((L + W - R) / 2) + "\" y=\"" +
           detail::svg_num(H - B + 32) + "\" font-family=\"monospace\" font-size=\"11\" "
           "text-anchor=\"middle\" fill=\"#000000\">n</text>\n";
    for (int k = 0; k <= 4; ++k) {
      const double v = y_hi * k / 4.0;
      char lab[32];
      std::snprintf(lab, sizeof lab, "%.3g", v);
      svg += "<text x=\"" + detail::svg_num(L - 6) + "\" y=\"" + detail::svg_num(py(v) + 4) +
             "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\" "
             "fill=\"#000000\">" + lab + "</text>\n";
    }

    for (size_t si = 0; si < series.size(); ++si) {
      const auto& s = series[si];
      const char* color = kColors[si % 6];
      auto polyline = [&](const std::vector<std::pair<int, double>>& pts, bool dashed) {
        if (pts.empty()) return;
        std::string p;
        for (const auto& [n, v] : pts)
          p += detail::svg_num(px(n)) + "," + detail::svg_num(py(std::min(v, y_hi))) + " ";
        svg += std::string("<polyline points=\"") + p + "\" fill=\"none\" stroke=\"" + color +
               "\"" + (dashed ? " stroke-dasharray=\"5,4\"" : "") + "/>\n";
        for (const auto& [n, v] : pts)
          if (!dashed)
            svg += "<circle cx=\"" + detail::svg_num(px(n)) + "\" cy=\"" +
                   detail::svg_num(py(std::min(v, y_hi))) + "\" r=\"2.5\" fill=\"" + color +
                   "\"/>\n";
      };
      polyline(s.pts, false);
      polyline(s.band, true);
      svg += "<text x=\"" + detail::svg_num(W - R - 4) + "\" y=\"" +
             detail::svg_num(T + 14.0 * (si + 1)) + "\" font-family=\"monospace\" "
             "font-size=\"11\" text-anchor=\"end\" fill=\"" + color + "\">" + s.statistic +
             "</text>\n";
    }
    svg += "</svg>\n";

    const std::string name = detail::plot_file_name(fun);
    std::ofstream out(dir + "/" + name, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot open " + dir + "/" + name);
    out << svg;
    written.push_back(name);
  }
  return written;
}

}  // namespace exc
