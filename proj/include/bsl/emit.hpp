#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bsl/error.hpp"
#include "bsl/metrics.hpp"

namespace bsl {

struct RunRow {
  std::size_t step = 0;
  Metric metric = Metric::TV;
  double distance = 0.0;
  double bound = 0.0;
  double evidence_p = 0.0;
  double evidence_q = 0.0;
};

constexpr double kViolationSlack = 1e-9;

struct RunRecord {
  std::string name;
  std::vector<RunRow> rows;

  std::size_t violations() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const RunRow& r) {
      return r.distance > r.bound + kViolationSlack;
    }));
  }
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string to_csv(const RunRecord& r) {
  if (r.rows.empty()) fail(ErrorKind::InvalidArgument, "refusing to emit an empty record");
  std::string out = "step,metric,distance,bound,evidence_p,evidence_q\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.step);
    out += ',';
    out += to_string(row.metric);
    for (double v : {row.distance, row.bound, row.evidence_p, row.evidence_q}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

/// Log-scale line chart of distance and bound against step.
inline std::string to_svg(const RunRecord& r) {
  if (r.rows.empty()) fail(ErrorKind::InvalidArgument, "refusing to emit an empty record");
  const double W = 640, H = 400, L = 70, R = 20, T = 30, B = 50;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t smax = 1;
  for (const auto& row : r.rows) {
    for (double v : {row.distance, row.bound})
      if (v > 0 && std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    smax = std::max(smax, row.step);
  }
  if (!std::isfinite(lo)) lo = hi = 1.0;
  double llo = std::floor(std::log10(lo)), lhi = std::ceil(std::log10(hi));
  if (lhi <= llo) lhi = llo + 1;
  auto px = [&](double s) { return L + (W - L - R) * (smax > 1 ? (s - 1) / double(smax - 1) : 0.5); };
  auto py = [&](double v) {
    const double lv = v > 0 && std::isfinite(v) ? std::clamp(std::log10(v), llo, lhi) : (v > 0 ? lhi : llo);
    return T + (H - T - B) * (lhi - lv) / (lhi - llo);
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double e = llo; e <= lhi; e += 1) {
    s << "<text x=\"" << L - 8 << "\" y=\"" << py(std::pow(10, e)) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e"
      << e << "</text>\n";
  }
  s << "<text x=\"" << (W + L) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">step</text>\n";
  s << "<text x=\"" << L << "\" y=\"18\" font-size=\"13\">" << r.name << "</text>\n";
  auto polyline = [&](auto get, const char* colour) {
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (const auto& row : r.rows) s << px(double(row.step)) << ',' << py(get(row)) << ' ';
    s << "\"/>\n";
  };
  polyline([](const RunRow& x) { return x.distance; }, "steelblue");
  polyline([](const RunRow& x) { return x.bound; }, "firebrick");
  s << "<text x=\"" << W - R - 120 << "\" y=\"18\" font-size=\"11\" fill=\"steelblue\">distance</text>\n";
  s << "<text x=\"" << W - R - 60 << "\" y=\"18\" font-size=\"11\" fill=\"firebrick\">bound</text>\n";
  s << "</svg>\n";
  return s.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IOFailure, "cannot open " + path.string());
  f << text;
  if (!f) fail(ErrorKind::IOFailure, "write failed for " + path.string());
}

enum class EmitFormat { CSV, SVG };

/// Writes <dir>/<record name>.csv or .svg and returns the path.
inline std::filesystem::path emit(const RunRecord& r, EmitFormat fmt, const std::filesystem::path& dir) {
  const auto path = dir / (r.name + (fmt == EmitFormat::CSV ? ".csv" : ".svg"));
  write_text(path, fmt == EmitFormat::CSV ? to_csv(r) : to_svg(r));
  return path;
}

}  // namespace bsl
