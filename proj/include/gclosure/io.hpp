#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace gclosure::io {

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// CSV table whose every row ends with the config hash.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, std::string config_hash)
      : header_(std::move(header)), hash_(std::move(config_hash)) {}

  CsvTable& row() {
    rows_.emplace_back();
    return *this;
  }
  CsvTable& operator<<(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    rows_.back().push_back(os.str());
    return *this;
  }
  CsvTable& operator<<(long long v) {
    rows_.back().push_back(std::to_string(v));
    return *this;
  }
  CsvTable& operator<<(int v) { return *this << static_cast<long long>(v); }
  CsvTable& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
  CsvTable& operator<<(bool v) { return *this << static_cast<long long>(v); }
  CsvTable& operator<<(const std::string& v) {
    rows_.back().push_back(v);
    return *this;
  }
  CsvTable& operator<<(const char* v) { return *this << std::string(v); }

  void write(std::ostream& os) const {
    for (const auto& h : header_) os << h << ',';
    os << "config_hash\n";
    for (const auto& r : rows_) {
      for (const auto& c : r) os << c << ',';
      os << hash_ << '\n';
    }
  }

 private:
  std::vector<std::string> header_;
  std::string hash_;
  std::vector<std::vector<std::string>> rows_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with markers; log_y plots log10 of positive values.
inline void write_svg_lines(std::ostream& os, const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, const std::vector<Series>& series,
                            bool log_y = false) {
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto ty = [&](double v) { return log_y ? std::log10(std::max(v, 1e-300)) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    const double ypix = H - B - (yv - y0) / (y1 - y0) * (H - T - B);
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << std::setprecision(3) << xv << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << ypix + 4 << "\" text-anchor=\"end\">"
       << std::setprecision(3) << (log_y ? std::pow(10.0, yv) : yv) << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 5];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << c
         << "\"/>\n";
    os << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << c
       << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

/// Row-major rows x cols heat map on a blue-white-red scale centred at 0.
inline void write_svg_heatmap(std::ostream& os, const std::string& title, int rows, int cols,
                              const std::vector<double>& values) {
  const double cell = std::max(4.0, 320.0 / std::max(rows, cols));
  const double W = cols * cell + 40, H = rows * cell + 60;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, std::fabs(v));
  if (vmax == 0.0) vmax = 1.0;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
     << " (|max| = " << std::setprecision(3) << vmax << ")</text>\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double t = values[static_cast<std::size_t>(r) * cols + c] / vmax;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - std::fabs(t))));
      const int red = t > 0 ? 255 : shade, blue = t < 0 ? 255 : shade;
      os << "<rect x=\"" << 20 + c * cell << "\" y=\"" << 40 + r * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"rgb(" << red << ',' << shade << ',' << blue
         << ")\"/>\n";
    }
  os << "</svg>\n";
}

}  // namespace gclosure::io
