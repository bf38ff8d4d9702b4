#include "lindyn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lindyn/errors.hpp"

namespace lindyn {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string to_csv(const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows) {
  if (columns.empty()) throw Error("to_csv: no columns");
  std::string out;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k) out += ',';
    out += columns[k];
  }
  out += '\n';
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw Error("to_csv: row width does not match header");
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += format_double(row[k]);
    }
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("write_text_file: cannot open " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw Error("write_text_file: short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 72, kRight = 24, kTop = 34, kBottom = 52;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string svg_open(double w, double h) {
  std::ostringstream ss;
  ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
     << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  return ss.str();
}

std::string text_at(double x, double y, const std::string& s,
                    const char* anchor = "start") {
  std::ostringstream ss;
  ss << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
     << "\">" << s << "</text>\n";
  return ss.str();
}

// Blue-to-red ramp through white at the midpoint.
std::string heat_color(double t) {
  auto channel = [](double v) {
    int c = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
    char buf[3];
    std::snprintf(buf, sizeof(buf), "%02x", c);
    return std::string(buf, 2);
  };
  double r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = 0.13 + (1.0 - 0.13) * u;
    g = 0.40 + (1.0 - 0.40) * u;
    b = 0.67 + (1.0 - 0.67) * u;
  } else {
    const double u = (t - 0.5) / 0.5;
    r = 1.0 + (0.84 - 1.0) * u;
    g = 1.0 + (0.19 - 1.0) * u;
    b = 1.0 + (0.15 - 1.0) * u;
  }
  return "#" + channel(r) + channel(g) + channel(b);
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::vector<std::string>& series_names,
                           const std::vector<double>& x,
                           const std::vector<std::vector<double>>& series,
                           bool log_y) {
  if (series_names.size() != series.size())
    throw Error("svg_line_chart: name/series count mismatch");
  auto y_of = [log_y](double v) {
    if (!log_y) return v;
    return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (double v : x) {
    if (!std::isfinite(v)) continue;
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& s : series) {
    if (s.size() != x.size())
      throw Error("svg_line_chart: series length does not match x");
    for (double v : s) {
      const double y = y_of(v);
      if (!std::isfinite(y)) continue;
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1;
  if (!(ymin <= ymax)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) {
    return kTop + ph - (v - ymin) / (ymax - ymin) * ph;
  };

  std::ostringstream ss;
  ss << svg_open(kWidth, kHeight);
  ss << text_at(kWidth / 2, 20, title, "middle");
  ss << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPaletteSize];
    std::ostringstream pts;
    bool open = false;
    auto flush = [&]() {
      if (open)
        ss << "<polyline fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
      pts.str("");
      open = false;
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double y = y_of(series[k][i]);
      if (!std::isfinite(x[i]) || !std::isfinite(y)) {
        flush();
        continue;
      }
      pts << px(x[i]) << ',' << py(y) << ' ';
      open = true;
    }
    flush();
    const double ly = kTop + 16 + 16 * static_cast<double>(k);
    ss << "<rect x=\"" << kLeft + pw - 150 << "\" y=\"" << ly - 9
       << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
    ss << text_at(kLeft + pw - 136, ly, series_names[k]);
  }

  ss << text_at(kLeft, kHeight - 16, format_double(xmin));
  ss << text_at(kLeft + pw, kHeight - 16, format_double(xmax), "end");
  ss << text_at(kLeft + pw / 2, kHeight - 16, x_label, "middle");
  const std::string ylo = format_double(log_y ? std::pow(10.0, ymin) : ymin);
  const std::string yhi = format_double(log_y ? std::pow(10.0, ymax) : ymax);
  ss << text_at(kLeft - 6, kTop + ph, ylo, "end");
  ss << text_at(kLeft - 6, kTop + 10, yhi, "end");
  ss << "</svg>\n";
  return ss.str();
}

std::string svg_heatmap(const std::string& title,
                        const std::vector<double>& rows,
                        const std::vector<double>& cols,
                        const std::vector<std::vector<double>>& cells,
                        const std::string& row_label,
                        const std::string& col_label) {
  if (cells.size() != rows.size())
    throw Error("svg_heatmap: cell row count mismatch");
  for (const auto& r : cells) {
    if (r.size() != cols.size())
      throw Error("svg_heatmap: cell column count mismatch");
  }
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  for (const auto& r : cells) {
    for (double v : r) {
      if (!std::isfinite(v)) continue;
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  if (!(vmin <= vmax)) vmin = 0, vmax = 1;
  if (vmax == vmin) vmax = vmin + 1;

  const double cell = 34;
  const double w = kLeft + cell * static_cast<double>(cols.size()) + 120;
  const double h = kTop + cell * static_cast<double>(rows.size()) + kBottom;

  std::ostringstream ss;
  ss << svg_open(w, h);
  ss << text_at(w / 2, 20, title, "middle");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double v = cells[i][j];
      const std::string fill =
          std::isfinite(v) ? heat_color((v - vmin) / (vmax - vmin)) : "#999999";
      ss << "<rect x=\"" << kLeft + cell * static_cast<double>(j) << "\" y=\""
         << kTop + cell * static_cast<double>(i) << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << fill
         << "\" stroke=\"#ddd\"/>\n";
    }
    ss << text_at(kLeft - 6, kTop + cell * (static_cast<double>(i) + 0.65),
                  format_double(rows[i]), "end");
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    ss << text_at(kLeft + cell * (static_cast<double>(j) + 0.5),
                  kTop + cell * static_cast<double>(rows.size()) + 16,
                  format_double(cols[j]), "middle");
  }
  ss << text_at(kLeft / 2, kTop - 8, row_label);
  ss << text_at(kLeft + cell * static_cast<double>(cols.size()) / 2,
                kTop + cell * static_cast<double>(rows.size()) + 34, col_label,
                "middle");
  const double lx = kLeft + cell * static_cast<double>(cols.size()) + 16;
  ss << text_at(lx, kTop + 12, "max " + format_double(vmax));
  ss << text_at(lx, kTop + 30, "min " + format_double(vmin));
  ss << "</svg>\n";
  return ss.str();
}

}  // namespace lindyn
