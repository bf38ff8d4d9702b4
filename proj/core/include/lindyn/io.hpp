#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Artifact serialization: round-trip-exact CSV, content hashing for
// manifests, and dependency-free SVG charts.

namespace lindyn {

/// Shortest decimal form that round-trips a double exactly.
std::string format_double(double value);

/// FNV-1a 64-bit content hash.
std::uint64_t fnv1a64(std::string_view bytes);

/// CSV with a header row; every cell formatted via format_double.
/// Rows must all match the column count.
std::string to_csv(const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& rows);

/// Throws Error on any filesystem failure.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Multi-series line chart; series[k][i] is plotted at x[i]. Non-finite
/// samples are skipped. Auto-scaled axes with min/max tick labels.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::vector<std::string>& series_names,
                           const std::vector<double>& x,
                           const std::vector<std::vector<double>>& series,
                           bool log_y = false);

/// Heatmap of cells(i, j) at row label rows[i], column label cols[j], colored
/// blue (min) to red (max); NaN cells render gray.
std::string svg_heatmap(const std::string& title,
                        const std::vector<double>& rows,
                        const std::vector<double>& cols,
                        const std::vector<std::vector<double>>& cells,
                        const std::string& row_label,
                        const std::string& col_label);

}  // namespace lindyn
