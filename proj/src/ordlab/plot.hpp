#pragma once

#include <string>
#include <vector>

namespace ordlab {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // numeric cells, row major
};

// Strict numeric CSV; malformed rows report their line number.
CsvTable parse_numeric_csv(const std::string& text);

// Deterministic line chart of one column against the epoch column.
std::string render_line_chart_svg(const CsvTable& table, const std::string& x_column,
                                  const std::string& y_column);

// One SVG per requested column (all non-x numeric columns when the request is
// empty). Returns the written file paths.
std::vector<std::string> emit_plots(const std::string& metrics_csv_path, const std::string& out_dir,
                                    const std::vector<std::string>& columns);

}  // namespace ordlab
