#include "ordlab/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "ordlab/errors.hpp"
#include "ordlab/metrics.hpp"

namespace ordlab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

CsvTable parse_numeric_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (line_no == 1) {
      table.columns = fields;
      continue;
    }
    if (fields.size() != table.columns.size())
      fail(ErrorKind::format, "csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(table.columns.size()));
    std::vector<double> row;
    for (size_t i = 0; i < fields.size(); ++i) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(fields[i].c_str(), &end);
      if (end == fields[i].c_str() || *end != '\0' || errno != 0)
        fail(ErrorKind::format, "csv: line " + std::to_string(line_no) + ": field '" + fields[i] +
                                    "' in column " + table.columns[i] + " is not numeric");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) fail(ErrorKind::format, "csv: empty input");
  return table;
}

std::string render_line_chart_svg(const CsvTable& table, const std::string& x_column,
                                  const std::string& y_column) {
  auto col_index = [&](const std::string& name) -> size_t {
    for (size_t i = 0; i < table.columns.size(); ++i)
      if (table.columns[i] == name) return i;
    fail(ErrorKind::invalid_argument, "plot: missing column '" + name + "'");
  };
  const size_t xi = col_index(x_column);
  const size_t yi = col_index(y_column);
  if (table.rows.empty()) fail(ErrorKind::invalid_argument, "plot: no data rows");

  double xmin = table.rows[0][xi], xmax = xmin, ymin = table.rows[0][yi], ymax = ymin;
  for (const auto& row : table.rows) {
    xmin = std::min(xmin, row[xi]);
    xmax = std::max(xmax, row[xi]);
    ymin = std::min(ymin, row[yi]);
    ymax = std::max(ymax, row[yi]);
  }
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double yspan = ymax > ymin ? ymax - ymin : 1.0;

  constexpr int kW = 640, kH = 400, kPad = 48;
  auto sx = [&](double x) { return kPad + (x - xmin) / xspan * (kW - 2 * kPad); };
  auto sy = [&](double y) { return kH - kPad - (y - ymin) / yspan * (kH - 2 * kPad); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) + "\" height=\"" +
         std::to_string(kH) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + fmt6(kPad) + "\" y1=\"" + fmt6(kH - kPad) + "\" x2=\"" + fmt6(kW - kPad) +
         "\" y2=\"" + fmt6(kH - kPad) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt6(kPad) + "\" y1=\"" + fmt6(kPad) + "\" x2=\"" + fmt6(kPad) + "\" y2=\"" +
         fmt6(kH - kPad) + "\" stroke=\"black\"/>\n";
  svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
  for (size_t r = 0; r < table.rows.size(); ++r) {
    if (r) svg += ' ';
    svg += fmt6(sx(table.rows[r][xi])) + ',' + fmt6(sy(table.rows[r][yi]));
  }
  svg += "\"/>\n";
  svg += "<text x=\"" + fmt6(kW / 2.0) + "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">" + y_column +
         " vs " + x_column + "</text>\n";
  svg += "<text x=\"" + fmt6(kPad) + "\" y=\"" + fmt6(kH - kPad + 16.0) + "\" font-size=\"11\">" +
         fmt6(xmin) + "</text>\n";
  svg += "<text x=\"" + fmt6(kW - kPad) + "\" y=\"" + fmt6(kH - kPad + 16.0) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt6(xmax) + "</text>\n";
  svg += "<text x=\"" + fmt6(kPad - 4.0) + "\" y=\"" + fmt6(kH - kPad) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt6(ymin) + "</text>\n";
  svg += "<text x=\"" + fmt6(kPad - 4.0) + "\" y=\"" + fmt6(double(kPad)) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fmt6(ymax) + "</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::vector<std::string> emit_plots(const std::string& metrics_csv_path, const std::string& out_dir,
                                    const std::vector<std::string>& columns) {
  CsvTable table = parse_numeric_csv(read_text_file(metrics_csv_path));
  const std::string x_column = "epoch";
  bool has_epoch = false;
  for (const auto& c : table.columns) has_epoch |= (c == x_column);
  if (!has_epoch) fail(ErrorKind::invalid_argument, "plot: missing column 'epoch'");

  std::vector<std::string> wanted = columns;
  if (wanted.empty()) {
    for (const auto& c : table.columns)
      if (c != x_column) wanted.push_back(c);
  }
  std::vector<std::string> written;
  for (const auto& col : wanted) {
    std::string svg = render_line_chart_svg(table, x_column, col);
    const std::string path = out_dir + "/plot_" + col + ".svg";
    write_text_file(path, svg);
    written.push_back(path);
  }
  return written;
}

}  // namespace ordlab
