#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "timrl/cli/cli.hpp"

namespace timrl::cli {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

std::vector<double> NumericTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column " + name);
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

NumericTable parse_numeric_csv(std::istream& is) {
  NumericTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (table.columns.empty()) {
      for (auto& c : cells) table.columns.push_back(trim(c));
      continue;
    }
    if (cells.size() != table.columns.size()) {
      throw CsvError(line_no, "expected " + std::to_string(table.columns.size()) + " fields, found " +
                                  std::to_string(cells.size()));
    }
    std::vector<double> row;
    for (auto& c : cells) {
      const std::string cell = trim(c);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw CsvError(line_no, "not a number: '" + cell + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) throw CsvError(line_no, "missing header");
  return table;
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be positive");
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    running += values[i];
    if (i >= window) running -= values[i - window];
    out[i] = running / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t max_points) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  if (n <= max_points || max_points < 2) {
    const std::size_t count = n <= max_points ? n : 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    if (count == 1 && n > 1) out.push_back(n - 1);
    return out;
  }
  for (std::size_t j = 0; j < max_points; ++j) {
    const auto idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(n - 1) / static_cast<double>(max_points - 1)));
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

nlohmann::ordered_json plot_series(const NumericTable& table, std::size_t window, std::size_t max_points) {
  nlohmann::ordered_json doc;
  const std::string x_name = table.columns.front();
  const auto x = table.column(x_name);
  const auto keep = downsample_indices(x.size(), max_points);
  doc["x"] = x_name;
  doc["window"] = window;
  doc["points"] = keep.size();
  auto& series = doc["series"] = nlohmann::ordered_json::object();
  for (std::size_t c = 1; c < table.columns.size(); ++c) {
    const auto raw = table.column(table.columns[c]);
    const auto smooth = moving_average(raw, window);
    auto& s = series[table.columns[c]];
    s["x"] = nlohmann::ordered_json::array();
    s["raw"] = nlohmann::ordered_json::array();
    s["smoothed"] = nlohmann::ordered_json::array();
    for (const auto i : keep) {
      s["x"].push_back(x[i]);
      s["raw"].push_back(raw[i]);
      s["smoothed"].push_back(smooth[i]);
    }
  }
  return doc;
}

int cmd_plotdata(const std::filesystem::path& metrics_csv, std::size_t window, std::size_t max_points,
                 const std::optional<std::filesystem::path>& output, std::ostream& out, std::ostream& err) {
  std::ifstream in(metrics_csv);
  if (!in) {
    err << "cannot open " << metrics_csv.string() << "\n";
    return kExitUsage;
  }
  NumericTable table;
  try {
    table = parse_numeric_csv(in);
  } catch (const CsvError& e) {
    err << metrics_csv.string() << ": " << e.what() << "\n";
    return kExitUsage;
  }
  if (window == 0 || max_points == 0) {
    err << "window and max points must be positive\n";
    return kExitUsage;
  }
  const auto doc = plot_series(table, window, max_points);
  const auto path = output.value_or(metrics_csv.parent_path() / "plot.json");
  std::ofstream os(path);
  if (!os) {
    err << "cannot write " << path.string() << "\n";
    return kExitFailure;
  }
  os << doc.dump(2) << "\n";
  out << "wrote " << path.string() << " (" << doc["points"].get<std::size_t>() << " points)\n";
  return kExitOk;
}

}  // namespace timrl::cli
