#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "fmala/targets.hpp"

namespace fmala {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_record(std::string_view line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.emplace_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", lineno);
  fields.emplace_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto fields = split_record(line, lineno);
    if (first) {
      first = false;
      width = fields.size();
      const bool header = std::any_of(fields.begin(), fields.end(), [](const std::string& f) {
        return !parse_number(f).has_value();
      });
      if (header) {
        table.header = std::move(fields);
        continue;
      }
    }
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = parse_number(fields[j]);
      if (!v) {
        throw ParseError("field " + std::to_string(j) + " ('" + fields[j] + "') is not a number",
                         lineno);
      }
      row[j] = *v;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw ParseError("'" + path + "' contains no data rows", 0);
  return table;
}

}  // namespace

LogisticRegressionTarget load_csv_dataset(const std::string& path, const LabelColumn& label,
                                          const DatasetOptions& options) {
  const CsvTable table = read_numeric_csv(path);
  const std::size_t width = table.rows.front().size();
  std::size_t label_idx = 0;
  if (const auto* name = std::get_if<std::string>(&label)) {
    const auto it = std::find(table.header.begin(), table.header.end(), *name);
    if (it == table.header.end()) {
      throw ValidationError("label column '" + *name + "' not found in header of '" + path + "'");
    }
    label_idx = static_cast<std::size_t>(it - table.header.begin());
  } else {
    label_idx = std::get<std::size_t>(label);
    if (label_idx >= width) {
      throw ValidationError("label column index " + std::to_string(label_idx) +
                            " out of range for " + std::to_string(width) + " columns");
    }
  }
  if (width < 2 && !options.add_bias) throw ValidationError("dataset has no feature columns");

  std::set<double> distinct;
  for (const auto& row : table.rows) distinct.insert(row[label_idx]);
  if (distinct.size() > 2) {
    throw ValidationError("label column has " + std::to_string(distinct.size()) +
                          " distinct values; expected a binary label");
  }
  const double positive = *distinct.rbegin();
  const bool already_binary =
      std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 0.0 || v == 1.0; });

  const Index m = static_cast<Index>(table.rows.size());
  const Index features = static_cast<Index>(width - 1) + (options.add_bias ? 1 : 0);
  Matrix z(m, features);
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (j == label_idx) continue;
      z(i, col++) = options.pixel_scale ? row[j] / 255.0 : row[j];
    }
    if (options.add_bias) z(i, col) = 1.0;
    const double raw = row[label_idx];
    y[i] = already_binary ? raw : (raw == positive && distinct.size() == 2 ? 1.0 : 0.0);
  }
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
    name = name.substr(slash + 1);
  }
  return LogisticRegressionTarget(std::move(z), std::move(y), name);
}

Matrix load_csv_matrix(const std::string& path) {
  const CsvTable table = read_numeric_csv(path);
  const Index n = static_cast<Index>(table.rows.size());
  const Index d = static_cast<Index>(table.rows.front().size());
  Matrix out(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) out(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace fmala
