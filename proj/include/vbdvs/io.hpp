#pragma once

// CSV and key-value config plumbing for the command-line tools. Every
// floating-point value is written with 17 significant digits so reading the
// files back reproduces the doubles bit for bit.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vbdvs/common.hpp"

namespace vbdvs::io {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

inline double parse_double(const std::string& text, const std::string& context) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::invalid_argument(context + ": cannot parse '" + text + "' as a number");
  return v;
}

inline long long parse_int(const std::string& text, const std::string& context) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw std::invalid_argument(context + ": cannot parse '" + text + "' as an integer");
  return v;
}

inline bool parse_bool(const std::string& text, const std::string& context) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::invalid_argument(context + ": cannot parse '" + text + "' as a boolean");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace detail

// ---- plain numeric CSV (no header) ----

inline void write_matrix_csv(const std::string& path, const MatrixXd& M) {
  auto out = detail::open_out(path);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) out << ',';
      out << format_double(M(i, j));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_vector_csv(const std::string& path, const VectorXd& v) {
  write_matrix_csv(path, MatrixXd(v));
}

inline MatrixXd read_matrix_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells)
      row.push_back(parse_double(detail::trim(c),
                                 path + " row " + std::to_string(rows.size() + 1)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument(path + ": ragged row " + std::to_string(rows.size() + 1));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no numeric rows");
  MatrixXd M(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return M;
}

inline VectorXd read_vector_csv(const std::string& path) {
  const MatrixXd M = read_matrix_csv(path);
  if (M.cols() != 1)
    throw std::invalid_argument(path + ": expected a single column, got " +
                                std::to_string(M.cols()));
  return M.col(0);
}

// ---- dated panel and its schema sidecar ----

// Panel layout: header "date,<name>,...", then one date string followed by
// numeric cells per row.
struct Panel {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  MatrixXd values;
};

inline Panel read_panel_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": missing header");
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() < 2) throw std::invalid_argument(path + ": header needs date plus columns");
  Panel panel;
  for (std::size_t j = 1; j < header.size(); ++j) panel.names.push_back(detail::trim(header[j]));

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ": row " + std::to_string(rows.size() + 2) +
                                  " has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
    panel.dates.push_back(detail::trim(cells[0]));
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j)
      row.push_back(parse_double(detail::trim(cells[j]),
                                 path + " row " + std::to_string(rows.size() + 2)));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  panel.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(panel.names.size()));
  for (Eigen::Index i = 0; i < panel.values.rows(); ++i)
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j)
      panel.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return panel;
}

// Schema layout: header "column,tcode,factor", one row per panel column.
struct SchemaEntry {
  std::string column;
  int tcode = 1;
  bool factor = false;
};

inline std::vector<SchemaEntry> read_schema_csv(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": missing header");
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() != 3 || detail::trim(header[0]) != "column" ||
      detail::trim(header[1]) != "tcode" || detail::trim(header[2]) != "factor")
    throw std::invalid_argument(path + ": expected header 'column,tcode,factor'");
  std::vector<SchemaEntry> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 3)
      throw std::invalid_argument(path + ": row " + std::to_string(line_no) + " needs 3 cells");
    SchemaEntry e;
    e.column = detail::trim(cells[0]);
    e.tcode = static_cast<int>(
        parse_int(detail::trim(cells[1]), path + " row " + std::to_string(line_no)));
    e.factor = parse_bool(detail::trim(cells[2]), path + " row " + std::to_string(line_no));
    if (e.tcode < 1 || e.tcode > 7)
      throw std::invalid_argument(path + ": tcode out of range for column " + e.column);
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw std::invalid_argument(path + ": no schema rows");
  return entries;
}

// ---- key-value run configs ----

// Format: one "key = value" per line; blank lines and lines starting with '#'
// are ignored; keys are unique. Serialization sorts keys, so parse-then-
// serialize is idempotent.
using Config = std::map<std::string, std::string>;

inline Config parse_config_text(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto pos = t.find('=');
    if (pos == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value', got '" + t + "'");
    const std::string key = detail::trim(t.substr(0, pos));
    const std::string value = detail::trim(t.substr(pos + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    if (!cfg.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }
  return cfg;
}

inline Config parse_config_file(const std::string& path) {
  auto in = detail::open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline std::string serialize_config(const Config& cfg) {
  std::ostringstream out;
  for (const auto& [key, value] : cfg) out << key << " = " << value << '\n';
  return out.str();
}

inline void check_allowed_keys(const Config& cfg, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : cfg)
    if (!allowed.count(key))
      throw std::invalid_argument("unknown config key '" + key + "'");
}

inline std::string get_string(const Config& cfg, const std::string& key,
                              const std::string& fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

inline double get_double(const Config& cfg, const std::string& key, double fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_double(it->second, "config key '" + key + "'");
}

inline long long get_int(const Config& cfg, const std::string& key, long long fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_int(it->second, "config key '" + key + "'");
}

inline bool get_bool(const Config& cfg, const std::string& key, bool fallback) {
  const auto it = cfg.find(key);
  return it == cfg.end() ? fallback : parse_bool(it->second, "config key '" + key + "'");
}

}  // namespace vbdvs::io
