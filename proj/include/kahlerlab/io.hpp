#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "kahlerlab/core.hpp"

namespace kahlerlab::io {

/// Output file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { csv, json };

inline Format parse_format(const std::string& text) {
  if (text == "csv") return Format::csv;
  if (text == "json") return Format::json;
  throw ConfigError("format must be 'csv' or 'json', got '" + text + "'");
}

using Cell = std::variant<std::string, double, long long, bool>;

/// Rows under a fixed header. Every row has one cell per column.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw ConfigError("table '" + name + "': row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// 17 significant digits; non-finite values as nan, inf, -inf.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("expected a number, got " + v.dump());
}

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return csv_quote(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string json_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return json_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return std::isfinite(v) ? format_double(v) : json_string(format_double(v));
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

}  // namespace detail

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += detail::csv_quote(t.columns[i]);
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += detail::csv_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

/// {"table": name, "columns": [...], "rows": [{column: value, ...}, ...]}, one row per line.
inline std::string to_json(const Table& t) {
  std::string out = "{\"table\": " + detail::json_string(t.name) + ", \"columns\": [";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ", ";
    out += detail::json_string(t.columns[i]);
  }
  out += "], \"rows\": [";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += r ? ",\n  {" : "\n  {";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += ", ";
      out += detail::json_string(t.columns[i]) + ": " + detail::json_cell(t.rows[r][i]);
    }
    out += "}";
  }
  out += t.rows.empty() ? "]}\n" : "\n]}\n";
  return out;
}

inline std::string render(const Table& t, Format f) { return f == Format::csv ? to_csv(t) : to_json(t); }

/// Writes to `path`, or to stdout when path is empty or "-".
inline void emit(const Table& t, Format f, const std::string& path) {
  const std::string text = render(t, f);
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw IoError("failed to write to stdout");
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << text;
  os.flush();
  if (!os) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& verdict_columns() {
  static const std::vector<std::string> cols{"check",     "anchor",          "grid_size", "worst_margin", "worst_at",
                                             "tolerance", "precondition_ok", "pass",      "note"};
  return cols;
}

/// Verdicts sorted by check name.
inline Table verdict_table(std::vector<Verdict> verdicts) {
  std::stable_sort(verdicts.begin(), verdicts.end(),
                   [](const Verdict& a, const Verdict& b) { return a.name < b.name; });
  Table t{"verdicts", verdict_columns(), {}};
  for (const auto& v : verdicts) {
    t.add({v.name, v.anchor, static_cast<long long>(v.grid_size), v.worst_margin, v.worst_at, v.tolerance,
           v.precondition_ok, v.pass(), v.note});
  }
  return t;
}

inline Verdict verdict_from_json(const nlohmann::json& row) {
  try {
    Verdict v;
    v.name = row.at("check").get<std::string>();
    v.anchor = row.at("anchor").get<std::string>();
    v.grid_size = row.at("grid_size").get<std::size_t>();
    v.worst_margin = parse_double(row.at("worst_margin"));
    v.worst_at = parse_double(row.at("worst_at"));
    v.tolerance = parse_double(row.at("tolerance"));
    v.precondition_ok = row.at("precondition_ok").get<bool>();
    v.note = row.at("note").get<std::string>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed verdict record: ") + e.what());
  }
}

/// Inverse of to_json(verdict_table(...)).
inline std::vector<Verdict> verdicts_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rows") || !doc["rows"].is_array()) {
    throw ConfigError("verdict document needs a 'rows' array");
  }
  std::vector<Verdict> out;
  for (const auto& row : doc["rows"]) out.push_back(verdict_from_json(row));
  return out;
}

}  // namespace kahlerlab::io
