#pragma once

// Tabular output. CSV has a mandatory header row and no metadata; JSON
// holds {"metadata": {...}, "rows": [{column: value, ...}, ...]}. Reals
// are printed in shortest round-trip form so equal runs give equal bytes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <fmt/core.h>
#include <json.hpp>

#include "../errors.hpp"
#include "config.hpp"

namespace ssep::harness {

inline constexpr const char* kVersion = "1.0.0";

using Cell = std::variant<std::monostate, std::int64_t, double, bool, std::string>;

inline Cell cell(std::optional<double> v) { return v ? Cell{*v} : Cell{}; }

inline std::string format_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return fmt::format("{}", v); }
    std::string operator()(double v) const { return fmt::format("{}", v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(const std::string& v) const {
      if (v.find_first_of(",\"\n") == std::string::npos) return v;
      std::string out = "\"";
      for (char ch : v) {
        if (ch == '"') out += '"';
        out += ch;
      }
      return out + '"';
    }
  };
  return std::visit(Visitor{}, c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(std::int64_t v) const { return v; }
    nlohmann::ordered_json operator()(double v) const { return v; }
    nlohmann::ordered_json operator()(bool v) const { return v; }
    nlohmann::ordered_json operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw DomainError("row width differs from the header");
    rows_.push_back(std::move(row));
  }

  /// Metadata is emitted in JSON output only.
  nlohmann::ordered_json& metadata() { return metadata_; }
  [[nodiscard]] const nlohmann::ordered_json& metadata() const { return metadata_; }
  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  [[nodiscard]] std::string to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns_.size(); ++c) out += (c ? "," : "") + columns_[c];
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_cell(row[c]);
      out += '\n';
    }
    return out;
  }

  [[nodiscard]] std::string to_json() const {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rows_) {
      nlohmann::ordered_json r = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < row.size(); ++c) r[columns_[c]] = cell_json(row[c]);
      rows.push_back(std::move(r));
    }
    nlohmann::ordered_json meta = metadata_.is_null() ? nlohmann::ordered_json::object() : metadata_;
    return nlohmann::ordered_json{{"metadata", meta}, {"rows", rows}}.dump(2) + "\n";
  }

  [[nodiscard]] std::string render(Format f) const { return f == Format::Csv ? to_csv() : to_json(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  nlohmann::ordered_json metadata_;
};

/// Standard metadata block.
inline nlohmann::ordered_json base_metadata(const std::string& command, std::uint64_t seed) {
  return {{"command", command}, {"version", kVersion}, {"seed", seed}};
}

/// Writes text to path, or to `out` when path is empty or "-".
inline void write_output(const std::string& text, const std::string& path, std::ostream& out = std::cout) {
  if (path.empty() || path == "-") {
    out << text;
    out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ValidationError(fmt::format("cannot write '{}'", path));
  file << text;
}

}  // namespace ssep::harness
