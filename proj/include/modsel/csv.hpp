#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "modsel/errors.hpp"

namespace modsel::csv {

// 17 significant digits: doubles round-trip exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::string text;
  Field() = default;
  Field(const char* s) : text(s) {}
  Field(std::string s) : text(std::move(s)) {}
  Field(double v) : text(format_double(v)) {}
  Field(long long v) : text(std::to_string(v)) {}
  Field(int v) : text(std::to_string(v)) {}
};

inline std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

// Accumulates rows in memory and writes them atomically (temp file + rename).
class Writer {
 public:
  void header(const std::vector<std::string>& names) { append_row_of_text(names); }

  void row(const std::vector<Field>& fields) {
    std::vector<std::string> texts;
    texts.reserve(fields.size());
    for (const auto& f : fields) texts.push_back(f.text);
    append_row_of_text(texts);
  }

  const std::string& content() const { return buf_; }

  void write(const std::filesystem::path& path) const { atomic_write(path, buf_); }

  static void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("csv: cannot open '" + tmp.string() + "' for writing");
      out << content;
      if (!out) throw DataError("csv: write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  void append_row_of_text(const std::vector<std::string>& texts) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (i) buf_ += ',';
      buf_ += quote_if_needed(texts[i]);
    }
    buf_ += '\n';
  }

  std::string buf_;
};

// Minimal RFC-4180 reader: quoted fields, doubled quotes, \n or \r\n rows.
inline std::vector<std::vector<std::string>> parse(const std::string& content) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("csv: cannot open '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(content);
}

}  // namespace modsel::csv
