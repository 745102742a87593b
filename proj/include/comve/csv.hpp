#pragma once

// Comma-delimited, double-quote quoted CSV with a mandatory header row.
// Quoted fields may contain commas, quotes ("" escape) and newlines.

#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "comve/errors.hpp"

namespace comve::csv {

struct Record {
  std::size_t line = 0;  // physical line where the record starts, 1-based
  std::vector<std::string> fields;
};

inline std::vector<Record> parse(std::string_view text,
                                 const std::string& origin) {
  std::vector<Record> records;
  // UTF-8 BOM
  if (text.substr(0, 3) == "\xef\xbb\xbf") text.remove_prefix(3);

  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    // skip blank lines
    if (text[i] == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (text[i] == '\r' && i + 1 < n && text[i + 1] == '\n') {
      ++line;
      i += 2;
      continue;
    }
    Record rec;
    rec.line = line;
    std::string field;
    bool done = false;
    while (!done) {
      if (i < n && text[i] == '"') {  // quoted field
        ++i;
        while (true) {
          if (i >= n)
            throw validation_error(origin + ":" + std::to_string(rec.line) +
                                   ": unterminated quoted field");
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field += '"';
              i += 2;
            } else {
              ++i;
              break;
            }
          } else {
            if (c == '\n') ++line;
            field += c;
            ++i;
          }
        }
        if (i < n && text[i] != ',' && text[i] != '\n' &&
            !(text[i] == '\r' && i + 1 < n && text[i + 1] == '\n'))
          throw validation_error(origin + ":" + std::to_string(line) +
                                 ": unexpected character after closing quote");
      } else {  // unquoted field
        while (i < n && text[i] != ',' && text[i] != '\n' &&
               !(text[i] == '\r' && i + 1 < n && text[i + 1] == '\n')) {
          field += text[i];
          ++i;
        }
      }
      rec.fields.push_back(std::move(field));
      field.clear();
      if (i >= n) {
        done = true;
      } else if (text[i] == ',') {
        ++i;
      } else {  // newline ends the record
        i += text[i] == '\r' ? 2 : 1;
        ++line;
        done = true;
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<Record> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw validation_error("cannot open file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse(text, path.filename().string());
}

inline std::string escape(std::string_view field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string_view::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& os, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << escape(fields[i]);
  }
  os << '\n';
}

}  // namespace comve::csv
