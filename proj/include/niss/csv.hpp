//
// Copyright 2026 The NISS Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef NISS_CSV_HPP_
#define NISS_CSV_HPP_

// Minimal CSV for the report files: no quoting, comma separated, '\n' rows.
// Doubles are written with 17 significant digits so they parse back exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "niss/errors.hpp"

namespace niss::csv {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Short form for labels (scenario ids), e.g. 0.3 rather than 0.29999999999999999.
inline std::string format_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("CSV write failed");
  }

 private:
  std::ofstream out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    throw FormatError(std::string(name), "no such CSV column");
  }
};

inline std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), "cannot open CSV");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string(), "missing header");
  t.header = split_row(line);
  while (std::getline(in, line)) {
    auto row = split_row(line);
    if (row.size() != t.header.size()) throw FormatError(path.string(), "row width differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace niss::csv

#endif  // NISS_CSV_HPP_
