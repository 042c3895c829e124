// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

namespace adjmc {

/// Floats serialized with 17 significant digits so a written value rereads
/// to the identical double.
inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out_ << ',';
            out_ << columns[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    bool good() const { return out_.good(); }

  private:
    std::ofstream out_;
};

/// Plain key = value manifest; every resolved setting of a run goes here so
/// outputs are self-describing.
inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

}  // namespace adjmc
