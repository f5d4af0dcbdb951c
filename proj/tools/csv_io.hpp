// Small CSV reader/writer for the command-line tool: header row with column
// names, one sample per row, decimal point, UTF-8.

#pragma once

#include <string>
#include <vector>

#include "narmax/model.hpp"

namespace narmax::cli {

struct CsvTable {
    std::vector<std::string> headers;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
    const std::vector<double>& column(const std::string& name) const; // DataError if absent
};

CsvTable readCsv(const std::string& path);

void writeCsv(const std::string& path, const std::vector<std::string>& headers,
              const std::vector<std::vector<double>>& columns);

/// Shortest representation that reparses exactly; used everywhere the CLI
/// writes numbers so outputs are byte-stable across runs and worker counts.
std::string formatCell(double v);

} // namespace narmax::cli
