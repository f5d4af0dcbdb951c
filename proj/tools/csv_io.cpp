#include "csv_io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace narmax::cli {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> splitRow(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

} // namespace

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < headers.size(); ++i)
        if (headers[i] == name) return columns[i];
    throw DataError("column '" + name + "' not found in CSV");
}

CsvTable readCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.headers = splitRow(line);
    table.columns.assign(table.headers.size(), {});

    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto cells = splitRow(line);
        if (cells.size() != table.headers.size())
            throw DataError(path + ":" + std::to_string(lineNo) + ": expected " +
                            std::to_string(table.headers.size()) + " cells, got " +
                            std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const char* begin = cells[c].c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin || *end != '\0')
                throw DataError(path + ":" + std::to_string(lineNo) + ": bad number '" +
                                cells[c] + "'");
            table.columns[c].push_back(v);
        }
    }
    return table;
}

void writeCsv(const std::string& path, const std::vector<std::string>& headers,
              const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t i = 0; i < headers.size(); ++i)
        out << (i ? "," : "") << headers[i];
    out << "\n";
    const std::size_t rows = columns.empty() ? 0 : columns[0].size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << (c ? "," : "") << formatCell(columns[c][r]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string formatCell(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

} // namespace narmax::cli
