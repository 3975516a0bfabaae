#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "sci/errors.hpp"
#include "sci/text.hpp"

// CSV with `# key=value` provenance comments above the header row.  Numbers
// go through format_double so files are reproducible byte for byte.

namespace sci {

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

inline std::string render_csv(const CsvTable& table) {
  std::string out;
  for (const auto& [k, v] : table.provenance)
    out += "# " + k + "=" + v + "\n";
  out += csv_join(table.header) + "\n";
  for (const auto& row : table.rows) out += csv_join(row) + "\n";
  return out;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open for writing: " + path);
  std::string body = render_csv(table);
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw io_error("short write: " + path);
}

}  // namespace sci
