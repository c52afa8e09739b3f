#include "inloop/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace inloop {

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& comments) {
  if (columns.empty()) {
    throw std::runtime_error("write_csv: no columns");
  }
  const std::size_t rows = columns.front().values.size();
  for (const auto& c : columns) {
    if (c.values.size() != rows) {
      throw std::runtime_error("write_csv: column '" + c.name + "' has a different length");
    }
  }

  std::filesystem::path tmp = path;
  tmp += ".part";
  {
    std::ofstream out(tmp);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    for (const auto& line : comments) out << "# " << line << '\n';
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out << (j ? "," : "") << columns[j].name;
    }
    out << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < columns.size(); ++j) {
        out << (j ? "," : "") << format_number(columns[j].values[i]);
      }
      out << '\n';
    }
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot move output into place at " + path.string());
  }
}

}  // namespace inloop
