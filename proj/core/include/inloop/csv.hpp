#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace inloop {

struct CsvColumn {
  std::string name;
  std::span<const double> values;
};

// Writes a header line and one row per index, numbers with 15 significant digits.
// Lines in `comments` are emitted first, each prefixed with "# ".
// Writes to a temporary sibling and renames, so a failed run leaves no partial file.
// Throws std::runtime_error on I/O failure or ragged columns.
void write_csv(const std::filesystem::path& path, const std::vector<CsvColumn>& columns,
               const std::vector<std::string>& comments = {});

std::string format_number(double value);

}  // namespace inloop
