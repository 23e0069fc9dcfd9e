#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace regweights {

using TableCell = std::variant<std::int64_t, double, std::string>;

// Long-format table used for plot data and simulation output.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<TableCell>> rows;
};

}  // namespace regweights
