#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snkf::csv {

/// Canonical numeric formatting for all emitted CSV (%.12g, '.' decimal).
std::string format_double(double v);

/// A plain table: comment lines (emitted with a leading '#'), a header row
/// and string cells.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> cells);
  void write(std::ostream& os) const;
  std::string to_string() const;
};

}  // namespace snkf::csv
