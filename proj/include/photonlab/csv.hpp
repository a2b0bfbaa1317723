#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace photonlab::csv {

// Numeric table with `#`-prefixed provenance. The provenance JSON is stored
// as a single `# provenance: {...}` line so that files round-trip exactly.
struct Table {
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write(std::ostream& out, const Table& t);

// Throws FormatError naming `expected` when the header does not match.
Table read(std::istream& in, const std::vector<std::string>& expected_columns,
           const std::string& product_name);

// Shortest representation that parses back to the same double.
std::string format_number(double v);

}  // namespace photonlab::csv
