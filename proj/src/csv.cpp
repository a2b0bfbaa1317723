#include "photonlab/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "photonlab/error.hpp"

namespace photonlab::csv {

std::string format_number(double v) { return fmt::format("{}", v); }

void write(std::ostream& out, const Table& t) {
  out << "# provenance: " << t.provenance.dump() << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out << (i ? "," : "") << t.columns[i];
  }
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_number(row[i]);
    }
    out << '\n';
  }
}

namespace {

std::string joined(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

double parse_double(const std::string& tok, std::size_t line_no) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  while (b < e && *b == ' ') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e) {
    throw FormatError("line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
  }
  return v;
}

}  // namespace

Table read(std::istream& in, const std::vector<std::string>& expected_columns,
           const std::string& product_name) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  const std::string expected = joined(expected_columns);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# provenance: ";
      if (line.rfind(key, 0) == 0) {
        try {
          t.provenance = nlohmann::json::parse(line.substr(key.size()));
        } catch (const nlohmann::json::exception&) {
          throw FormatError(product_name + ": malformed provenance line");
        }
      }
      continue;
    }
    if (!have_header) {
      if (line != expected) {
        throw FormatError("expected " + product_name + " CSV with header '" + expected +
                          "', found '" + line.substr(0, 60) + "'");
      }
      t.columns = expected_columns;
      have_header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, line_no));
    if (row.size() != expected_columns.size()) {
      throw FormatError(product_name + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " fields");
    }
    t.rows.push_back(std::move(row));
  }
  if (!have_header) {
    throw FormatError("empty input: expected " + product_name + " CSV with header '" +
                      expected + "'");
  }
  return t;
}

}  // namespace photonlab::csv
