#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace odt {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index for a header name, -1 when absent.
  int col(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);  // throws on open failure

void write_csv(std::ostream& out, const CsvTable& t);
void write_csv_file(const std::string& path, const CsvTable& t);

/// Shortest exact decimal form that round-trips the double (%.17g trimmed).
std::string format_double(double x);
std::string csv_escape(const std::string& field);

}  // namespace odt
