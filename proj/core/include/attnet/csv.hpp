#pragma once

#include <string>
#include <vector>

namespace attnet {

// Locale-independent number formatting ('.' decimal separator, shortest
// round-trip form) so emitted reports are byte-reproducible.
std::string format_double(double v);

std::string csv_escape(const std::string& field);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string render_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace attnet
