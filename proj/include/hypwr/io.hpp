#pragma once

#include "hypwr/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hypwr {

// Deterministic number formatting: shortest round-trip representation so
// repeated runs produce byte-identical artifacts.
std::string format_real(Real v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<Real>& values);
  void add_row_mixed(const std::vector<std::string>& values);
  void write(const std::filesystem::path& path) const;
  const std::string& text() const { return body_; }

 private:
  std::string body_;
  std::size_t n_cols_;
};

struct SvgSeries {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<Real> x, y;
};

// Minimal log-log line plot.
void write_svg_loglog(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<SvgSeries>& series);

}  // namespace hypwr
