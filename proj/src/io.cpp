#include "hypwr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hypwr {

std::string format_real(Real v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : n_cols_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) body_ += ',';
    body_ += columns[i];
  }
  body_ += '\n';
}

void CsvWriter::add_row(const std::vector<Real>& values) {
  if (values.size() != n_cols_)
    throw Error("io", "csv", "row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) body_ += ',';
    body_ += format_real(values[i]);
  }
  body_ += '\n';
}

void CsvWriter::add_row_mixed(const std::vector<std::string>& values) {
  if (values.size() != n_cols_)
    throw Error("io", "csv", "row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) body_ += ',';
    body_ += values[i];
  }
  body_ += '\n';
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "csv", "cannot write '" + path.string() + "'");
  out << body_;
}

void write_svg_loglog(const std::filesystem::path& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<SvgSeries>& series) {
  const int w = 720, h = 480, ml = 80, mr = 30, mt = 50, mb = 60;
  Real xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0 || s.y[i] <= 0) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin > xmax) { xmin = 0.1; xmax = 10; ymin = 0.1; ymax = 10; }
  Real lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  Real ly0 = std::log10(ymin), ly1 = std::log10(ymax);
  if (lx1 - lx0 < 1e-12) { lx0 -= 0.5; lx1 += 0.5; }
  if (ly1 - ly0 < 1e-12) { ly0 -= 0.5; ly1 += 0.5; }

  auto px = [&](Real x) { return ml + (std::log10(x) - lx0) / (lx1 - lx0) * (w - ml - mr); };
  auto py = [&](Real y) { return h - mb - (std::log10(y) - ly0) / (ly1 - ly0) * (h - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "' viewBox='0 0 " << w << " " << h << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>"
      << title << "</text>\n"
      << "<text x='" << w / 2 << "' y='" << h - 14
      << "' text-anchor='middle' font-size='12'>" << xlabel << "</text>\n"
      << "<text x='18' y='" << h / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 18 " << h / 2
      << ")'>" << ylabel << "</text>\n";

  // Decade grid lines.
  for (int e = static_cast<int>(std::floor(lx0)); e <= static_cast<int>(std::ceil(lx1)); ++e) {
    Real x = std::pow(10.0, e);
    if (x < xmin || x > xmax) continue;
    svg << "<line x1='" << px(x) << "' y1='" << mt << "' x2='" << px(x) << "' y2='"
        << h - mb << "' stroke='#dddddd'/>\n"
        << "<text x='" << px(x) << "' y='" << h - mb + 16
        << "' text-anchor='middle' font-size='10'>1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::floor(ly0)); e <= static_cast<int>(std::ceil(ly1)); ++e) {
    Real y = std::pow(10.0, e);
    if (y < ymin || y > ymax) continue;
    svg << "<line x1='" << ml << "' y1='" << py(y) << "' x2='" << w - mr << "' y2='"
        << py(y) << "' stroke='#dddddd'/>\n"
        << "<text x='" << ml - 8 << "' y='" << py(y) + 4
        << "' text-anchor='end' font-size='10'>1e" << e << "</text>\n";
  }
  svg << "<rect x='" << ml << "' y='" << mt << "' width='" << w - ml - mr
      << "' height='" << h - mt - mb << "' fill='none' stroke='black'/>\n";

  int li = 0;
  for (const auto& s : series) {
    svg << "<polyline fill='none' stroke='" << s.color << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] <= 0 || s.y[i] <= 0) continue;
      svg << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    svg << "'/>\n";
    svg << "<text x='" << w - mr - 8 << "' y='" << mt + 18 + 16 * li
        << "' text-anchor='end' font-size='12' fill='" << s.color << "'>" << s.label
        << "</text>\n";
    ++li;
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "svg", "cannot write '" + path.string() + "'");
  out << svg.str();
}

}  // namespace hypwr
