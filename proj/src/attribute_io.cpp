#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "dirac/catalog.hpp"
#include "dirac/error.hpp"

namespace dirac::catalog {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    cells.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

[[noreturn]] void parse_error(std::size_t row, std::size_t col, const std::string& what) {
  throw Error(ErrorKind::data_format, "catalog",
              "attribute file row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + what);
}

}  // namespace

AttributeMatrix load_attribute_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data_format, "catalog", "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) parse_error(1, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_tabs(line);
  if (header.size() < 2 || header[0] != "class") {
    parse_error(1, 1, "header must start with 'class' followed by at least one attribute name");
  }

  AttributeMatrix m;
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) parse_error(1, i + 1, "empty attribute name");
    m.attribute_names.emplace_back(header[i]);
  }
  const std::size_t d = m.attribute_names.size();

  std::vector<double> flat;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != d + 1) {
      parse_error(row, cells.size(), "expected " + std::to_string(d + 1) + " cells, found " +
                                         std::to_string(cells.size()));
    }
    if (cells[0].empty()) parse_error(row, 1, "empty class name");
    m.class_names.emplace_back(cells[0]);
    for (std::size_t c = 1; c <= d; ++c) {
      double v = 0.0;
      const auto cell = cells[c];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        parse_error(row, c + 1, "non-numeric cell '" + std::string(cell) + "'");
      }
      flat.push_back(v);
    }
  }
  if (m.class_names.empty()) parse_error(2, 1, "no class rows");

  const auto n = static_cast<Eigen::Index>(m.class_names.size());
  m.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), n, static_cast<Eigen::Index>(d));
  return m;
}

void write_attribute_matrix(const std::filesystem::path& path, const AttributeMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data_format, "catalog", "cannot write " + path.string());
  out << "class";
  for (const auto& a : m.attribute_names) out << '\t' << a;
  out << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
    out << m.class_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m.values(r, c));
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace dirac::catalog
