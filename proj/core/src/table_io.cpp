#include "ruinkit/table_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ruinkit/error.hpp"

namespace ruinkit {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_root(std::complex<double> z) {
  if (z.imag() == 0.0) return format_number(z.real());
  std::string s = format_number(z.real());
  if (z.imag() >= 0.0) s += '+';
  return s + format_number(z.imag()) + 'i';
}

double parse_number(std::string_view cell) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell == "nan") return std::nan("");
  if (cell == "inf") return INFINITY;
  if (cell == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw Error(ErrorCode::InvalidInput, "non-numeric CSV cell '" + std::string(cell) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::string mc_table_csv(std::span<const MCEstimate> rows) {
  std::string out = "u,p_hat,stderr,ci_lo,ci_hi,censored_fraction,n_paths,seed\n";
  for (const auto& e : rows) {
    out += format_number(e.u) + ',' + format_number(e.p_hat) + ',' + format_number(e.std_error) + ',' +
           format_number(e.ci_lo) + ',' + format_number(e.ci_hi) + ',' + format_number(e.censored_fraction) + ',' +
           std::to_string(e.n_paths) + ',' + std::to_string(e.seed) + '\n';
  }
  return out;
}

std::string solution_csv(const GridSolution& s) {
  std::string out = "u,phi,g,i1,i2,residual_ide,residual_ode3\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += format_number(s.u[i]) + ',' + format_number(s.phi[i]) + ',' + format_number(s.g[i]) + ',' +
           format_number(s.i1[i]) + ',' + format_number(s.i2[i]) + ',' + format_number(s.residual_ide[i]) + ',' +
           format_number(s.residual_ode3[i]) + '\n';
  }
  return out;
}

std::string roots_csv(std::span<const CharRoots> rows) {
  std::string out = "u,lambda1,lambda2,lambda3\n";
  for (const auto& r : rows)
    out += format_number(r.u) + ',' + format_root(r.lambda1) + ',' + format_root(r.lambda2) + ',' +
           format_root(r.lambda3) + '\n';
  return out;
}

bool CsvTable::has(std::string_view name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

std::vector<double> CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] != name) continue;
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& row : rows) col.push_back(row[k]);
    return col;
  }
  throw Error(ErrorCode::InvalidInput, "CSV has no column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto cells = split(line);
    if (first) {
      for (auto c : cells) table.header.emplace_back(c);
      first = false;
      continue;
    }
    if (cells.size() != table.header.size()) throw Error(ErrorCode::InvalidInput, "ragged CSV row");
    std::vector<double> row;
    row.reserve(cells.size());
    for (auto c : cells) row.push_back(parse_number(c));
    table.rows.push_back(std::move(row));
  }
  if (first) throw Error(ErrorCode::InvalidInput, "empty CSV");
  return table;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace ruinkit
