#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ruinkit/asymptotics.hpp"
#include "ruinkit/mc_engine.hpp"
#include "ruinkit/solver.hpp"

namespace ruinkit {

// Shortest decimal that round-trips to the same double; locale independent.
std::string format_number(double v);

// u,p_hat,stderr,ci_lo,ci_hi,censored_fraction,n_paths,seed
std::string mc_table_csv(std::span<const MCEstimate> rows);

// u,phi,g,i1,i2,residual_ide,residual_ode3
std::string solution_csv(const GridSolution& solution);

// u,lambda1,lambda2,lambda3. A root with a non-zero imaginary part is written
// as "re+imi" / "re-imi".
std::string roots_csv(std::span<const CharRoots> rows);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  bool has(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;  // throws INVALID_INPUT if absent
};

// Numeric CSV with one header line.
CsvTable parse_csv(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace ruinkit
