#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "varorder/model.hpp"
#include "varorder/nuts.hpp"
#include "varorder/posterior.hpp"

namespace varorder::io {

/// Numeric table read from disk.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Parses a UTF-8, LF, comma-separated file with one header row. Ragged
/// rows, non-numeric cells, and empty cells raise UsageError naming the
/// 1-based row and column.
Csv read_csv(const std::string& path);

Dataset read_dataset(const std::string& path, double time_step);

/// 17-significant-digit decimal, enough to round-trip any double.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

void write_dataset_csv(const std::string& path, const Dataset& data);

/// One CSV per chain: lp__,divergent__,treedepth__,stepsize__ then one column
/// per parameter; one row per post-warmup draw.
void write_draws_csv(const std::string& path, const ChainDraws& chain,
                     const std::vector<std::string>& param_names);
ChainDraws read_draws_csv(const std::string& path, const std::vector<std::string>& expected_names);

/// Node metadata for graph output: name plus optional 2-D position.
struct RegionInfo {
  std::string name;
  double x = 0.0;
  double y = 0.0;
  bool has_pos = false;
};

/// Region CSV: header `name[,x,y]`, one row per series component.
std::vector<RegionInfo> read_region_csv(const std::string& path);

std::string granger_dot(const std::vector<GrangerEdge>& edges, int m,
                        const std::vector<RegionInfo>& regions);

/// Minimal bar chart; values indexed by the category labels.
std::string svg_bar_chart(const std::vector<double>& values, const std::vector<std::string>& labels,
                          const std::string& title, double y_max);

/// Gaussian-kernel density curves (Silverman bandwidth), one per labeled
/// sample set, on a shared grid.
std::string svg_density_chart(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                              const std::string& title);

/// FNV-1a over a canonical string; used to fingerprint configurations.
std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace varorder::io
