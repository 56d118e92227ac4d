#include "varorder/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "varorder/errors.hpp"

namespace varorder::io {

namespace {

// Comma splitting with RFC 4180 quoting: cells may be wrapped in double
// quotes, and a doubled quote inside a quoted cell is a literal quote.
// Cells never span lines.
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, const std::string& path, std::size_t row, std::size_t col) {
  std::string cell = trim(raw);
  if (cell.empty())
    throw UsageError(path + ": missing value at row " + std::to_string(row) + ", column " +
                     std::to_string(col));
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + cell.size() || !std::isfinite(v))
    throw UsageError(path + ": cannot parse '" + cell + "' as a number at row " +
                     std::to_string(row) + ", column " + std::to_string(col));
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Csv read_csv(const std::string& path) {
  std::string content = read_file(path);
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) content.erase(0, 3);

  Csv csv;
  std::istringstream in(content);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    auto cells = split_line(line);
    if (row == 1) {
      for (auto& c : cells) csv.header.push_back(trim(c));
      bool all_empty = true;
      for (const auto& h : csv.header) all_empty = all_empty && h.empty();
      if (all_empty) throw UsageError(path + ": empty header row");
      continue;
    }
    if (cells.size() != csv.header.size())
      throw UsageError(path + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(csv.header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) vals[c] = parse_cell(cells[c], path, row, c + 1);
    csv.rows.push_back(std::move(vals));
  }
  if (csv.header.empty()) throw UsageError(path + ": file is empty");
  return csv;
}

Dataset read_dataset(const std::string& path, double time_step) {
  Csv csv = read_csv(path);
  if (csv.rows.empty()) throw UsageError(path + ": no data rows");
  Dataset data;
  data.m = static_cast<int>(csv.header.size());
  data.n = static_cast<int>(csv.rows.size());
  data.time_step = time_step;
  data.names = csv.header;
  data.y.reserve(static_cast<std::size_t>(data.n) * data.m);
  for (const auto& r : csv.rows) data.y.insert(data.y.end(), r.begin(), r.end());
  return data;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << content;
  if (!out) throw UsageError("write failed for " + path);
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ostringstream out;
  for (int j = 0; j < data.m; ++j) out << (j ? "," : "") << csv_quote(data.names[j]);
  out << "\n";
  for (int t = 0; t < data.n; ++t) {
    for (int j = 0; j < data.m; ++j) out << (j ? "," : "") << format_double(data.at(t, j));
    out << "\n";
  }
  write_text_file(path, out.str());
}

void write_draws_csv(const std::string& path, const ChainDraws& chain,
                     const std::vector<std::string>& param_names) {
  std::ostringstream out;
  out << "lp__,divergent__,treedepth__,stepsize__";
  for (const auto& n : param_names) out << "," << csv_quote(n);
  out << "\n";
  const int dim = static_cast<int>(param_names.size());
  const int nd = static_cast<int>(chain.lp.size());
  for (int t = 0; t < nd; ++t) {
    out << format_double(chain.lp[t]) << "," << static_cast<int>(chain.divergent[t]) << ","
        << chain.treedepth[t] << "," << format_double(chain.stepsize[t]);
    for (int d = 0; d < dim; ++d) out << "," << format_double(chain.value(t, d, dim));
    out << "\n";
  }
  write_text_file(path, out.str());
}

ChainDraws read_draws_csv(const std::string& path, const std::vector<std::string>& expected_names) {
  Csv csv = read_csv(path);
  const std::size_t meta = 4;
  if (csv.header.size() != meta + expected_names.size())
    throw UsageError(path + ": expected " + std::to_string(meta + expected_names.size()) +
                     " columns, found " + std::to_string(csv.header.size()));
  const char* fixed[] = {"lp__", "divergent__", "treedepth__", "stepsize__"};
  for (std::size_t i = 0; i < meta; ++i)
    if (csv.header[i] != fixed[i])
      throw UsageError(path + ": column " + std::to_string(i + 1) + " must be " + fixed[i]);
  for (std::size_t i = 0; i < expected_names.size(); ++i)
    if (csv.header[meta + i] != expected_names[i])
      throw UsageError(path + ": parameter column mismatch at " + csv.header[meta + i] +
                       " (expected " + expected_names[i] + ")");
  ChainDraws chain;
  for (const auto& r : csv.rows) {
    chain.lp.push_back(r[0]);
    chain.divergent.push_back(r[1] != 0.0 ? 1 : 0);
    if (r[1] != 0.0) ++chain.divergences;
    chain.treedepth.push_back(static_cast<int>(r[2]));
    chain.stepsize.push_back(r[3]);
    chain.draws.insert(chain.draws.end(), r.begin() + meta, r.end());
  }
  if (!chain.stepsize.empty()) chain.final_stepsize = chain.stepsize.back();
  return chain;
}

std::vector<RegionInfo> read_region_csv(const std::string& path) {
  std::string content = read_file(path);
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) content.erase(0, 3);
  std::istringstream in(content);
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path + ": file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);
  if (header.empty() || trim(header[0]) != "name")
    throw UsageError(path + ": first header column must be 'name'");
  bool with_pos = header.size() >= 3;
  std::vector<RegionInfo> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw UsageError(path + ": row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    RegionInfo info;
    info.name = trim(cells[0]);
    if (info.name.empty())
      throw UsageError(path + ": missing region name at row " + std::to_string(row));
    if (with_pos) {
      info.x = parse_cell(cells[1], path, row, 2);
      info.y = parse_cell(cells[2], path, row, 3);
      info.has_pos = true;
    }
    out.push_back(std::move(info));
  }
  return out;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string fmt_fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string granger_dot(const std::vector<GrangerEdge>& edges, int m,
                        const std::vector<RegionInfo>& regions) {
  if (!regions.empty() && static_cast<int>(regions.size()) < m)
    throw UsageError("region metadata has fewer rows than series components");
  double max_w = 0.0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);
  std::ostringstream out;
  out << "digraph granger {\n";
  out << "  node [shape=circle fontsize=11];\n";
  for (int i = 0; i < m; ++i) {
    std::string name = regions.empty() ? "y" + std::to_string(i + 1) : regions[i].name;
    out << "  n" << (i + 1) << " [label=\"" << dot_escape(name) << "\"";
    if (!regions.empty() && regions[i].has_pos)
      out << " pos=\"" << fmt_fixed(regions[i].x, 3) << "," << fmt_fixed(regions[i].y, 3) << "!\"";
    out << "];\n";
  }
  for (const auto& e : edges) {
    double pen = max_w > 0.0 ? 0.5 + 4.0 * e.weight / max_w : 1.0;
    out << "  n" << e.from << " -> n" << e.to << " [label=\"s=" << e.lag << "\" penwidth=\""
        << fmt_fixed(pen, 2) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

namespace {

/// Shared minimal-SVG scaffolding. Fixed canvas, no external styling.
constexpr int kWidth = 640, kHeight = 420;
constexpr int kLeft = 64, kRight = 20, kTop = 36, kBottom = 52;

std::string svg_open(const std::string& title) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << title << "</text>\n";
  return out.str();
}

void svg_axes(std::ostringstream& out) {
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
}

}  // namespace

std::string svg_bar_chart(const std::vector<double>& values, const std::vector<std::string>& labels,
                          const std::string& title, double y_max) {
  if (values.size() != labels.size()) throw UsageError("bar chart: values/labels size mismatch");
  std::ostringstream out;
  out << svg_open(title);
  svg_axes(out);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const std::size_t n = values.size();
  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    double y = kHeight - kBottom - frac * plot_h;
    out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << fmt_fixed(y, 1) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fmt_fixed(y, 1) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt_fixed(y + 4, 1)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_fixed(frac * y_max, 2) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    double slot = plot_w / n;
    double bw = slot * 0.7;
    double x = kLeft + i * slot + 0.15 * slot;
    double h = y_max > 0.0 ? std::min(1.0, values[i] / y_max) * plot_h : 0.0;
    double y = kHeight - kBottom - h;
    out << "<rect x=\"" << fmt_fixed(x, 1) << "\" y=\"" << fmt_fixed(y, 1) << "\" width=\""
        << fmt_fixed(bw, 1) << "\" height=\"" << fmt_fixed(h, 1) << "\" fill=\"#4878a8\"/>\n";
    out << "<text x=\"" << fmt_fixed(x + bw / 2, 1) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << labels[i]
        << "</text>\n";
    out << "<text x=\"" << fmt_fixed(x + bw / 2, 1) << "\" y=\"" << fmt_fixed(y - 4, 1)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
        << fmt_fixed(values[i], 3) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

double silverman_bandwidth(std::vector<double> sorted) {
  const std::size_t n = sorted.size();
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  double iqr = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1.0;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace

std::string svg_density_chart(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                              const std::string& title) {
  static const char* palette[] = {"#4878a8", "#b3545e", "#5b9162", "#9069a8", "#c98a3d", "#55959f"};
  std::ostringstream out;
  out << svg_open(title);
  svg_axes(out);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  struct Curve {
    std::vector<double> x, y;
  };
  std::vector<Curve> curves;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, y_max = 0.0;
  std::vector<std::pair<std::vector<double>, double>> prepared;  // sorted samples + bandwidth
  for (const auto& [label, raw] : series) {
    std::vector<double> s;
    s.reserve(raw.size());
    for (double v : raw)
      if (std::isfinite(v)) s.push_back(v);
    if (s.empty()) {
      prepared.emplace_back(std::move(s), 0.0);
      continue;
    }
    std::sort(s.begin(), s.end());
    double h = silverman_bandwidth(s);
    if (h <= 0.0) h = 1.0;
    lo = std::min(lo, s.front() - 3.0 * h);
    hi = std::max(hi, s.back() + 3.0 * h);
    prepared.emplace_back(std::move(s), h);
  }
  if (!(hi > lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const int grid = 200;
  for (auto& [s, h] : prepared) {
    Curve c;
    if (s.empty()) {
      curves.push_back(c);
      continue;
    }
    c.x.resize(grid);
    c.y.resize(grid);
    for (int g = 0; g < grid; ++g) {
      double x = lo + (hi - lo) * g / (grid - 1);
      double dens = 0.0;
      for (double v : s) {
        double z = (x - v) / h;
        dens += std::exp(-0.5 * z * z);
      }
      dens /= s.size() * h * std::sqrt(2.0 * 3.14159265358979323846);
      c.x[g] = x;
      c.y[g] = dens;
      y_max = std::max(y_max, dens);
    }
    curves.push_back(std::move(c));
  }
  if (y_max <= 0.0) y_max = 1.0;

  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    double x = kLeft + frac * plot_w;
    out << "<line x1=\"" << fmt_fixed(x, 1) << "\" y1=\"" << kHeight - kBottom << "\" x2=\""
        << fmt_fixed(x, 1) << "\" y2=\"" << kHeight - kBottom + 4 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt_fixed(x, 1) << "\" y=\"" << kHeight - kBottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_fixed(lo + frac * (hi - lo), 2) << "</text>\n";
  }

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    if (c.x.empty()) continue;
    const char* color = palette[k % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (int g = 0; g < grid; ++g) {
      double px = kLeft + (c.x[g] - lo) / (hi - lo) * plot_w;
      double py = kHeight - kBottom - c.y[g] / y_max * plot_h;
      out << fmt_fixed(px, 1) << "," << fmt_fixed(py, 1);
      if (g + 1 < grid) out << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << kTop + 16 + 16 * k
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color
        << "\">" << series[k].first << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace varorder::io
