#include "varorder/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "varorder/diagnostics.hpp"
#include "varorder/errors.hpp"
#include "varorder/io.hpp"
#include "varorder/model.hpp"
#include "varorder/nuts.hpp"
#include "varorder/posterior.hpp"
#include "varorder/rng.hpp"
#include "varorder/simulate.hpp"

namespace varorder {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Strict object reader: every key must be consumed, everything else is a
/// config error naming the offending key.
class ConfigReader {
 public:
  ConfigReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw UsageError(where_ + ": expected a JSON object");
  }

  double number(const char* key, double def, double lo = -kInf, double hi = kInf) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw UsageError(where_ + ": key '" + key + "' must be a number");
    double x = v.get<double>();
    if (x < lo || x > hi)
      throw UsageError(where_ + ": key '" + key + "' out of range [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    return x;
  }

  int integer(const char* key, int def, int lo, int hi = std::numeric_limits<int>::max()) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer())
      throw UsageError(where_ + ": key '" + key + "' must be an integer");
    long long x = v.get<long long>();
    if (x < lo || x > hi) throw UsageError(where_ + ": key '" + key + "' out of range");
    return static_cast<int>(x);
  }

  std::uint64_t uinteger(const char* key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0 && !v.is_number_unsigned()))
      throw UsageError(where_ + ": key '" + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const char* key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw UsageError(where_ + ": key '" + key + "' must be a boolean");
    return v.get<bool>();
  }

  std::string str(const char* key, std::string def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) throw UsageError(where_ + ": key '" + key + "' must be a string");
    return v.get<std::string>();
  }

  const json* child(const char* key) {
    if (!has(key)) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw UsageError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  bool has(const char* key) {
    if (j_.contains(key)) {
      seen_.insert(key);
      return true;
    }
    return false;
  }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

struct FitConfig {
  SamplerConfig sampler;
  ModelConfig model;  // sigma prior scale filled in once m is known
  double beta = 0.99;
  double time_step = 1.0;
  double sigma_scale_diag = 1.0;
  double sigma_scale_offdiag = 0.0;
  double sigma_dof = 0.0;  // 0 = m + 4
  bool granger = true;
  bool granger_refit = false;
  bool decompose = true;
  int k_components = 4;
  bool center = true;
  std::string regions;
};

FitConfig parse_fit_config(const json& j, const std::string& where) {
  ConfigReader r(j, where);
  FitConfig fc;
  fc.sampler.seed = r.uinteger("seed", 0);
  fc.model.p_max = r.integer("p_max", 8, 1, 64);
  fc.beta = r.number("beta", 0.99);
  if (!(fc.beta > 0.0 && fc.beta < 1.0)) throw UsageError(where + ": beta must lie in (0, 1)");
  fc.time_step = r.number("time_step", 1.0);
  if (!(fc.time_step > 0.0)) throw UsageError(where + ": time_step must be positive");
  fc.sampler.chains = r.integer("chains", 4, 1, 64);
  fc.sampler.warmup = r.integer("warmup", 1000, 0);
  fc.sampler.samples = r.integer("samples", 4000, 1);
  fc.sampler.target_accept = r.number("target_accept", 0.8);
  if (!(fc.sampler.target_accept > 0.0 && fc.sampler.target_accept < 1.0))
    throw UsageError(where + ": target_accept must lie in (0, 1)");
  fc.sampler.max_treedepth = r.integer("max_treedepth", 10, 1, 20);
  fc.model.mgp.a = r.number("a", 6.0);
  fc.model.mgp.a1 = r.number("a1", 2.5);
  fc.model.mgp.a2 = r.number("a2", 3.0);
  if (fc.model.mgp.a <= 0.0 || fc.model.mgp.a1 <= 0.0 || fc.model.mgp.a2 <= 0.0)
    throw UsageError(where + ": a, a1, a2 must be positive");
  fc.sigma_scale_diag = r.number("sigma_scale_diag", 1.0);
  fc.sigma_scale_offdiag = r.number("sigma_scale_offdiag", 0.0);
  if (fc.sigma_scale_diag <= 0.0) throw UsageError(where + ": sigma_scale_diag must be positive");
  fc.sigma_dof = r.number("sigma_dof", 0.0, 0.0);
  fc.granger = r.boolean("granger", true);
  fc.granger_refit = r.boolean("granger_refit", false);
  fc.decompose = r.boolean("decompose", true);
  fc.k_components = r.integer("k_components", 4, 1, 64);
  fc.center = r.boolean("center", true);
  fc.regions = r.str("regions", "");
  r.finish();
  return fc;
}

json fit_config_json(const FitConfig& fc) {
  json j;
  j["seed"] = fc.sampler.seed;
  j["p_max"] = fc.model.p_max;
  j["beta"] = fc.beta;
  j["time_step"] = fc.time_step;
  j["chains"] = fc.sampler.chains;
  j["warmup"] = fc.sampler.warmup;
  j["samples"] = fc.sampler.samples;
  j["target_accept"] = fc.sampler.target_accept;
  j["max_treedepth"] = fc.sampler.max_treedepth;
  j["a"] = fc.model.mgp.a;
  j["a1"] = fc.model.mgp.a1;
  j["a2"] = fc.model.mgp.a2;
  j["sigma_scale_diag"] = fc.sigma_scale_diag;
  j["sigma_scale_offdiag"] = fc.sigma_scale_offdiag;
  j["sigma_dof"] = fc.sigma_dof;
  j["granger"] = fc.granger;
  j["granger_refit"] = fc.granger_refit;
  j["decompose"] = fc.decompose;
  j["k_components"] = fc.k_components;
  j["center"] = fc.center;
  j["regions"] = fc.regions;
  return j;
}

void apply_sigma_prior(FitConfig& fc, int m) {
  linalg::Matrix scale(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) scale(i, j) = i == j ? fc.sigma_scale_diag : fc.sigma_scale_offdiag;
  fc.model.sigma_prior.scale = scale;
  fc.model.sigma_prior.dof = fc.sigma_dof;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(path + ": invalid JSON (" + e.what() + ")");
  }
  return j;
}

void write_json_file(const fs::path& path, const json& j) {
  io::write_text_file(path.string(), j.dump(2) + "\n");
}

json matrix_to_json(const linalg::Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json matrices_to_json(const std::vector<linalg::Matrix>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back(matrix_to_json(m));
  return arr;
}

// ---------- shared analysis writers ----------

std::vector<std::string> order_labels(int p_max) {
  std::vector<std::string> labels(p_max + 1);
  for (int i = 0; i <= p_max; ++i) labels[i] = std::to_string(i);
  return labels;
}

void write_order_outputs(const fs::path& dir, const OrderPosterior& order, int p_max) {
  json j;
  j["beta"] = order.beta;
  j["threshold"] = order.threshold;
  j["n"] = order.n;
  j["m"] = order.m;
  j["p_max"] = p_max;
  j["pmf"] = order.pmf;
  j["mode"] = order.mode();
  j["modal_mass"] = order.modal_mass();
  write_json_file(dir / "order_pmf.json", j);

  std::ostringstream csv;
  csv << "order,probability\n";
  for (std::size_t i = 0; i < order.pmf.size(); ++i)
    csv << i << "," << io::format_double(order.pmf[i]) << "\n";
  io::write_text_file((dir / "order_pmf.csv").string(), csv.str());

  io::write_text_file((dir / "order_pmf.svg").string(),
                      io::svg_bar_chart(order.pmf, order_labels(p_max), "posterior of effective order",
                                        1.0));
}

void write_granger_outputs(const fs::path& dir, const std::vector<GrangerEdge>& edges, int m,
                           int modal_order, bool refit, const std::string& regions_path) {
  json j;
  j["modal_order"] = modal_order;
  j["refit"] = refit;
  json arr = json::array();
  for (const auto& e : edges) {
    json je;
    je["lag"] = e.lag;
    je["from"] = e.from;
    je["to"] = e.to;
    je["mean"] = e.mean;
    je["weight"] = e.weight;
    je["ci_lo"] = e.ci_lo;
    je["ci_hi"] = e.ci_hi;
    arr.push_back(je);
  }
  j["edges"] = arr;
  write_json_file(dir / "granger.json", j);

  std::vector<io::RegionInfo> regions;
  if (!regions_path.empty()) regions = io::read_region_csv(regions_path);
  io::write_text_file((dir / "granger.dot").string(), io::granger_dot(edges, m, regions));
}

json interval_summary(std::vector<double> values) {
  json j;
  if (values.empty()) {
    j["mean"] = nullptr;
    j["q025"] = nullptr;
    j["q500"] = nullptr;
    j["q975"] = nullptr;
    return j;
  }
  std::sort(values.begin(), values.end());
  double mean = 0.0;
  for (double v : values) mean += v;
  j["mean"] = num_or_null(mean / values.size());
  j["q025"] = num_or_null(quantile_type7(values, 0.025));
  j["q500"] = num_or_null(quantile_type7(values, 0.5));
  j["q975"] = num_or_null(quantile_type7(values, 0.975));
  return j;
}

void write_decomposition_outputs(const fs::path& dir, const DecompositionSummary& summary,
                                 int modal_order) {
  json j;
  j["modal_order"] = modal_order;
  j["k"] = summary.k;
  j["time_step"] = summary.time_step;
  json comps = json::array();
  for (int c = 0; c < summary.k; ++c) {
    json jc;
    jc["index"] = c + 1;
    jc["count"] = summary.moduli[c].size();
    jc["missing"] = summary.missing[c];
    jc["modulus"] = interval_summary(summary.moduli[c]);
    jc["period_samples"] = interval_summary(summary.period_samples[c]);
    std::vector<double> pt(summary.period_samples[c]);
    for (double& v : pt) v *= summary.time_step;
    jc["period_time"] = interval_summary(pt);
    comps.push_back(jc);
  }
  j["components"] = comps;
  write_json_file(dir / "decomposition_summary.json", j);

  std::ostringstream csv;
  csv << "component,draw,modulus,period_samples,period_time\n";
  for (int c = 0; c < summary.k; ++c)
    for (std::size_t t = 0; t < summary.moduli[c].size(); ++t)
      csv << (c + 1) << "," << (t + 1) << "," << io::format_double(summary.moduli[c][t]) << ","
          << io::format_double(summary.period_samples[c][t]) << ","
          << io::format_double(summary.period_samples[c][t] * summary.time_step) << "\n";
  io::write_text_file((dir / "decomposition.csv").string(), csv.str());

  std::vector<std::pair<std::string, std::vector<double>>> mod_series, per_series;
  for (int c = 0; c < summary.k; ++c) {
    std::string label = "component " + std::to_string(c + 1);
    mod_series.emplace_back(label, summary.moduli[c]);
    per_series.emplace_back(label, summary.period_samples[c]);
  }
  io::write_text_file((dir / "moduli.svg").string(),
                      io::svg_density_chart(mod_series, "posterior moduli"));
  io::write_text_file((dir / "periods.svg").string(),
                      io::svg_density_chart(per_series, "posterior periods (samples)"));
}

void write_diagnostics_json(const fs::path& dir, const Diagnostics& diag,
                            const std::vector<std::string>& names) {
  json j;
  j["divergences"] = diag.divergences;
  j["max_treedepth_hits"] = diag.max_depth_hits;
  j["max_rhat"] = num_or_null(diag.max_rhat());
  j["min_ess"] = num_or_null(diag.min_ess());
  json params = json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    json p;
    p["name"] = names[i];
    p["rhat"] = num_or_null(diag.rhat[i]);
    p["ess"] = num_or_null(diag.ess[i]);
    p["constant"] = diag.constant[i] != 0;
    params.push_back(p);
  }
  j["parameters"] = params;
  write_json_file(dir / "diagnostics.json", j);
}

void write_draw_files(const fs::path& dir, const PosteriorDraws& draws,
                      const std::vector<std::string>& names) {
  for (std::size_t c = 0; c < draws.chains.size(); ++c)
    io::write_draws_csv((dir / ("draws_chain" + std::to_string(c + 1) + ".csv")).string(),
                        draws.chains[c], names);
}

/// Granger + decomposition, shared between fit and analyze. Returns the
/// modal order used.
void run_posterior_analyses(const fs::path& dir, const PosteriorDraws& draws, const ParamLayout& lay,
                            const OrderPosterior& order, const FitConfig& fc, bool granger_on,
                            bool decompose_on, int k, const std::string& regions,
                            const std::vector<GrangerEdge>* refit_edges) {
  const int modal = order.mode();
  if (granger_on) {
    std::vector<GrangerEdge> edges;
    bool refit = refit_edges != nullptr;
    if (refit)
      edges = *refit_edges;
    else if (modal >= 1)
      edges = granger_edges(draws, lay, modal);
    write_granger_outputs(dir, edges, lay.m, modal, refit, regions);
  }
  if (decompose_on && modal >= 1) {
    DecompositionSummary summary = decomposition_summary(draws, lay, modal, k, fc.time_step);
    write_decomposition_outputs(dir, summary, modal);
  }
}

struct LoadedRun {
  fs::path dir;
  json manifest;
  FitConfig fc;
  int n = 0;
  int m = 0;
  ParamLayout lay;
  std::vector<std::string> names;
  PosteriorDraws draws;
};

LoadedRun load_run(const std::string& run_dir) {
  LoadedRun run;
  run.dir = run_dir;
  fs::path manifest_path = run.dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw UsageError(run_dir + ": no manifest.json (not a run directory?)");
  run.manifest = read_json_file(manifest_path.string());
  if (!run.manifest.contains("config")) throw UsageError(run_dir + ": manifest has no config block");
  run.fc = parse_fit_config(run.manifest.at("config"), "manifest config");
  run.n = run.manifest.value("n", 0);
  run.m = run.manifest.value("m", 0);
  if (run.n < 1 || run.m < 1) throw UsageError(run_dir + ": manifest missing data dimensions");
  run.lay = ParamLayout{run.m, run.fc.model.p_max};
  run.names = run.lay.parameter_names();

  run.draws.dim = run.lay.dim();
  for (int c = 1; c <= run.fc.sampler.chains; ++c) {
    fs::path p = run.dir / ("draws_chain" + std::to_string(c) + ".csv");
    if (!fs::exists(p)) throw UsageError(run_dir + ": missing draws file " + p.filename().string());
    run.draws.chains.push_back(io::read_draws_csv(p.string(), run.names));
  }
  run.draws.samples_per_chain = static_cast<int>(run.draws.chains.front().lp.size());
  for (const auto& c : run.draws.chains)
    if (static_cast<int>(c.lp.size()) != run.draws.samples_per_chain)
      throw UsageError(run_dir + ": chains have unequal draw counts");
  return run;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const json::exception*>(&e)) return kExitUsage;
  return kExitNumerical;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
}

}  // namespace

int cmd_simulate(const std::string& spec_path, const std::string& out_dir) {
  return guarded([&]() -> int {
    json j = read_json_file(spec_path);
    ConfigReader r(j, spec_path);
    SimSpec spec;
    spec.m = r.integer("m", 1, 1, 64);
    spec.p = r.integer("p", 1, 1, 64);
    spec.n = r.integer("n", 100, 1);
    spec.seed = r.uinteger("seed", 0);
    spec.burn_in = r.integer("burn_in", -1, -1);
    spec.time_step = r.number("time_step", 1.0);
    if (!(spec.time_step > 0.0)) throw UsageError(spec_path + ": time_step must be positive");
    r.finish();
    if (spec.n < spec.p) throw UsageError(spec_path + ": n must be at least p");

    GroundTruth truth = random_model(spec.m, spec.p, derive_seed(spec.seed, 0));
    Dataset data = simulate(truth.model, spec.n, derive_seed(spec.seed, 1), spec.burn_in,
                            spec.time_step);

    fs::create_directories(out_dir);
    io::write_dataset_csv((fs::path(out_dir) / "data.csv").string(), data);
    json t;
    t["m"] = spec.m;
    t["p"] = spec.p;
    t["n"] = spec.n;
    t["seed"] = spec.seed;
    t["time_step"] = spec.time_step;
    t["a"] = matrices_to_json(truth.a);
    t["pacf"] = matrices_to_json(truth.pacf);
    t["phi"] = matrices_to_json(truth.model.phi);
    t["gamma"] = matrices_to_json(truth.model.gamma);
    t["sigma"] = matrix_to_json(truth.model.sigma);
    t["spectral_radius"] = check_stationary(truth.model.phi).spectral_radius;
    write_json_file(fs::path(out_dir) / "truth.json", t);
    return kExitOk;
  });
}

int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out_dir) {
  return guarded([&]() -> int {
    json cfg_json = read_json_file(config_path);
    FitConfig fc = parse_fit_config(cfg_json, config_path);
    Dataset data = io::read_dataset(data_path, fc.time_step);
    if (data.n <= fc.model.p_max)
      throw UsageError(data_path + ": need more than p_max=" + std::to_string(fc.model.p_max) +
                       " rows, found " + std::to_string(data.n));
    apply_sigma_prior(fc, data.m);

    std::vector<double> means(data.m, 0.0);
    if (fc.center) {
      for (int j = 0; j < data.m; ++j) {
        for (int t = 0; t < data.n; ++t) means[j] += data.at(t, j);
        means[j] /= data.n;
        for (int t = 0; t < data.n; ++t) data.y[static_cast<std::size_t>(t) * data.m + j] -= means[j];
      }
    }

    ParamLayout lay{data.m, fc.model.p_max};
    auto target = make_target(data, fc.model);

    auto t0 = std::chrono::steady_clock::now();
    PosteriorDraws draws = sample(target, lay.dim(), fc.sampler);
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::cerr << "sampling took " << dt.count() << " s\n";

    fs::path dir(out_dir);
    fs::create_directories(dir);
    std::vector<std::string> names = lay.parameter_names();
    write_draw_files(dir, draws, names);

    if (fc.sampler.chains >= 2 && fc.sampler.samples >= 4)
      write_diagnostics_json(dir, diagnose(draws), names);

    OrderPosterior order = order_posterior(draws, lay, data.n, fc.beta);
    write_order_outputs(dir, order, fc.model.p_max);

    // Optional refit at the modal order for the causality graph.
    std::vector<GrangerEdge> refit_edges;
    bool have_refit = false;
    const int modal = order.mode();
    if (fc.granger && fc.granger_refit && modal >= 1) {
      ModelConfig refit_model = fc.model;
      refit_model.p_max = modal;
      SamplerConfig refit_sampler = fc.sampler;
      refit_sampler.seed = derive_seed(fc.sampler.seed, 0x9e37);
      ParamLayout refit_lay{data.m, modal};
      auto refit_target = make_target(data, refit_model);
      PosteriorDraws refit_draws = sample(refit_target, refit_lay.dim(), refit_sampler);
      refit_edges = granger_edges(refit_draws, refit_lay, modal);
      have_refit = true;
    }
    run_posterior_analyses(dir, draws, lay, order, fc, fc.granger, fc.decompose, fc.k_components,
                           fc.regions, have_refit ? &refit_edges : nullptr);

    json manifest;
    json cfg = fit_config_json(fc);
    manifest["command"] = "fit";
    manifest["config"] = cfg;
    manifest["config_hash"] = io::hex64(io::fnv1a64(cfg.dump()));
    manifest["data_path"] = data_path;
    manifest["n"] = data.n;
    manifest["m"] = data.m;
    manifest["column_names"] = data.names;
    manifest["column_means"] = means;
    manifest["seed"] = fc.sampler.seed;
    manifest["versions"] = {{"varorder", kVersion}, {"draws_format", kDrawsFormatVersion}};
    write_json_file(dir / "manifest.json", manifest);
    return kExitOk;
  });
}

int cmd_analyze(const std::string& run_dir, const AnalyzeOptions& options) {
  return guarded([&]() -> int {
    LoadedRun run = load_run(run_dir);
    double beta = options.beta > 0.0 ? options.beta : run.fc.beta;
    if (!(beta > 0.0 && beta < 1.0)) throw UsageError("beta must lie in (0, 1)");
    int k = options.k_components > 0 ? options.k_components : run.fc.k_components;
    std::string regions = !options.regions_path.empty() ? options.regions_path : run.fc.regions;

    OrderPosterior order = order_posterior(run.draws, run.lay, run.n, beta);
    write_order_outputs(run.dir, order, run.fc.model.p_max);
    FitConfig fc = run.fc;
    fc.beta = beta;
    run_posterior_analyses(run.dir, run.draws, run.lay, order, fc, options.granger,
                           options.decompose, k, regions, nullptr);
    return kExitOk;
  });
}

int cmd_diagnose(const std::string& run_dir) {
  return guarded([&]() -> int {
    LoadedRun run = load_run(run_dir);
    if (run.draws.chains.size() < 2 || run.draws.samples_per_chain < 4)
      throw UsageError(run_dir + ": diagnostics need at least 2 chains with 4 draws each");
    Diagnostics diag = diagnose(run.draws);
    write_diagnostics_json(run.dir, diag, run.names);
    std::cout << "chains " << run.draws.chains.size() << ", draws/chain "
              << run.draws.samples_per_chain << ", max R-hat " << diag.max_rhat() << ", min ESS "
              << diag.min_ess() << ", divergences " << diag.divergences << "\n";
    return kExitOk;
  });
}

int cmd_study(const std::string& config_path, const std::string& out_dir) {
  return guarded([&]() -> int {
    json j = read_json_file(config_path);
    ConfigReader r(j, config_path);
    StudyConfig study;
    study.seed = r.uinteger("seed", 0);
    study.beta = r.number("beta", 0.99);
    if (!(study.beta > 0.0 && study.beta < 1.0))
      throw UsageError(config_path + ": beta must lie in (0, 1)");

    FitConfig fit_defaults;
    if (const json* sampler = r.child("sampler")) {
      ConfigReader sr(*sampler, config_path + " sampler");
      fit_defaults.sampler.chains = sr.integer("chains", 4, 1, 64);
      fit_defaults.sampler.warmup = sr.integer("warmup", 1000, 0);
      fit_defaults.sampler.samples = sr.integer("samples", 4000, 1);
      fit_defaults.sampler.target_accept = sr.number("target_accept", 0.8);
      fit_defaults.sampler.max_treedepth = sr.integer("max_treedepth", 10, 1, 20);
      sr.finish();
    }
    if (const json* model = r.child("model")) {
      ConfigReader mr(*model, config_path + " model");
      fit_defaults.model.p_max = mr.integer("p_max", 8, 1, 64);
      fit_defaults.model.mgp.a = mr.number("a", 6.0);
      fit_defaults.model.mgp.a1 = mr.number("a1", 2.5);
      fit_defaults.model.mgp.a2 = mr.number("a2", 3.0);
      fit_defaults.sigma_scale_diag = mr.number("sigma_scale_diag", 1.0);
      fit_defaults.sigma_scale_offdiag = mr.number("sigma_scale_offdiag", 0.0);
      fit_defaults.sigma_dof = mr.number("sigma_dof", 0.0, 0.0);
      mr.finish();
    }
    study.sampler = fit_defaults.sampler;
    study.model = fit_defaults.model;
    study.model.sigma_prior.dof = fit_defaults.sigma_dof;
    study.sigma_scale_diag = fit_defaults.sigma_scale_diag;
    study.sigma_scale_offdiag = fit_defaults.sigma_scale_offdiag;

    const json* cells = r.child("cells");
    if (cells == nullptr || !cells->is_array() || cells->empty())
      throw UsageError(config_path + ": 'cells' must be a non-empty array");
    for (std::size_t i = 0; i < cells->size(); ++i) {
      ConfigReader cr((*cells)[i], config_path + " cells[" + std::to_string(i) + "]");
      SimSpec spec;
      spec.m = cr.integer("m", 1, 1, 64);
      spec.p = cr.integer("p", 1, 1, 64);
      spec.n = cr.integer("n", 100, 2);
      spec.burn_in = cr.integer("burn_in", -1, -1);
      spec.time_step = cr.number("time_step", 1.0);
      cr.finish();
      if (spec.n < spec.p)
        throw UsageError(config_path + ": cell " + std::to_string(i) + " has n < p");
      study.cells.push_back(spec);
    }
    r.finish();

    fs::path dir(out_dir);
    fs::create_directories(dir);
    auto cell_dir = [&](std::size_t i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "cell_%03zu", i + 1);
      return dir / buf;
    };

    auto sink = [&](std::size_t cell, const Dataset& data, const GroundTruth& truth,
                    const PosteriorDraws& draws, const StudyCellResult& result) {
      fs::path cd = cell_dir(cell);
      fs::create_directories(cd);
      io::write_dataset_csv((cd / "data.csv").string(), data);
      json t;
      t["phi"] = matrices_to_json(truth.model.phi);
      t["sigma"] = matrix_to_json(truth.model.sigma);
      t["pacf"] = matrices_to_json(truth.pacf);
      t["a"] = matrices_to_json(truth.a);
      write_json_file(cd / "truth.json", t);
      ParamLayout lay{result.spec.m, study.model.p_max};
      write_draw_files(cd, draws, lay.parameter_names());
      write_order_outputs(cd, result.order, study.model.p_max);
    };

    auto t0 = std::chrono::steady_clock::now();
    StudyReport report = run_study(study, sink);
    std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::cerr << "study took " << dt.count() << " s\n";

    json rep;
    rep["seed"] = study.seed;
    rep["beta"] = study.beta;
    rep["failures"] = report.failures;
    json jcells = json::array();
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      const StudyCellResult& res = report.cells[i];
      json c;
      c["cell"] = i + 1;
      c["m"] = res.spec.m;
      c["p"] = res.spec.p;
      c["n"] = res.spec.n;
      c["ok"] = res.ok;
      if (!res.ok) {
        c["error"] = res.error;
      } else {
        c["modal_order"] = res.modal_order;
        c["modal_mass"] = res.modal_mass;
        c["mass_at_true"] = res.mass_at_true;
        c["max_rhat"] = num_or_null(res.max_rhat);
        c["min_ess"] = num_or_null(res.min_ess);
        c["divergences"] = res.divergences;
        c["pmf"] = res.order.pmf;
      }
      jcells.push_back(c);
    }
    rep["cells"] = jcells;
    write_json_file(dir / "study_report.json", rep);

    std::ostringstream csv;
    csv << "cell,m,p,n,ok,modal_order,modal_mass,mass_at_true,max_rhat,min_ess,divergences\n";
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
      const StudyCellResult& res = report.cells[i];
      csv << (i + 1) << "," << res.spec.m << "," << res.spec.p << "," << res.spec.n << ","
          << (res.ok ? 1 : 0) << ",";
      if (res.ok)
        csv << res.modal_order << "," << io::format_double(res.modal_mass) << ","
            << io::format_double(res.mass_at_true) << "," << io::format_double(res.max_rhat) << ","
            << io::format_double(res.min_ess) << "," << res.divergences;
      else
        csv << ",,,,,";
      csv << "\n";
    }
    io::write_text_file((dir / "study_summary.csv").string(), csv.str());

    return report.failures > 0 ? kExitPartialFailure : kExitOk;
  });
}

}  // namespace varorder
