#include "varorder/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "varorder/errors.hpp"
#include "varorder/rng.hpp"

namespace varorder {

using linalg::Matrix;

GroundTruth random_model(int m, int p, std::uint64_t seed, const Matrix& sigma) {
  if (m < 1 || p < 1) throw UsageError("random_model: m and p must be positive");
  Rng rng(seed);
  GroundTruth gt;
  gt.a.assign(p, Matrix(m, m));
  for (int s = 0; s < p; ++s)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) gt.a[s](i, j) = rng.normal();
  gt.pacf = a_to_pacf(gt.a);
  Matrix err = sigma.rows() == m ? sigma : Matrix::identity(m);
  gt.model = pacf_to_var(err, gt.pacf).first;
  return gt;
}

Dataset simulate(const VarModel& model, int n, std::uint64_t seed, int burn_in, double time_step) {
  const int m = model.dim();
  const int p = model.order();
  if (n < p) throw UsageError("simulate: n must be at least the model order");

  Dataset data;
  data.n = n;
  data.m = m;
  data.time_step = time_step;
  data.y.assign(static_cast<std::size_t>(n) * m, 0.0);
  data.names.reserve(m);
  for (int j = 0; j < m; ++j) data.names.push_back("y" + std::to_string(j + 1));

  Rng rng(seed);
  Matrix chol_sigma = linalg::cholesky(model.sigma);
  auto step_from = [&](auto&& value_at, int t, int i) {
    double acc = 0.0;
    for (int j = 0; j < p; ++j)
      for (int k = 0; k < m; ++k) acc += model.phi[j](i, k) * value_at(t - 1 - j, k);
    return acc;
  };
  auto add_noise = [&](double* row) {
    for (int i = 0; i < m; ++i) {
      double z = rng.normal();
      for (int k = i; k < m; ++k) row[k] += chol_sigma(k, i) * z;
    }
  };

  if (burn_in < 0 && p > 0) {
    // Joint draw of the first p values from the stacked stationary law,
    // newest block first.
    Matrix g = build_initial_variance(model, p);
    Matrix chol_g = linalg::cholesky(g);
    const int d = m * p;
    std::vector<double> z(d), x(d, 0.0);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) x[i] += chol_g(i, j) * z[j];
    for (int b = 0; b < p; ++b)
      for (int j = 0; j < m; ++j) data.y[static_cast<std::size_t>(p - 1 - b) * m + j] = x[b * m + j];
    for (int t = p; t < n; ++t) {
      double* row = &data.y[static_cast<std::size_t>(t) * m];
      for (int i = 0; i < m; ++i)
        row[i] = step_from([&](int tt, int k) { return data.at(tt, k); }, t, i);
      add_noise(row);
    }
    return data;
  }

  // Burn-in path: zero history, simulate burn_in + n steps, keep the tail.
  const int burn = std::max(burn_in, 0);
  std::vector<double> buf(static_cast<std::size_t>(burn + n) * m, 0.0);
  auto buf_at = [&](int t, int k) { return t < 0 ? 0.0 : buf[static_cast<std::size_t>(t) * m + k]; };
  for (int t = 0; t < burn + n; ++t) {
    double* row = &buf[static_cast<std::size_t>(t) * m];
    for (int i = 0; i < m; ++i) row[i] = step_from(buf_at, t, i);
    add_noise(row);
  }
  std::copy(buf.begin() + static_cast<std::size_t>(burn) * m, buf.end(), data.y.begin());
  return data;
}

StudyReport run_study(const StudyConfig& cfg, const CellSink& sink) {
  StudyReport report;
  report.cells.reserve(cfg.cells.size());
  for (std::size_t cell = 0; cell < cfg.cells.size(); ++cell) {
    StudyCellResult res;
    res.spec = cfg.cells[cell];
    try {
      std::uint64_t cell_seed = derive_seed(cfg.seed, cell);
      GroundTruth truth = random_model(res.spec.m, res.spec.p, derive_seed(cell_seed, 0),
                                       res.spec.sigma);
      Dataset data = simulate(truth.model, res.spec.n, derive_seed(cell_seed, 1), res.spec.burn_in,
                              res.spec.time_step);
      // Columns are mean-centered exactly as the CLI does for real data.
      for (int j = 0; j < data.m; ++j) {
        double mean = 0.0;
        for (int t = 0; t < data.n; ++t) mean += data.at(t, j);
        mean /= data.n;
        for (int t = 0; t < data.n; ++t) data.y[static_cast<std::size_t>(t) * data.m + j] -= mean;
      }

      SamplerConfig sampler = cfg.sampler;
      sampler.seed = derive_seed(cell_seed, 2);
      ModelConfig model_cfg = cfg.model;
      if (model_cfg.sigma_prior.scale.rows() != data.m) {
        linalg::Matrix scale(data.m, data.m);
        for (int i = 0; i < data.m; ++i)
          for (int j = 0; j < data.m; ++j)
            scale(i, j) = i == j ? cfg.sigma_scale_diag : cfg.sigma_scale_offdiag;
        model_cfg.sigma_prior.scale = scale;
      }
      ParamLayout lay{data.m, model_cfg.p_max};
      auto target = make_target(data, model_cfg);
      PosteriorDraws draws = sample(target, lay.dim(), sampler);

      res.order = order_posterior(draws, lay, data.n, cfg.beta);
      res.modal_order = res.order.mode();
      res.modal_mass = res.order.modal_mass();
      res.mass_at_true =
          res.spec.p <= model_cfg.p_max ? res.order.pmf[static_cast<std::size_t>(res.spec.p)] : 0.0;
      if (sampler.chains >= 2 && sampler.samples >= 4) {
        Diagnostics diag = diagnose(draws);
        res.max_rhat = diag.max_rhat();
        res.min_ess = diag.min_ess();
        res.divergences = diag.divergences;
      }
      res.ok = true;
      if (sink) sink(cell, data, truth, draws, res);
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
      ++report.failures;
    }
    report.cells.push_back(std::move(res));
  }
  return report;
}

}  // namespace varorder
