#include "varorder/model.hpp"

#include <memory>

namespace varorder {

std::vector<std::string> ParamLayout::parameter_names() const {
  std::vector<std::string> names(dim());
  auto sij = [](const char* base, int s, int i, int j) {
    return std::string(base) + "[" + std::to_string(s + 1) + "," + std::to_string(i + 1) + "," +
           std::to_string(j + 1) + "]";
  };
  for (int s = 0; s < p_max; ++s)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        names[a_index(s, i, j)] = sij("a", s, i, j);
        names[lambda_index(s, i, j)] = sij("log_lambda", s, i, j);
      }
  for (int s = 0; s < p_max; ++s) names[delta_index(s)] = "log_delta[" + std::to_string(s + 1) + "]";
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j)
      names[chol_index(i, j)] = "L[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
  return names;
}

std::vector<double> pack_params(const UnpackedParams<double>& params, const ParamLayout& lay) {
  std::vector<double> theta(lay.dim());
  for (int s = 0; s < lay.p_max; ++s)
    for (int i = 0; i < lay.m; ++i)
      for (int j = 0; j < lay.m; ++j) {
        theta[lay.a_index(s, i, j)] = params.a[s](i, j);
        theta[lay.lambda_index(s, i, j)] = params.log_lambda[s](i, j);
      }
  for (int s = 0; s < lay.p_max; ++s) theta[lay.delta_index(s)] = params.log_delta[s];
  for (int i = 0; i < lay.m; ++i)
    for (int j = 0; j <= i; ++j)
      theta[lay.chol_index(i, j)] =
          (i == j) ? std::log(params.chol_sigma(i, j)) : params.chol_sigma(i, j);
  return theta;
}

double log_prior_mgp(std::span<const double> theta, int m, int p_max, const MgpHyperParams& h) {
  ParamLayout lay{m, p_max};
  ModelConfig cfg;
  cfg.p_max = p_max;
  cfg.mgp = h;
  LogDensityParts<double> parts;
  auto params = unpack_params(theta, lay);
  model_detail::accumulate_prior(params, lay, cfg, parts);
  return parts.prior_a + parts.prior_lambda + parts.prior_delta;
}

double log_prior_sigma(std::span<const double> theta, int m, int p_max, const SigmaPrior& prior) {
  ParamLayout lay{m, p_max};
  auto params = unpack_params(theta, lay);
  return inv_wishart_logpdf_chol(params.chol_sigma, prior.scale_for(m), prior.dof_for(m));
}

double log_likelihood(std::span<const double> theta, const Dataset& data, int p_max) {
  if (data.n < p_max)
    throw UsageError("log_likelihood: need at least p_max=" + std::to_string(p_max) +
                     " observations, got " + std::to_string(data.n));
  ParamLayout lay{data.m, p_max};
  LogDensityParts<double> parts;
  auto params = unpack_params(theta, lay);
  model_detail::accumulate_likelihood(params, data, lay, parts);
  return parts.valid ? parts.likelihood : -std::numeric_limits<double>::infinity();
}

double log_posterior(std::span<const double> theta, const Dataset& data, const ModelConfig& cfg) {
  return log_posterior_parts(theta, data, cfg).total();
}

TargetDensity make_target(const Dataset& data, const ModelConfig& cfg) {
  if (cfg.likelihood_enabled && data.n < cfg.p_max)
    throw UsageError("make_target: need at least p_max=" + std::to_string(cfg.p_max) +
                     " observations, got " + std::to_string(data.n));
  // One reusable tape per target; chains each build their own target.
  auto ctx = std::make_shared<ad::GradientContext>();
  return [ctx, data, cfg](std::span<const double> x, std::span<double> grad) -> double {
    double v = ctx->value_and_gradient(
        [&data, &cfg](std::span<const ad::Var> theta) {
          return log_posterior_parts(theta, data, cfg).total();
        },
        x, grad);
    if (!std::isfinite(v)) std::fill(grad.begin(), grad.end(), 0.0);
    return v;
  };
}

}  // namespace varorder
