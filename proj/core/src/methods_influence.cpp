#include <cmath>

#include "ulbench/unlearn.hpp"

namespace ulbench {

// Single closed-form step along the summed forget-set gradient:
//   theta_u = theta_o + tau * sum_{z in D_f} grad l(z; theta_o)
UnlearnResult influence_first_order(const UnlearnContext& ctx) {
  ctx.check();
  const double tau = ctx.param("tau");
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "first_order";
  if (tau == 0.0 || ctx.plan->forget_indices.empty()) return res;

  const auto batch = make_batch(*ctx.dataset, ctx.plan->forget_indices);
  std::vector<float> g;
  ce_batch_gradient(ctx.original->arch, ctx.original->params, batch, g,
                    /*mean=*/false);
  for (std::size_t j = 0; j < g.size(); ++j)
    res.model.params[j] += static_cast<float>(tau * static_cast<double>(g[j]));
  return res;
}

CgResult cg_solve_hessian(const Arch& arch, const std::vector<double>& params,
                          const Batch<double>& batch, const std::vector<double>& b,
                          double damping, int max_iters, double tol) {
  const std::size_t np = arch.param_count();
  if (b.size() != np) throw Error("cg: rhs length mismatch");
  const auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    ce_hvp(arch, params, batch, v, out, /*mean=*/true);
    for (std::size_t j = 0; j < np; ++j) out[j] += damping * v[j];
  };

  CgResult res;
  res.x.assign(np, 0.0);
  std::vector<double> r = b, p = b, ap(np);
  double rr = 0.0, bb = 0.0;
  for (std::size_t j = 0; j < np; ++j) {
    rr += r[j] * r[j];
    bb += b[j] * b[j];
  }
  if (bb == 0.0) {
    res.converged = true;
    return res;
  }
  const double stop = tol * tol * bb;
  for (int it = 0; it < max_iters; ++it) {
    if (rr <= stop) {
      res.converged = true;
      break;
    }
    apply(p, ap);
    double pap = 0.0;
    for (std::size_t j = 0; j < np; ++j) pap += p[j] * ap[j];
    if (pap <= 0.0) break;  // damped Hessian lost positive definiteness
    const double alpha = rr / pap;
    for (std::size_t j = 0; j < np; ++j) {
      res.x[j] += alpha * p[j];
      r[j] -= alpha * ap[j];
    }
    double rr_new = 0.0;
    for (std::size_t j = 0; j < np; ++j) rr_new += r[j] * r[j];
    const double beta = rr_new / rr;
    for (std::size_t j = 0; j < np; ++j) p[j] = r[j] + beta * p[j];
    rr = rr_new;
    res.iters = it + 1;
  }
  if (rr <= stop) res.converged = true;
  return res;
}

// Newton-style influence update: solve (H + damping I) x = sum_{D_f} grad l
// with H the mean CE Hessian over the sub-retain set, then move
// theta_u = theta_o + x / |D_r|. All linear algebra in double precision.
UnlearnResult influence_second_order(const UnlearnContext& ctx) {
  ctx.check();
  const double damping = ctx.param("damping");
  const int max_iters = static_cast<int>(ctx.param("max_iters"));
  UnlearnResult res;
  res.model = *ctx.original;
  res.method_id = "second_order";
  if (ctx.plan->forget_indices.empty()) return res;
  if (ctx.plan->retain_indices.empty())
    throw Error("second_order: empty retain set");

  const std::size_t np = ctx.original->arch.param_count();
  std::vector<double> params_d(np);
  for (std::size_t j = 0; j < np; ++j)
    params_d[j] = static_cast<double>(ctx.original->params[j]);

  const auto forget_b = make_batch_d(*ctx.dataset, ctx.plan->forget_indices);
  std::vector<double> g;
  ce_batch_gradient(ctx.original->arch, params_d, forget_b.batch, g,
                    /*mean=*/false);

  const auto hessian_b = make_batch_d(*ctx.dataset, ctx.sub_retain_indices());
  const CgResult cg = cg_solve_hessian(ctx.original->arch, params_d,
                                       hessian_b.batch, g, damping, max_iters);
  const double scale = 1.0 / static_cast<double>(ctx.plan->retain_indices.size());
  for (std::size_t j = 0; j < np; ++j)
    res.model.params[j] =
        static_cast<float>(params_d[j] + scale * cg.x[j]);
  res.diagnostics["cg_iters"] = cg.iters;
  res.diagnostics["cg_converged"] = cg.converged ? 1.0 : 0.0;
  return res;
}

}  // namespace ulbench
