// SPDX-License-Identifier: Apache-2.0
#include "uwmmse/unfolded.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "model_detail.hpp"
#include "uwmmse/error.hpp"
#include "uwmmse/wmmse.hpp"

namespace uwmmse {

void UnfoldConfig::validate() const {
  if (layers < 1 || pgd_steps < 1)
    throw Error(ErrorCode::kInvalidArgument, "UnfoldConfig: L and K must be at least 1");
}

void UnfoldConfig::check_steps(const StepSizes& steps) const {
  validate();
  if (steps.layers() != layers || steps.steps() != pgd_steps)
    throw Error(ErrorCode::kShapeMismatch,
                "step sizes are " + std::to_string(steps.layers()) + "x" +
                    std::to_string(steps.steps()) + ", network expects " +
                    std::to_string(layers) + "x" + std::to_string(pgd_steps));
}

CMatrix pgd_gradient(const Channel& h, const CMatrix& a, std::span<const double> w,
                     std::span<const cplx> u, const Beamformer& v, const SystemConfig& cfg) {
  detail::check_instance(h, v, cfg);
  const std::size_t n = h.users();
  const std::size_t m = h.antennas();
  if (a.rows() != m || a.cols() != m || w.size() != n || u.size() != n)
    throw Error(ErrorCode::kDimension, "pgd_gradient: operand shapes disagree");
  CMatrix g(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx b = 2.0 * cfg.priorities[i] * w[i] * u[i];
    for (std::size_t j = 0; j < m; ++j) {
      cplx av{0.0, 0.0};
      for (std::size_t k = 0; k < m; ++k) av += a(j, k) * v.v(i, k);
      g(i, j) = 2.0 * av - b * h.h(i, j);
    }
  }
  return g;
}

CMatrix pgd_gradient(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                     const Beamformer& v, const SystemConfig& cfg) {
  return pgd_gradient(h, build_A(h, w, u, cfg), w, u, v, cfg);
}

double projection_scale(double frob, double max_power) {
  const double radius = std::sqrt(max_power);
  return radius / (std::max(0.0, frob - radius) + radius);
}

Beamformer project_power(const Beamformer& v, double max_power) {
  return Beamformer{v.v * cplx(projection_scale(frob_norm(v.v), max_power))};
}

Beamformer pgd_inner(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                     const Beamformer& v_in, std::span<const double> steps,
                     const SystemConfig& cfg) {
  const CMatrix a = build_A(h, w, u, cfg);
  Beamformer v = v_in;
  for (double gamma : steps) {
    CMatrix moved = v.v - pgd_gradient(h, a, w, u, v, cfg) * cplx(gamma);
    v = project_power(Beamformer{std::move(moved)}, cfg.max_power);
  }
  return v;
}

std::vector<Beamformer> forward(const Channel& h, const StepSizes& steps,
                                const SystemConfig& cfg, const UnfoldConfig& ucfg) {
  ucfg.check_steps(steps);
  std::vector<Beamformer> outputs;
  outputs.reserve(ucfg.layers);
  Beamformer v = matched_filter_init(h, cfg);
  std::vector<double> row(ucfg.pgd_steps);
  for (std::size_t l = 0; l < ucfg.layers; ++l) {
    const std::vector<double> w = update_w(h, v, cfg);
    const std::vector<cplx> u = update_u(h, v, cfg);
    for (std::size_t k = 0; k < ucfg.pgd_steps; ++k) row[k] = effective_step(steps, ucfg, l, k);
    v = pgd_inner(h, w, u, v, row, cfg);
    outputs.push_back(v);
  }
  return outputs;
}

}  // namespace uwmmse
