// SPDX-License-Identifier: Apache-2.0
#include "csrank/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csrank/errors.hpp"
#include "csrank/losses.hpp"
#include "csrank/metrics.hpp"

namespace csrank {
namespace {

struct Objective {
  std::span<const double> f;
  std::vector<double> t;

  double nll(double w, double b) const {
    CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = w * f[i] + b;
      s.add(t[i] * softplus(-z) + (1.0 - t[i]) * softplus(z));
    }
    return s.value();
  }

  // gradient (gw, gb) and Hessian (hww, hwb, hbb)
  void derivatives(double w, double b, double g[2], double h[3]) const {
    CompensatedSum gw, gb, hww, hwb, hbb;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double s = sigmoid(w * f[i] + b);
      const double r = s - t[i];
      const double d = s * (1.0 - s);
      gw.add(r * f[i]);
      gb.add(r);
      hww.add(d * f[i] * f[i]);
      hwb.add(d * f[i]);
      hbb.add(d);
    }
    g[0] = gw.value();
    g[1] = gb.value();
    h[0] = hww.value() + 1e-12;
    h[1] = hwb.value();
    h[2] = hbb.value() + 1e-12;
  }
};

} // namespace

PlattFit fit_platt(std::span<const double> logits, std::span<const double> labels,
                   const PlattConfig& config) {
  if (logits.size() != labels.size())
    throw DataError("fit_platt: logits and labels differ in length");
  double n_pos = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) throw DataError("fit_platt: labels must be 0 or 1");
    if (!std::isfinite(logits[i])) throw DataError("fit_platt: non-finite logit");
    n_pos += labels[i];
  }
  const double n_neg = double(logits.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0)
    throw DataError("fit_platt: both classes must be present");

  PlattFit fit;
  if (int(logits.size()) < config.recommended_min_examples)
    fit.warnings.push_back("fit_platt: only " + std::to_string(logits.size()) +
                           " examples; at least " +
                           std::to_string(config.recommended_min_examples) +
                           " recommended");

  Objective obj{logits, std::vector<double>(logits.size())};
  const double hi = config.smoothed_targets ? (n_pos + 1.0) / (n_pos + 2.0) : 1.0;
  const double lo = config.smoothed_targets ? 1.0 / (n_neg + 2.0) : 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) obj.t[i] = labels[i] == 1.0 ? hi : lo;

  double w = 0.0;
  double b = std::log((n_pos + 1.0) / (n_neg + 1.0));
  bool w_fixed = false;

  // Hard targets on separated logits have no finite optimum: pin w at the cap.
  if (!config.smoothed_targets) {
    const double inf = std::numeric_limits<double>::infinity();
    double pos_lo = inf, pos_hi = -inf, neg_lo = inf, neg_hi = -inf;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double& lo_ref = labels[i] == 1.0 ? pos_lo : neg_lo;
      double& hi_ref = labels[i] == 1.0 ? pos_hi : neg_hi;
      lo_ref = std::min(lo_ref, logits[i]);
      hi_ref = std::max(hi_ref, logits[i]);
    }
    if (neg_hi < pos_lo || pos_hi < neg_lo) {
      w = neg_hi < pos_lo ? config.max_abs_w : -config.max_abs_w;
      b = neg_hi < pos_lo ? -w * 0.5 * (neg_hi + pos_lo) : -w * 0.5 * (pos_hi + neg_lo);
      w_fixed = true;
      fit.degenerate = true;
    }
  }
  double value = obj.nll(w, b);

  for (fit.iterations = 1; fit.iterations <= config.max_iterations; ++fit.iterations) {
    double g[2], h[3];
    obj.derivatives(w, b, g, h);
    double dw = 0.0, db = 0.0;
    if (w_fixed) {
      db = -g[1] / h[2];
    } else {
      const double det = h[0] * h[2] - h[1] * h[1];
      dw = -(h[2] * g[0] - h[1] * g[1]) / det;
      db = -(-h[1] * g[0] + h[0] * g[1]) / det;
    }
    if (std::max(std::abs(dw), std::abs(db)) < config.tolerance) {
      fit.converged = true;
      break;
    }

    // backtracking on the full Newton direction
    const double slope = g[0] * dw + g[1] * db;
    double step = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, step *= 0.5) {
      const double nw = w + step * dw;
      const double nb = b + step * db;
      const double nv = obj.nll(nw, nb);
      if (nv <= value + 1e-4 * step * slope) {
        w = nw;
        b = nb;
        value = nv;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // no representable decrease left: we are at the optimum up to rounding
      fit.converged = std::max(std::abs(dw), std::abs(db)) < 1e-6;
      break;
    }
    if (!w_fixed && std::abs(w) > config.max_abs_w) {
      w = std::copysign(config.max_abs_w, w);
      value = obj.nll(w, b);
      w_fixed = true;
      fit.degenerate = true;
    }
  }
  fit.iterations = std::min(fit.iterations, config.max_iterations);

  if (fit.degenerate)
    fit.warnings.push_back("fit_platt: logits separate the classes; |w| capped at " +
                           std::to_string(config.max_abs_w));
  if (!fit.converged) fit.warnings.push_back("fit_platt: Newton iterations did not converge");
  if (!(w > 0.0))
    fit.warnings.push_back("fit_platt: w = " + std::to_string(w) +
                           " is not positive; calibrated scores do not preserve ranking");
  fit.scaler.w = w;
  fit.scaler.b = b;
  return fit;
}

double calibrate(const PlattScaler& scaler, double logit) {
  const double p = sigmoid(scaler.w * logit + scaler.b);
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

} // namespace csrank
