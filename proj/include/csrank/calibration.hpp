// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

namespace csrank {

// p = 1 / (1 + exp(-w * logit - b))
struct PlattScaler {
  double w = 1.0;
  double b = 0.0;
  std::string fitted_on = "validation";
};

struct PlattConfig {
  int max_iterations = 100;
  double tolerance = 1e-10;  // on the Newton step, both coordinates
  double max_abs_w = 50.0;
  bool smoothed_targets = false; // Platt's (N+ + 1) / (N+ + 2) targets
  int recommended_min_examples = 100;
};

struct PlattFit {
  PlattScaler scaler;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false; // |w| hit the cap (separable logits)
  std::vector<std::string> warnings;
};

// Maximum-likelihood logistic fit of labels on a single feature, the raw
// logit, by damped Newton iterations. Labels are 0/1.
PlattFit fit_platt(std::span<const double> logits, std::span<const double> labels,
                   const PlattConfig& config = {});

// Strictly inside (0, 1).
double calibrate(const PlattScaler& scaler, double logit);

} // namespace csrank
