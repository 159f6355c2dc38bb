/*
 * Copyright 2026 the hsd authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "hsd/errors.hpp"
#include "hsd/learners.hpp"

namespace hsd::detail {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

GlmState fit_glm(const GlmParams& params, std::span<const double> values_row_major,
                 std::size_t n_features, std::span<const double> targets, bool logistic) {
  const std::size_t n = targets.size();
  const std::size_t p = n_features + 1;  // intercept in the last column
  if (n == 0) throw ValidationError("glm requires at least one row");
  if (values_row_major.size() != n * n_features) {
    throw ValidationError("glm feature matrix does not match target length");
  }

  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n_features; ++j) x(i, j) = values_row_major[i * n_features + j];
    x(i, p - 1) = 1.0;
    y(i) = targets[i];
  }

  // Intercept stays unpenalized.
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, params.l2_penalty);
  penalty(p - 1) = 0.0;

  GlmState state;
  state.logistic = logistic;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

  if (!logistic) {
    Eigen::MatrixXd normal = x.transpose() * x;
    normal += penalty.asDiagonal();
    beta = normal.ldlt().solve(x.transpose() * y);
    state.iterations = 1;
    state.converged = true;
  } else {
    state.converged = false;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
      Eigen::VectorXd mu(n);
      Eigen::VectorXd w(n);
      Eigen::VectorXd z(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double m = std::clamp(sigmoid(eta(i)), 1e-10, 1.0 - 1e-10);
        mu(i) = m;
        w(i) = m * (1.0 - m);
        z(i) = eta(i) + (y(i) - m) / w(i);
      }
      Eigen::MatrixXd weighted = x.transpose() * w.asDiagonal() * x;
      weighted += penalty.asDiagonal();
      const Eigen::VectorXd next = weighted.ldlt().solve(x.transpose() * (w.asDiagonal() * z));
      const double step = (next - beta).cwiseAbs().maxCoeff();
      beta = next;
      eta = x * beta;
      state.iterations = iter + 1;
      if (step < params.tolerance) {
        state.converged = true;
        break;
      }
    }
  }

  state.weights.assign(beta.data(), beta.data() + n_features);
  state.intercept = beta(p - 1);
  return state;
}

}  // namespace hsd::detail
