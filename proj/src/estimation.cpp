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

#include "hsd/estimation.hpp"

#include <cmath>
#include <utility>

#include "hsd/errors.hpp"

namespace hsd {
namespace {

struct ArmStats {
  std::size_t n1 = 0;
  std::size_t n0 = 0;
  double mean1 = 0.0;
  double mean0 = 0.0;
  double var1 = 0.0;  // sample variance, 0 for arms below 2 rows
  double var0 = 0.0;
};

ArmStats arm_stats(std::span<const double> outcome, std::span<const std::uint8_t> treatment) {
  double sum1 = 0.0;
  double sum0 = 0.0;
  ArmStats stats;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    if (treatment[i]) {
      stats.n1 += 1;
      sum1 += outcome[i];
    } else {
      stats.n0 += 1;
      sum0 += outcome[i];
    }
  }
  if (stats.n1 > 0) stats.mean1 = sum1 / static_cast<double>(stats.n1);
  if (stats.n0 > 0) stats.mean0 = sum0 / static_cast<double>(stats.n0);
  double sq1 = 0.0;
  double sq0 = 0.0;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    const double d = outcome[i] - (treatment[i] ? stats.mean1 : stats.mean0);
    (treatment[i] ? sq1 : sq0) += d * d;
  }
  if (stats.n1 > 1) stats.var1 = sq1 / static_cast<double>(stats.n1 - 1);
  if (stats.n0 > 1) stats.var0 = sq0 / static_cast<double>(stats.n0 - 1);
  return stats;
}

std::vector<double> to_doubles(std::span<const std::uint8_t> outcome) {
  std::vector<double> values(outcome.size());
  for (std::size_t i = 0; i < outcome.size(); ++i) values[i] = outcome[i];
  return values;
}

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(std::string(what) + " length mismatch");
}

AteEstimate dim_impl(std::span<const double> outcome, std::span<const std::uint8_t> treatment,
                     AteMethod method) {
  check_lengths(outcome.size(), treatment.size(), "outcome/treatment");
  if (outcome.empty()) throw ValidationError("cannot estimate on zero rows");
  const ArmStats stats = arm_stats(outcome, treatment);
  if (stats.n1 == 0) throw ValidationError("treated arm is empty");
  if (stats.n0 == 0) throw ValidationError("control arm is empty");

  AteEstimate estimate;
  estimate.method = method;
  estimate.value = stats.mean1 - stats.mean0;
  estimate.variance_hat = stats.var1 / static_cast<double>(stats.n1) +
                          stats.var0 / static_cast<double>(stats.n0);
  estimate.n_used = outcome.size();
  estimate.n_treated = stats.n1;
  return estimate;
}

AteEstimate stratified_impl(std::span<const double> outcome,
                            std::span<const std::uint8_t> treatment,
                            std::span<const std::uint8_t> labels, double population_p_h,
                            AteMethod method) {
  check_lengths(outcome.size(), treatment.size(), "outcome/treatment");
  check_lengths(outcome.size(), labels.size(), "outcome/labels");
  if (outcome.empty()) throw ValidationError("cannot estimate on zero rows");
  if (!(population_p_h >= 0.0) || !(population_p_h <= 1.0)) {
    throw ValidationError("population p_H must lie in [0, 1]");
  }

  std::vector<double> y_h;
  std::vector<double> y_l;
  std::vector<std::uint8_t> w_h;
  std::vector<std::uint8_t> w_l;
  std::size_t treated = 0;
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    (labels[i] ? y_h : y_l).push_back(outcome[i]);
    (labels[i] ? w_h : w_l).push_back(treatment[i]);
    treated += treatment[i];
  }

  AteEstimate estimate;
  estimate.method = method;
  estimate.n_used = outcome.size();
  estimate.n_treated = treated;

  // Zero-weight strata drop out entirely; this covers the single-stratum
  // degenerate case without special-casing callers.
  if (population_p_h == 0.0 || y_h.empty()) {
    if (population_p_h > 0.0) {
      throw ValidationError("stratum H is empty but carries positive population weight");
    }
    const AteEstimate low = dim_impl(y_l, w_l, method);
    estimate.value = low.value;
    estimate.variance_hat = low.variance_hat;
    return estimate;
  }
  if (population_p_h == 1.0 || y_l.empty()) {
    if (population_p_h < 1.0) {
      throw ValidationError("stratum L is empty but carries positive population weight");
    }
    const AteEstimate high = dim_impl(y_h, w_h, method);
    estimate.value = high.value;
    estimate.variance_hat = high.variance_hat;
    return estimate;
  }

  const ArmStats high = arm_stats(y_h, w_h);
  const ArmStats low = arm_stats(y_l, w_l);
  if (high.n1 == 0) throw ValidationError("stratum H has no treated rows");
  if (high.n0 == 0) throw ValidationError("stratum H has no control rows");
  if (low.n1 == 0) throw ValidationError("stratum L has no treated rows");
  if (low.n0 == 0) throw ValidationError("stratum L has no control rows");

  const double tau_h = high.mean1 - high.mean0;
  const double tau_l = low.mean1 - low.mean0;
  const double var_h = high.var1 / static_cast<double>(high.n1) +
                       high.var0 / static_cast<double>(high.n0);
  const double var_l =
      low.var1 / static_cast<double>(low.n1) + low.var0 / static_cast<double>(low.n0);

  const double p = population_p_h;
  estimate.value = p * tau_h + (1.0 - p) * tau_l;
  estimate.variance_hat = p * p * var_h + (1.0 - p) * (1.0 - p) * var_l;
  return estimate;
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return sq / static_cast<double>(n - 1);
}

}  // namespace

std::string to_string(AteMethod method) {
  switch (method) {
    case AteMethod::kDim: return "dim";
    case AteMethod::kStratified: return "stratified";
    case AteMethod::kCovAdj: return "covadj";
    case AteMethod::kOracleCovAdj: return "oracle_covadj";
    case AteMethod::kHs: return "hs";
    case AteMethod::kHsCovAdj: return "hs_covadj";
  }
  throw ValidationError("unknown ATE method");
}

AteEstimate diff_in_means(std::span<const double> outcome,
                          std::span<const std::uint8_t> treatment) {
  return dim_impl(outcome, treatment, AteMethod::kDim);
}

AteEstimate diff_in_means(std::span<const std::uint8_t> outcome,
                          std::span<const std::uint8_t> treatment) {
  return dim_impl(to_doubles(outcome), treatment, AteMethod::kDim);
}

AteEstimate stratified_ate(std::span<const double> outcome,
                           std::span<const std::uint8_t> treatment,
                           std::span<const std::uint8_t> labels, double population_p_h) {
  return stratified_impl(outcome, treatment, labels, population_p_h, AteMethod::kStratified);
}

AteEstimate stratified_ate(std::span<const std::uint8_t> outcome,
                           std::span<const std::uint8_t> treatment,
                           std::span<const std::uint8_t> labels, double population_p_h) {
  return stratified_impl(to_doubles(outcome), treatment, labels, population_p_h,
                         AteMethod::kStratified);
}

std::vector<double> oracle_phi(const SimulatedTruth& truth, double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw ValidationError("treatment proportion must be in (0, 1)");
  std::vector<double> phi(truth.mu0.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = truth.mu0[i] + (1.0 - p) * truth.tau[i];
  }
  return phi;
}

std::vector<double> phi_from_predictions(std::span<const double> mu0, std::span<const double> mu1,
                                         double p) {
  check_lengths(mu0.size(), mu1.size(), "mu0/mu1");
  if (!(p > 0.0) || !(p < 1.0)) throw ValidationError("treatment proportion must be in (0, 1)");
  std::vector<double> phi(mu0.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = p * mu0[i] + (1.0 - p) * mu1[i];
  return phi;
}

std::vector<double> adjust_outcomes(std::span<const std::uint8_t> outcome,
                                    std::span<const double> phi) {
  check_lengths(outcome.size(), phi.size(), "outcome/phi");
  std::vector<double> adjusted(outcome.size());
  for (std::size_t i = 0; i < adjusted.size(); ++i) {
    adjusted[i] = static_cast<double>(outcome[i]) - phi[i];
  }
  return adjusted;
}

AteEstimate covariate_adjusted_ate(const PopulationFrame& frame, const OutcomeLearnerSpec& spec,
                                   std::size_t folds, const SeedSpec& seed) {
  if (!frame.has_outcome() || !frame.has_treatment()) {
    throw ValidationError("covariate adjustment requires outcome and treatment columns");
  }
  const CrossFitResult fit = cross_fit(spec, frame, folds, true, seed);
  const auto outcome = frame.outcome();
  const auto treatment = frame.treatment();
  const std::size_t n = frame.rows();

  std::vector<double> fold_tau(folds, 0.0);
  std::vector<std::size_t> fold_n(folds, 0);
  std::vector<double> sum_dm(folds, 0.0);
  std::vector<double> sum_res1(folds, 0.0);
  std::vector<std::size_t> n_res1(folds, 0);
  std::vector<double> sum_res0(folds, 0.0);
  std::vector<std::size_t> n_res0(folds, 0);

  std::size_t treated_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = fit.fold_of[i];
    fold_n[f] += 1;
    sum_dm[f] += fit.mu1[i] - fit.mu0[i];
    if (treatment[i]) {
      sum_res1[f] += outcome[i] - fit.mu1[i];
      n_res1[f] += 1;
      treated_total += 1;
    } else {
      sum_res0[f] += outcome[i] - fit.mu0[i];
      n_res0[f] += 1;
    }
  }

  double value = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    if (n_res1[f] == 0 || n_res0[f] == 0) {
      throw ValidationError("fold " + std::to_string(f) + " lacks a treatment arm");
    }
    fold_tau[f] = sum_dm[f] / static_cast<double>(fold_n[f]) +
                  sum_res1[f] / static_cast<double>(n_res1[f]) -
                  sum_res0[f] / static_cast<double>(n_res0[f]);
    value += fold_tau[f];
  }
  value /= static_cast<double>(folds);

  const double p = static_cast<double>(treated_total) / static_cast<double>(n);
  const std::vector<double> phi = phi_from_predictions(fit.mu0, fit.mu1, p);
  const std::vector<double> adjusted = adjust_outcomes(outcome, phi);
  AteEstimate estimate = dim_impl(adjusted, treatment, AteMethod::kCovAdj);
  estimate.value = value;
  return estimate;
}

AteEstimate oracle_adjusted_ate(std::span<const std::uint8_t> outcome,
                                std::span<const std::uint8_t> treatment,
                                const SimulatedTruth& truth, double p) {
  check_lengths(outcome.size(), truth.mu0.size(), "outcome/truth");
  const std::vector<double> phi = oracle_phi(truth, p);
  const std::vector<double> adjusted = adjust_outcomes(outcome, phi);
  return dim_impl(adjusted, treatment, AteMethod::kOracleCovAdj);
}

AteEstimate hs_estimate(const PopulationFrame& frame, std::span<const std::uint8_t> labels,
                        const SamplingPlan& plan, bool covariate_adjust,
                        const HsAdjustment& adjustment) {
  if (!frame.has_outcome() || !frame.has_treatment()) {
    throw ValidationError("hs_estimate requires outcome and treatment columns");
  }
  const double p_h = plan.population_share_h;
  if (!(p_h > 0.0) || !(p_h < 1.0)) {
    throw ValidationError("plan carries no population stratum share; stratify the population first");
  }

  if (!covariate_adjust) {
    AteEstimate estimate =
        stratified_impl(to_doubles(frame.outcome()), frame.treatment(), labels, p_h,
                        AteMethod::kHs);
    return estimate;
  }

  std::vector<double> phi;
  if (adjustment.truth != nullptr) {
    check_lengths(adjustment.truth->mu0.size(), frame.rows(), "truth/frame");
    phi = oracle_phi(*adjustment.truth, plan.treatment_proportion);
  } else {
    const CrossFitResult fit =
        cross_fit(adjustment.learner, frame, adjustment.folds, true, adjustment.seed);
    phi = phi_from_predictions(fit.mu0, fit.mu1, plan.treatment_proportion);
  }
  const std::vector<double> adjusted = adjust_outcomes(frame.outcome(), phi);
  return stratified_impl(adjusted, frame.treatment(), labels, p_h, AteMethod::kHsCovAdj);
}

VarianceDecomposition variance_decomposition(std::span<const std::uint8_t> outcome,
                                             std::span<const std::uint8_t> treatment,
                                             const SimulatedTruth& truth, double p) {
  check_lengths(outcome.size(), treatment.size(), "outcome/treatment");
  check_lengths(outcome.size(), truth.mu0.size(), "outcome/truth");
  if (!(p > 0.0) || !(p < 1.0)) throw ValidationError("treatment proportion must be in (0, 1)");
  const std::size_t n = outcome.size();
  if (n == 0) throw ValidationError("cannot decompose zero rows");

  std::vector<double> zeta(n);
  std::vector<double> eps_bar(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = treatment[i];
    const double weight = w / p - (1.0 - w) / (1.0 - p);
    const double signal = truth.mu0[i] + w * truth.tau[i];
    zeta[i] = weight * signal;
    eps_bar[i] = weight * (static_cast<double>(outcome[i]) - signal);
  }

  VarianceDecomposition decomposition;
  const double dn = static_cast<double>(n);
  decomposition.zeta_var_over_n = sample_variance(zeta) / dn;
  decomposition.eps_bar_var_over_n = sample_variance(eps_bar) / dn;
  decomposition.total = decomposition.zeta_var_over_n + decomposition.eps_bar_var_over_n;
  return decomposition;
}

}  // namespace hsd
