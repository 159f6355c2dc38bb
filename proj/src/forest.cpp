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
#include <cstdint>

#include "hsd/errors.hpp"
#include "hsd/learners.hpp"

namespace hsd::detail {
namespace {

// Per-feature quantile bin codes. Codes are column-major so the histogram
// pass walks one contiguous block per feature. Split boundary b means
// "x <= cuts[b]": codes are the lower_bound index into cuts, so code <= b
// and x <= cuts[b] agree exactly, and prediction can use raw thresholds.
struct BinnedData {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::uint8_t> codes;        // d blocks of n
  std::vector<std::vector<double>> cuts;  // strictly increasing per feature

  std::uint8_t code(std::size_t row, std::size_t feature) const {
    return codes[feature * n + row];
  }
};

BinnedData bin_features(std::span<const double> values, std::size_t n, std::size_t d,
                        std::size_t max_bins) {
  BinnedData data;
  data.n = n;
  data.d = d;
  data.codes.resize(n * d);
  data.cuts.resize(d);

  std::vector<double> column(n);
  for (std::size_t f = 0; f < d; ++f) {
    for (std::size_t i = 0; i < n; ++i) column[i] = values[i * d + f];
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());

    auto& cuts = data.cuts[f];
    for (std::size_t b = 1; b < max_bins; ++b) {
      const double q = sorted[b * n / max_bins];
      // A cut equal to the column maximum cannot separate anything.
      if (q >= sorted[n - 1]) break;
      if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::uint8_t>(
          std::lower_bound(cuts.begin(), cuts.end(), column[i]) - cuts.begin());
      data.codes[f * n + i] = idx;
    }
  }
  return data;
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  std::size_t boundary = 0;
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, std::span<const double> targets, const ForestParams& params,
              std::vector<std::size_t> rows, std::vector<std::size_t> features)
      : data_(data),
        targets_(targets),
        params_(params),
        rows_(std::move(rows)),
        features_(std::move(features)) {}

  Tree build() {
    Tree tree;
    grow(tree, 0, rows_.size(), 0);
    return tree;
  }

 private:
  std::int32_t grow(Tree& tree, std::size_t lo, std::size_t hi, std::size_t depth) {
    const std::size_t count = hi - lo;
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) sum += targets_[rows_[i]];

    const auto node_index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_index].value = sum / static_cast<double>(count);

    if (depth >= params_.max_depth || count < 2 * params_.min_leaf) return node_index;

    const SplitChoice split = best_split(lo, hi, count, sum);
    if (!split.found) return node_index;

    const auto mid = static_cast<std::size_t>(
        std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(lo),
                       rows_.begin() + static_cast<std::ptrdiff_t>(hi),
                       [&](std::size_t row) {
                         return data_.code(row, split.feature) <= split.boundary;
                       }) -
        rows_.begin());

    tree.nodes[node_index].feature = static_cast<std::int32_t>(split.feature);
    tree.nodes[node_index].threshold = split.threshold;
    const std::int32_t left = grow(tree, lo, mid, depth + 1);
    const std::int32_t right = grow(tree, mid, hi, depth + 1);
    tree.nodes[node_index].left = left;
    tree.nodes[node_index].right = right;
    return node_index;
  }

  // Maximizes sum_left^2/n_left + sum_right^2/n_right, the common form of
  // Gini gain for 0/1 targets and variance gain for continuous ones.
  SplitChoice best_split(std::size_t lo, std::size_t hi, std::size_t count, double sum) {
    SplitChoice best;
    const double base = sum * sum / static_cast<double>(count);
    double best_gain = 1e-12;

    for (std::size_t f : features_) {
      const auto& cuts = data_.cuts[f];
      if (cuts.empty()) continue;
      const std::size_t bins = cuts.size() + 1;

      counts_.assign(bins, 0);
      sums_.assign(bins, 0.0);
      for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t row = rows_[i];
        const std::uint8_t code = data_.code(row, f);
        counts_[code] += 1;
        sums_[code] += targets_[row];
      }

      std::size_t n_left = 0;
      double sum_left = 0.0;
      for (std::size_t b = 0; b + 1 < bins; ++b) {
        n_left += counts_[b];
        sum_left += sums_[b];
        const std::size_t n_right = count - n_left;
        if (n_left < params_.min_leaf || n_right < params_.min_leaf) continue;
        const double sum_right = sum - sum_left;
        const double gain = sum_left * sum_left / static_cast<double>(n_left) +
                            sum_right * sum_right / static_cast<double>(n_right) - base;
        if (gain > best_gain) {
          best_gain = gain;
          best.found = true;
          best.feature = f;
          best.boundary = b;
          best.threshold = cuts[b];
        }
      }
    }
    return best;
  }

  const BinnedData& data_;
  std::span<const double> targets_;
  const ForestParams& params_;
  std::vector<std::size_t> rows_;
  std::vector<std::size_t> features_;
  std::vector<std::size_t> counts_;
  std::vector<double> sums_;
};

}  // namespace

ForestState fit_forest(const ForestParams& params, std::span<const double> values_row_major,
                       std::size_t n_features, std::span<const double> targets,
                       const SeedSpec& seed) {
  const std::size_t n = targets.size();
  if (n == 0) throw ValidationError("random forest requires at least one row");
  if (values_row_major.size() != n * n_features) {
    throw ValidationError("forest feature matrix does not match target length");
  }

  ForestState state;
  const auto [min_it, max_it] = std::minmax_element(targets.begin(), targets.end());
  if (*min_it == *max_it || n_features == 0) {
    state.constant_model = true;
    double sum = 0.0;
    for (double t : targets) sum += t;
    state.constant = sum / static_cast<double>(n);
    return state;
  }

  const BinnedData binned = bin_features(values_row_major, n, n_features, params.max_bins);

  std::size_t features_per_tree;
  if (params.feature_fraction <= 0.0) {
    features_per_tree = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_features))));
  } else {
    features_per_tree =
        static_cast<std::size_t>(std::llround(params.feature_fraction * static_cast<double>(n_features)));
  }
  features_per_tree = std::clamp<std::size_t>(features_per_tree, 1, n_features);

  auto bootstrap_size =
      static_cast<std::size_t>(std::llround(params.row_fraction * static_cast<double>(n)));
  bootstrap_size = std::clamp<std::size_t>(bootstrap_size, 1, n);

  const SeedSpec tree_seed = seed.stream("tree");
  state.trees.reserve(params.tree_count);
  for (std::size_t t = 0; t < params.tree_count; ++t) {
    Rng rng(tree_seed, t);

    std::vector<std::size_t> rows(bootstrap_size);
    for (std::size_t i = 0; i < bootstrap_size; ++i) {
      rows[i] = static_cast<std::size_t>(rng.uniform_below(n));
    }

    std::vector<std::size_t> features = rng.sample_without_replacement(n_features, features_per_tree);
    std::sort(features.begin(), features.end());

    TreeBuilder builder(binned, targets, params, std::move(rows), std::move(features));
    state.trees.push_back(builder.build());
  }
  return state;
}

}  // namespace hsd::detail

namespace hsd {

double Tree::predict_row(std::span<const double> row) const {
  std::int32_t at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].value;
}

}  // namespace hsd
