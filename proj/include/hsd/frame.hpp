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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hsd/rng.hpp"

namespace hsd {

// Immutable feature matrix with optional binary outcome/treatment columns.
// All toolkit operations consume frames; mutation happens by constructing
// new frames (take_rows / without_responses), so frames are safe to share
// across concurrent readers.
class PopulationFrame {
 public:
  PopulationFrame(std::vector<std::string> feature_names,
                  std::vector<double> values_row_major,
                  std::optional<std::vector<std::uint8_t>> outcome = std::nullopt,
                  std::optional<std::vector<std::uint8_t>> treatment = std::nullopt,
                  std::vector<std::int64_t> ids = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return feature_names_.size(); }

  double feature(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

  // Column index for a named feature; throws ValidationError if absent.
  std::size_t feature_index(const std::string& name) const;

  bool has_outcome() const { return outcome_.has_value(); }
  bool has_treatment() const { return treatment_.has_value(); }
  std::span<const std::uint8_t> outcome() const;
  std::span<const std::uint8_t> treatment() const;
  std::span<const std::int64_t> ids() const { return ids_; }

  PopulationFrame take_rows(std::span<const std::size_t> indices) const;
  PopulationFrame without_responses() const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<double> values_;
  std::optional<std::vector<std::uint8_t>> outcome_;
  std::optional<std::vector<std::uint8_t>> treatment_;
  std::vector<std::int64_t> ids_;
};

// Per-row generating-model truth carried alongside a simulated frame:
// mu0[i] = E[y|x_i, w=0] and tau[i] the conditional treatment effect.
struct SimulatedTruth {
  std::vector<double> mu0;
  std::vector<double> tau;

  void validate() const;
  SimulatedTruth take_rows(std::span<const std::size_t> indices) const;
};

// Column-role mapping used by CSV ingestion; columns not named here are
// ignored.
struct CsvSchema {
  std::vector<std::string> features;
  std::optional<std::string> outcome;
  std::optional<std::string> treatment;
  std::optional<std::string> id;
};

PopulationFrame load_csv(const std::string& path, const CsvSchema& schema);
void emit_csv(const PopulationFrame& frame, const std::string& path);

SimulatedTruth load_truth_csv(const std::string& path);
void emit_truth_csv(const SimulatedTruth& truth, std::span<const std::int64_t> ids, const std::string& path);

// Disjoint random subsets of the requested sizes, deterministic under seed.
std::vector<PopulationFrame> split_frame(const PopulationFrame& frame,
                                         const std::vector<std::size_t>& sizes,
                                         const SeedSpec& seed);

// Row indices behind split_frame; exposed so parallel structures (truth
// vectors, predictions) can be subset in lockstep.
std::vector<std::vector<std::size_t>> split_indices(std::size_t n_rows,
                                                    const std::vector<std::size_t>& sizes,
                                                    const SeedSpec& seed);

}  // namespace hsd
