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

#include "hsd/frame.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hsd/errors.hpp"

namespace hsd {

namespace {

void check_binary_column(const std::vector<std::uint8_t>& col, std::size_t rows, const char* name) {
  if (col.size() != rows) {
    throw ValidationError(std::string(name) + " column length does not match row count");
  }
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (col[i] > 1) {
      throw ValidationError(std::string(name) + " value at row " + std::to_string(i) + " is not 0/1");
    }
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      tokens.push_back(line.substr(start));
      break;
    }
    tokens.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!tokens.empty() && !tokens.back().empty() && tokens.back().back() == '\r') {
    tokens.back().pop_back();
  }
  return tokens;
}

double parse_double(const std::string& tok, std::size_t line_no, const std::string& col) {
  double out = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || tok.empty()) {
    throw ValidationError("unparsable numeric '" + tok + "' in column '" + col + "' at line " +
                          std::to_string(line_no));
  }
  return out;
}

std::uint8_t parse_binary(const std::string& tok, std::size_t line_no, const std::string& col) {
  const double v = parse_double(tok, line_no, col);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw ValidationError("non-binary value '" + tok + "' in column '" + col + "' at line " +
                        std::to_string(line_no));
}

void format_double(std::string& out, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

PopulationFrame::PopulationFrame(std::vector<std::string> feature_names,
                                 std::vector<double> values_row_major,
                                 std::optional<std::vector<std::uint8_t>> outcome,
                                 std::optional<std::vector<std::uint8_t>> treatment,
                                 std::vector<std::int64_t> ids)
    : feature_names_(std::move(feature_names)),
      values_(std::move(values_row_major)),
      outcome_(std::move(outcome)),
      treatment_(std::move(treatment)),
      ids_(std::move(ids)) {
  if (feature_names_.empty()) throw ValidationError("frame needs at least one feature column");
  if (values_.size() % feature_names_.size() != 0) {
    throw ValidationError("feature value count is not a multiple of the column count");
  }
  rows_ = values_.size() / feature_names_.size();
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("feature matrix contains a non-finite entry");
  }
  if (outcome_) check_binary_column(*outcome_, rows_, "outcome");
  if (treatment_) check_binary_column(*treatment_, rows_, "treatment");
  if (ids_.empty()) {
    ids_.resize(rows_);
    std::iota(ids_.begin(), ids_.end(), std::int64_t{0});
  } else if (ids_.size() != rows_) {
    throw ValidationError("id column length does not match row count");
  }
}

std::size_t PopulationFrame::feature_index(const std::string& name) const {
  const auto it = std::find(feature_names_.begin(), feature_names_.end(), name);
  if (it == feature_names_.end()) throw ValidationError("unknown feature column '" + name + "'");
  return static_cast<std::size_t>(it - feature_names_.begin());
}

std::span<const std::uint8_t> PopulationFrame::outcome() const {
  if (!outcome_) throw ValidationError("frame has no outcome column");
  return *outcome_;
}

std::span<const std::uint8_t> PopulationFrame::treatment() const {
  if (!treatment_) throw ValidationError("frame has no treatment column");
  return *treatment_;
}

PopulationFrame PopulationFrame::take_rows(std::span<const std::size_t> indices) const {
  const std::size_t d = cols();
  std::vector<double> values(indices.size() * d);
  std::vector<std::int64_t> ids(indices.size());
  std::optional<std::vector<std::uint8_t>> outcome, treatment;
  if (outcome_) outcome.emplace(indices.size());
  if (treatment_) treatment.emplace(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t r = indices[i];
    if (r >= rows_) throw ValidationError("take_rows: index out of range");
    std::copy_n(values_.data() + r * d, d, values.data() + i * d);
    ids[i] = ids_[r];
    if (outcome_) (*outcome)[i] = (*outcome_)[r];
    if (treatment_) (*treatment)[i] = (*treatment_)[r];
  }
  return PopulationFrame(feature_names_, std::move(values), std::move(outcome), std::move(treatment),
                         std::move(ids));
}

PopulationFrame PopulationFrame::without_responses() const {
  return PopulationFrame(feature_names_, values_, std::nullopt, std::nullopt, ids_);
}

void SimulatedTruth::validate() const {
  if (mu0.size() != tau.size()) throw ValidationError("truth vectors differ in length");
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    if (mu0[i] < 0.0 || mu0[i] > 1.0) {
      throw ValidationError("mu0 outside [0,1] at row " + std::to_string(i));
    }
    const double p1 = mu0[i] + tau[i];
    if (p1 < -1e-12 || p1 > 1.0 + 1e-12) {
      throw ValidationError("mu0+tau outside [0,1] at row " + std::to_string(i));
    }
  }
}

SimulatedTruth SimulatedTruth::take_rows(std::span<const std::size_t> indices) const {
  SimulatedTruth out;
  out.mu0.reserve(indices.size());
  out.tau.reserve(indices.size());
  for (std::size_t r : indices) {
    out.mu0.push_back(mu0[r]);
    out.tau.push_back(tau[r]);
  }
  return out;
}

PopulationFrame load_csv(const std::string& path, const CsvSchema& schema) {
  if (schema.features.empty()) throw ValidationError("schema names no feature columns");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);

  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ValidationError("column '" + name + "' missing from '" + path + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.features.size());
  for (const auto& f : schema.features) feature_cols.push_back(column_of(f));
  const std::size_t outcome_col = schema.outcome ? column_of(*schema.outcome) : 0;
  const std::size_t treatment_col = schema.treatment ? column_of(*schema.treatment) : 0;
  const std::size_t id_col = schema.id ? column_of(*schema.id) : 0;

  std::vector<double> values;
  std::vector<std::uint8_t> outcome, treatment;
  std::vector<std::int64_t> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> tokens = split_line(line);
    if (tokens.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has " + std::to_string(tokens.size()) +
                            " fields, header has " + std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::string& tok = tokens[feature_cols[j]];
      if (tok.empty()) {
        throw ValidationError("missing value in column '" + schema.features[j] + "' at line " +
                              std::to_string(line_no));
      }
      values.push_back(parse_double(tok, line_no, schema.features[j]));
    }
    if (schema.outcome) outcome.push_back(parse_binary(tokens[outcome_col], line_no, *schema.outcome));
    if (schema.treatment) {
      treatment.push_back(parse_binary(tokens[treatment_col], line_no, *schema.treatment));
    }
    if (schema.id) {
      ids.push_back(static_cast<std::int64_t>(parse_double(tokens[id_col], line_no, *schema.id)));
    }
  }

  return PopulationFrame(schema.features, std::move(values),
                         schema.outcome ? std::optional(std::move(outcome)) : std::nullopt,
                         schema.treatment ? std::optional(std::move(treatment)) : std::nullopt,
                         std::move(ids));
}

void emit_csv(const PopulationFrame& frame, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  std::string buf = "id";
  for (const auto& name : frame.feature_names()) {
    buf += ',';
    buf += name;
  }
  if (frame.has_treatment()) buf += ",treatment";
  if (frame.has_outcome()) buf += ",outcome";
  buf += '\n';
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    buf += std::to_string(frame.ids()[r]);
    for (std::size_t c = 0; c < frame.cols(); ++c) {
      buf += ',';
      format_double(buf, frame.feature(r, c));
    }
    if (frame.has_treatment()) {
      buf += ',';
      buf += frame.treatment()[r] ? '1' : '0';
    }
    if (frame.has_outcome()) {
      buf += ',';
      buf += frame.outcome()[r] ? '1' : '0';
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
  if (!out) throw DataError("write to '" + path + "' failed");
}

SimulatedTruth load_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
  const std::vector<std::string> header = split_line(line);
  std::size_t mu_col = header.size(), tau_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "mu0") mu_col = j;
    if (header[j] == "tau") tau_col = j;
  }
  if (mu_col == header.size() || tau_col == header.size()) {
    throw ValidationError("truth file '" + path + "' needs mu0 and tau columns");
  }
  SimulatedTruth truth;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> tokens = split_line(line);
    if (tokens.size() != header.size()) {
      throw ValidationError("line " + std::to_string(line_no) + " has wrong field count");
    }
    truth.mu0.push_back(parse_double(tokens[mu_col], line_no, "mu0"));
    truth.tau.push_back(parse_double(tokens[tau_col], line_no, "tau"));
  }
  truth.validate();
  return truth;
}

void emit_truth_csv(const SimulatedTruth& truth, std::span<const std::int64_t> ids,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "id,mu0,tau\n";
  std::string buf;
  for (std::size_t i = 0; i < truth.mu0.size(); ++i) {
    buf += std::to_string(i < ids.size() ? ids[i] : static_cast<std::int64_t>(i));
    buf += ',';
    format_double(buf, truth.mu0[i]);
    buf += ',';
    format_double(buf, truth.tau[i]);
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

std::vector<std::vector<std::size_t>> split_indices(std::size_t n_rows,
                                                    const std::vector<std::size_t>& sizes,
                                                    const SeedSpec& seed) {
  std::size_t total = 0;
  for (std::size_t s : sizes) total += s;
  if (total > n_rows) {
    throw ValidationError("split sizes sum to " + std::to_string(total) + " but only " +
                          std::to_string(n_rows) + " rows are available");
  }
  Rng rng(seed.stream("split"));
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sizes.size());
  std::size_t offset = 0;
  for (std::size_t s : sizes) {
    out.emplace_back(perm.begin() + offset, perm.begin() + offset + s);
    offset += s;
  }
  return out;
}

std::vector<PopulationFrame> split_frame(const PopulationFrame& frame,
                                         const std::vector<std::size_t>& sizes,
                                         const SeedSpec& seed) {
  std::vector<PopulationFrame> out;
  out.reserve(sizes.size());
  for (const auto& idx : split_indices(frame.rows(), sizes, seed)) {
    out.push_back(frame.take_rows(idx));
  }
  return out;
}

}  // namespace hsd
