/*
 * Copyright 2026 The SOAP-AP Authors.
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

// Labelled datasets, synthetic generators, CSV interchange and the
// stratified with-replacement minibatch sampler.

#ifndef SOAP_DATA_HPP_
#define SOAP_DATA_HPP_

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soap/error.hpp"
#include "soap/matrix.hpp"

namespace soap {

// Seeds a generator from (seed, stream) so that the split, the model init
// and the sampler of one run draw from unrelated sequences.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

struct Dataset {
  Matrix X;
  std::vector<int> y;                 // +1 / -1
  std::vector<std::size_t> pos_idx;   // ascending indices with y == +1

  std::size_t size() const { return y.size(); }
  std::size_t n_pos() const { return pos_idx.size(); }
  std::size_t dim() const { return X.cols(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline Dataset make_dataset(Matrix X, std::vector<int> y) {
  if (X.rows() != y.size()) {
    throw UsageError("feature rows (" + std::to_string(X.rows()) +
                     ") != labels (" + std::to_string(y.size()) + ")");
  }
  for (double v : X.data()) {
    if (!std::isfinite(v)) throw NumericError("non-finite feature value");
  }
  Dataset d{std::move(X), std::move(y), {}};
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (d.y[i] == 1) {
      d.pos_idx.push_back(i);
    } else if (d.y[i] != -1) {
      throw UsageError("label at index " + std::to_string(i) +
                       " is not +1/-1");
    }
  }
  return d;
}

// Rows in the given order; duplicates allowed.
inline Dataset subset(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<int> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) y[k] = data.y[rows[k]];
  return make_dataset(data.X.gather(rows), std::move(y));
}

// Positives ~ N(+sep/2 * 1, I), negatives ~ N(-sep/2 * 1, I), with exactly
// round(n * ratio) positives at random positions.
inline Dataset gen_gaussians(std::size_t n, std::size_t d, double ratio,
                             double sep, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw UsageError("ratio must lie in (0,1)");
  }
  if (d == 0) throw UsageError("dimension must be >= 1");
  if (!std::isfinite(sep)) throw UsageError("separation must be finite");
  const auto n_pos =
      static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratio));
  if (n_pos == 0) {
    throw UsageError("n * ratio rounds to zero positives");
  }
  auto rng = make_rng(seed, 0x6761757373ULL);
  std::vector<int> y(n, -1);
  std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  std::shuffle(y.begin(), y.end(), rng);
  Matrix X(n, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = 0.5 * sep * y[i];
    for (double& v : X.row(i)) v = mu + normal(rng);
  }
  return make_dataset(std::move(X), std::move(y));
}

// Keeps round(n+ * keep) positives drawn uniformly and every negative,
// preserving row order.
inline Dataset subsample_positives(const Dataset& data, double keep,
                                   std::uint64_t seed) {
  if (!(keep > 0.0 && keep <= 1.0)) {
    throw UsageError("keep fraction must lie in (0,1]");
  }
  const auto kept = static_cast<std::size_t>(
      std::llround(static_cast<double>(data.n_pos()) * keep));
  if (kept == 0) throw UsageError("subsampling leaves no positives");
  auto chosen = data.pos_idx;
  auto rng = make_rng(seed, 0x737562ULL);
  std::shuffle(chosen.begin(), chosen.end(), rng);
  chosen.resize(kept);
  std::vector<char> keep_row(data.size(), 0);
  for (auto i : chosen) keep_row[i] = 1;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] != 1 || keep_row[i]) rows.push_back(i);
  }
  return subset(data, rows);
}

// CSV: header "f0,...,f{d-1},label", one example per row. Labels {0,1} or
// {-1,1}; 0 maps to -1.
inline Dataset parse_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    const auto last = line.substr(line.rfind(',') == std::string::npos
                                      ? 0
                                      : line.rfind(',') + 1);
    if (cols < 2 || last != "label") {
      throw ParseError(lineno, "header must be f0,...,f{d-1},label");
    }
    break;
  }
  if (cols == 0) throw UsageError("CSV has no header");
  const std::size_t d = cols - 1;
  std::vector<double> values;
  std::vector<int> y;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (c + 1 < cols ? (ptr == end || *ptr != ',')
                                             : ptr != end)) {
        throw ParseError(lineno, "expected " + std::to_string(cols) +
                                     " numeric fields");
      }
      p = ptr + 1;
      if (c < d) {
        if (!std::isfinite(v)) throw ParseError(lineno, "non-finite feature");
        values.push_back(v);
      } else if (v == 1.0) {
        y.push_back(1);
      } else if (v == 0.0 || v == -1.0) {
        y.push_back(-1);
      } else {
        throw ParseError(lineno, "label must be one of -1, 0, 1");
      }
    }
  }
  if (y.empty()) throw UsageError("CSV contains no examples");
  const std::size_t n = y.size();
  return make_dataset(Matrix(n, d, std::move(values)), std::move(y));
}

inline Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return parse_csv(in);
}

inline void write_csv(std::ostream& os, const Dataset& data) {
  for (std::size_t c = 0; c < data.dim(); ++c) os << 'f' << c << ',';
  os << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.X.row(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g,", v);
      os << buf;
    }
    os << data.y[i] << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path + "'");
  write_csv(out, data);
}

struct Batch {
  std::vector<std::size_t> pos;  // B+ draws from the positives
  std::vector<std::size_t> all;  // B draws from the whole dataset
};

// Each step draws B+ positives and B examples uniformly with replacement.
// The two draws are independent unless nested is set, in which case `all`
// is the B+ positives followed by B - B+ general draws.
class StratifiedSampler {
 public:
  StratifiedSampler(const Dataset& data, std::size_t batch_pos,
                    std::size_t batch, std::uint64_t seed, bool nested = false)
      : pos_idx_(data.pos_idx),
        n_(data.size()),
        batch_pos_(batch_pos),
        batch_(batch),
        nested_(nested),
        rng_(make_rng(seed, 0x73616d70ULL)) {
    if (batch_pos == 0 || batch == 0) {
      throw UsageError("batch sizes must be >= 1");
    }
    if (pos_idx_.empty()) throw UsageError("sampler needs >= 1 positive");
    if (nested && batch < batch_pos) {
      throw UsageError("nested batches need B >= B_pos");
    }
  }

  Batch next() {
    Batch b;
    std::uniform_int_distribution<std::size_t> pick_pos(0, pos_idx_.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_all(0, n_ - 1);
    b.pos.reserve(batch_pos_);
    for (std::size_t k = 0; k < batch_pos_; ++k) {
      b.pos.push_back(pos_idx_[pick_pos(rng_)]);
    }
    b.all.reserve(batch_);
    if (nested_) b.all = b.pos;
    while (b.all.size() < batch_) b.all.push_back(pick_all(rng_));
    return b;
  }

 private:
  std::vector<std::size_t> pos_idx_;
  std::size_t n_;
  std::size_t batch_pos_;
  std::size_t batch_;
  bool nested_;
  std::mt19937_64 rng_;
};

inline StratifiedSampler stratified_batches(const Dataset& data,
                                            std::size_t batch_pos,
                                            std::size_t batch,
                                            std::uint64_t seed) {
  return StratifiedSampler(data, batch_pos, batch, seed);
}

struct Split {
  Dataset train, val, test;
};

// Splits positives and negatives independently. Val and test receive
// round(fraction * class count) of each class; train gets the rest.
inline Split stratified_split(const Dataset& data,
                              std::array<double, 3> fractions,
                              std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw UsageError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw UsageError("split fractions must sum to 1");
  }
  std::vector<std::size_t> pos = data.pos_idx, neg;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] != 1) neg.push_back(i);
  }
  auto rng = make_rng(seed, 0x73706c6974ULL);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::array<std::vector<std::size_t>, 3> parts;
  auto deal = [&](const std::vector<std::size_t>& idx, bool positives) {
    const auto count = [&](double f) {
      return static_cast<std::size_t>(
          std::llround(f * static_cast<double>(idx.size())));
    };
    const std::size_t n_val = count(fractions[1]);
    const std::size_t n_test = count(fractions[2]);
    if (n_val + n_test >= idx.size() && !idx.empty()) {
      throw UsageError("split leaves no training examples");
    }
    const std::size_t n_train = idx.size() - n_val - n_test;
    if (positives && (n_val == 0 || n_test == 0 || n_train == 0)) {
      throw UsageError("split leaves a partition without positives (n+ = " +
                       std::to_string(idx.size()) + ")");
    }
    parts[0].insert(parts[0].end(), idx.begin(), idx.begin() + n_train);
    parts[1].insert(parts[1].end(), idx.begin() + n_train,
                    idx.begin() + n_train + n_val);
    parts[2].insert(parts[2].end(), idx.begin() + n_train + n_val, idx.end());
  };
  deal(pos, true);
  deal(neg, false);
  for (auto& p : parts) std::sort(p.begin(), p.end());
  return {subset(data, parts[0]), subset(data, parts[1]),
          subset(data, parts[2])};
}

}  // namespace soap

#endif  // SOAP_DATA_HPP_
