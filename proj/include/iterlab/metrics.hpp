// Copyright 2026 The iterlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Behavioral-dynamics metrics over the turns of one run. Drift and volatility
// come from embeddings; novelty and growth come from the response text.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "iterlab/gateway.hpp"
#include "iterlab/types.hpp"

namespace iterlab {

/// 1 - cos(u, v), clamped to [0, 2]. Throws DimensionMismatch or ZeroVector.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v);

/// Drift from the first turn: element k holds 1 - cos(V(1), V(k+2)), i.e.
/// the series covers turns 2..T. Requires T >= 2.
std::vector<double> drift_from_origin(std::span<const EmbeddingVector> embeddings);

/// Turn-to-turn volatility for turns 2..T: 1 - cos(V(t-1), V(t)).
std::vector<double> turn_to_turn_volatility(
    std::span<const EmbeddingVector> embeddings);

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
/// UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

/// Distinct bigrams and trigrams of a text, pooled into one set. Each gram is
/// stored as its tokens joined by a single space.
class NGramSet {
 public:
  NGramSet() = default;
  explicit NGramSet(std::string_view text);

  const std::unordered_set<std::string>& grams() const { return grams_; }
  std::size_t token_count() const { return token_count_; }
  std::size_t size() const { return grams_.size(); }
  bool contains(const std::string& gram) const { return grams_.contains(gram); }
  void merge(const NGramSet& other);

 private:
  std::unordered_set<std::string> grams_;
  std::size_t token_count_ = 0;
};

/// Fraction of the distinct 2/3-grams of `turn_text` absent from every prior
/// text. Zero when `turn_text` has no grams.
double lexical_novelty(std::string_view turn_text,
                       std::span<const std::string> prior_texts);

/// Novelty for every turn of a conversation against all earlier turns.
std::vector<double> lexical_novelty_series(std::span<const std::string> texts);

/// Word count for IDEAS/MATH; non-empty lines of the last fenced code block
/// for CODING (whole response when it has no fenced block).
double growth_score(std::string_view text, Domain domain);

struct GrowthFactors {
  std::vector<double> scores;
  std::vector<std::optional<double>> factors;  // all null when degenerate
  bool degenerate = false;                     // G(1) == 0
};

GrowthFactors growth_factor_series(std::span<const std::string> texts,
                                   Domain domain);

/// Full metric suite for a run. `embeddings` must hold one vector per turn.
MetricSeries compute_metrics(const ConversationRun& run, Domain domain,
                             std::span<const EmbeddingVector> embeddings);

/// CSV with columns run_id, turn, drift, volatility, lexical_novelty,
/// growth_score, growth_factor. Missing values are empty cells.
std::string metrics_csv(std::span<const MetricSeries> series);

}  // namespace iterlab
