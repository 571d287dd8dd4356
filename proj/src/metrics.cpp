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

#include "iterlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "iterlab/errors.hpp"
#include "iterlab/evaluators.hpp"
#include "iterlab/util.hpp"

namespace iterlab {

double cosine_distance(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size() || u.empty()) {
    throw DimensionMismatch("cosine distance needs equal, nonzero dims");
  }
  long double dot = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const long double a = u[i], b = v[i];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0 || vv == 0) throw ZeroVector();
  // For u == v, sqrt(uu * vv) equals uu and the distance is exactly 0.
  const long double cosine = dot / std::sqrt(uu * vv);
  const double d = static_cast<double>(1.0L - cosine);
  return std::clamp(d, 0.0, 2.0);
}

double cosine_distance(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim != v.dim) throw DimensionMismatch("embedding dims differ");
  return cosine_distance(std::span<const double>(u.values),
                         std::span<const double>(v.values));
}

namespace {

void require_series(std::span<const EmbeddingVector> e) {
  if (e.size() < 2) throw PreconditionError("need at least two embeddings");
  for (const auto& v : e) {
    if (v.dim != e.front().dim) throw DimensionMismatch("embedding dims differ");
  }
}

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace

std::vector<double> drift_from_origin(std::span<const EmbeddingVector> embeddings) {
  require_series(embeddings);
  std::vector<double> out;
  for (std::size_t t = 1; t < embeddings.size(); ++t) {
    out.push_back(cosine_distance(embeddings[0], embeddings[t]));
  }
  return out;
}

std::vector<double> turn_to_turn_volatility(
    std::span<const EmbeddingVector> embeddings) {
  require_series(embeddings);
  std::vector<double> out;
  for (std::size_t t = 1; t < embeddings.size(); ++t) {
    out.push_back(cosine_distance(embeddings[t - 1], embeddings[t]));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                         : static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

NGramSet::NGramSet(std::string_view text) {
  const auto tokens = tokenize(text);
  token_count_ = tokens.size();
  for (std::size_t n = 2; n <= 3; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      grams_.insert(std::move(gram));
    }
  }
}

void NGramSet::merge(const NGramSet& other) {
  grams_.insert(other.grams_.begin(), other.grams_.end());
  token_count_ += other.token_count_;
}

namespace {

double novelty_against(const NGramSet& current, const NGramSet& seen) {
  if (current.size() == 0) return 0.0;
  std::size_t fresh = 0;
  for (const auto& g : current.grams()) {
    if (!seen.contains(g)) ++fresh;
  }
  return static_cast<double>(fresh) / static_cast<double>(current.size());
}

}  // namespace

double lexical_novelty(std::string_view turn_text,
                       std::span<const std::string> prior_texts) {
  NGramSet seen;
  for (const auto& p : prior_texts) seen.merge(NGramSet(p));
  return novelty_against(NGramSet(turn_text), seen);
}

std::vector<double> lexical_novelty_series(std::span<const std::string> texts) {
  std::vector<double> out;
  NGramSet seen;
  for (const auto& text : texts) {
    NGramSet current(text);
    out.push_back(novelty_against(current, seen));
    seen.merge(current);
  }
  return out;
}

namespace {

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::size_t count_nonempty_lines(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                              : nl - pos);
    if (std::any_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) == 0; })) {
      ++n;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return n;
}

}  // namespace

double growth_score(std::string_view text, Domain domain) {
  if (domain != Domain::kCoding) return static_cast<double>(count_words(text));
  if (auto block = last_fenced_block(text)) {
    return static_cast<double>(count_nonempty_lines(*block));
  }
  return static_cast<double>(count_nonempty_lines(text));
}

GrowthFactors growth_factor_series(std::span<const std::string> texts,
                                   Domain domain) {
  if (texts.empty()) throw PreconditionError("growth factor needs >= 1 turn");
  GrowthFactors out;
  for (const auto& t : texts) out.scores.push_back(growth_score(t, domain));
  const double first = out.scores.front();
  out.degenerate = first <= 0.0;
  for (double g : out.scores) {
    out.factors.push_back(out.degenerate ? std::nullopt
                                         : std::optional<double>(g / first));
  }
  if (!out.degenerate) out.factors.front() = 1.0;
  return out;
}

MetricSeries compute_metrics(const ConversationRun& run, Domain domain,
                             std::span<const EmbeddingVector> embeddings) {
  if (embeddings.size() != run.turns.size()) {
    throw PreconditionError("need one embedding per turn");
  }
  MetricSeries m;
  m.run_id = run.run_id;
  if (run.turns.empty()) return m;

  std::vector<std::string> texts;
  for (const auto& t : run.turns) texts.push_back(t.response_text);

  m.drift.push_back(0.0);
  if (embeddings.size() >= 2) {
    for (double d : drift_from_origin(embeddings)) m.drift.push_back(d);
    m.volatility = turn_to_turn_volatility(embeddings);
  }
  m.lexical_novelty = lexical_novelty_series(texts);
  auto growth = growth_factor_series(texts, domain);
  m.growth_score = std::move(growth.scores);
  m.growth_factor = std::move(growth.factors);
  m.growth_degenerate = growth.degenerate;
  return m;
}

std::string metrics_csv(std::span<const MetricSeries> series) {
  std::ostringstream os;
  os << "run_id,turn,drift,volatility,lexical_novelty,growth_score,growth_factor\n";
  for (const auto& m : series) {
    const std::size_t turns = m.lexical_novelty.size();
    for (std::size_t i = 0; i < turns; ++i) {
      os << m.run_id << ',' << (i + 1) << ',';
      if (i < m.drift.size()) os << format_double(m.drift[i]);
      os << ',';
      if (i >= 1 && i - 1 < m.volatility.size()) {
        os << format_double(m.volatility[i - 1]);
      }
      os << ',' << format_double(m.lexical_novelty[i]) << ',';
      if (i < m.growth_score.size()) os << format_double(m.growth_score[i]);
      os << ',';
      if (i < m.growth_factor.size() && m.growth_factor[i]) {
        os << format_double(*m.growth_factor[i]);
      }
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace iterlab
