#ifndef ZSSCENE_METRICS_CAPTION_HPP
#define ZSSCENE_METRICS_CAPTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/metrics/porter.hpp"
#include "zsscene/tokenize.hpp"

namespace zsscene::metrics
{
  inline constexpr std::size_t kMaxNgram = 4;
  inline constexpr double kBleuEpsilon = 1e-9;
  inline constexpr double kMeteorAlpha = 0.9;
  inline constexpr double kMeteorBeta = 3.0;
  inline constexpr double kMeteorGamma = 0.5;

  using NgramCounts = std::map<std::vector<std::string>, double>;

  inline NgramCounts ngram_counts(const Tokens& tokens, std::size_t n)
  {
    NgramCounts out;
    if (n == 0 || tokens.size() < n)
      return out;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
      out[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1;
    return out;
  }

  /// Sentence BLEU-4 in [0, 100]: clipped n-gram precisions for n = 1..4, a
  /// zero match count replaced by 1e-9, geometric mean, brevity penalty
  /// against the closest reference length (shorter wins ties).
  inline double bleu4(const Tokens& candidate, const std::vector<Tokens>& references)
  {
    if (references.empty())
      throw InvalidArgument("bleu4: no references");
    if (candidate.empty())
      return 0.0;
    double log_sum = 0;
    for (std::size_t n = 1; n <= kMaxNgram; ++n) {
      const auto cand = ngram_counts(candidate, n);
      NgramCounts max_ref;
      for (const auto& ref : references)
        for (const auto& [g, c] : ngram_counts(ref, n))
          max_ref[g] = std::max(max_ref[g], c);
      double clipped = 0, total = 0;
      for (const auto& [g, c] : cand) {
        total += c;
        auto it = max_ref.find(g);
        if (it != max_ref.end())
          clipped += std::min(c, it->second);
      }
      const double p = (clipped > 0 ? clipped : kBleuEpsilon) / std::max(total, 1.0);
      log_sum += std::log(p);
    }
    const double c = static_cast<double>(candidate.size());
    double r = static_cast<double>(references.front().size());
    for (const auto& ref : references) {
      const double len = static_cast<double>(ref.size());
      if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r))
        r = len;
    }
    const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(kMaxNgram));
  }

  /// Unigram alignment as (candidate index, reference index) pairs: exact
  /// matches first, then Porter-stem matches, each greedy left to right.
  inline std::vector<std::pair<std::size_t, std::size_t>> meteor_align(const Tokens& candidate, const Tokens& reference)
  {
    std::vector<bool> cand_used(candidate.size(), false), ref_used(reference.size(), false);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    auto pass = [&](auto&& key) {
      std::vector<std::string> ref_keys;
      for (const auto& t : reference)
        ref_keys.push_back(key(t));
      for (std::size_t i = 0; i != candidate.size(); ++i) {
        if (cand_used[i])
          continue;
        const auto k = key(candidate[i]);
        for (std::size_t j = 0; j != reference.size(); ++j)
          if (!ref_used[j] && ref_keys[j] == k) {
            cand_used[i] = ref_used[j] = true;
            out.emplace_back(i, j);
            break;
          }
      }
    };
    pass([](const std::string& t) { return t; });
    pass([](const std::string& t) { return porter_stem(t); });
    std::sort(out.begin(), out.end());
    return out;
  }

  inline double meteor_single(const Tokens& candidate, const Tokens& reference)
  {
    const auto align = meteor_align(candidate, reference);
    if (align.empty())
      return 0.0;
    const double m = static_cast<double>(align.size());
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(reference.size());
    const double fmean = p * r / (r + kMeteorAlpha * (p - r));
    std::size_t chunks = 1;
    for (std::size_t k = 1; k != align.size(); ++k)
      if (align[k].first != align[k - 1].first + 1 || align[k].second != align[k - 1].second + 1)
        ++chunks;
    const double penalty = kMeteorGamma * std::pow(static_cast<double>(chunks) / m, kMeteorBeta);
    return 100.0 * fmean * (1.0 - penalty);
  }

  /// METEOR-lite in [0, 100]: best score over references.
  inline double meteor_lite(const Tokens& candidate, const std::vector<Tokens>& references)
  {
    if (references.empty())
      throw InvalidArgument("meteor_lite: no references");
    double best = 0;
    for (const auto& ref : references)
      best = std::max(best, meteor_single(candidate, ref));
    return best;
  }

  struct CiderResult
  {
    double corpus = 0;                   // 10 x mean over ids
    std::map<std::string, double> per_id;  // 10 x per-id score
  };

  /// CIDEr in [0, 10]. TF is the n-gram count over the sentence's n-gram
  /// total; IDF = ln(N / (1 + df)) clamped at 0, with df counted over ids
  /// whose references contain the n-gram. Per n, the candidate vector is
  /// compared by cosine with the mean of its references' vectors.
  inline CiderResult cider(const std::map<std::string, Tokens>& candidates,
                           const std::map<std::string, std::vector<Tokens>>& references)
  {
    if (candidates.size() < 2)
      throw InvalidArgument("cider: needs at least 2 ids, got " + std::to_string(candidates.size()));
    for (const auto& [id, _] : candidates) {
      auto it = references.find(id);
      if (it == references.end() || it->second.empty())
        throw InvalidArgument("cider: no references for id '" + id + "'");
    }
    const double n_ids = static_cast<double>(candidates.size());
    CiderResult out;
    std::map<std::string, double> sums;
    for (std::size_t n = 1; n <= kMaxNgram; ++n) {
      std::map<std::vector<std::string>, double> df;
      for (const auto& [id, _] : candidates) {
        std::set<std::vector<std::string>> present;
        for (const auto& ref : references.at(id))
          for (const auto& [g, c] : ngram_counts(ref, n))
            present.insert(g);
        for (const auto& g : present)
          df[g] += 1;
      }
      auto idf = [&](const std::vector<std::string>& g) {
        auto it = df.find(g);
        const double d = it == df.end() ? 0.0 : it->second;
        return std::max(0.0, std::log(n_ids / (1.0 + d)));
      };
      auto tfidf = [&](const Tokens& toks) {
        NgramCounts v = ngram_counts(toks, n);
        double total = 0;
        for (const auto& [g, c] : v)
          total += c;
        for (auto& [g, c] : v)
          c = c / total * idf(g);
        return v;
      };
      for (const auto& [id, cand] : candidates) {
        const auto& refs = references.at(id);
        NgramCounts mean_ref;
        for (const auto& ref : refs)
          for (const auto& [g, w] : tfidf(ref))
            mean_ref[g] += w / static_cast<double>(refs.size());
        const auto cv = tfidf(cand);
        double dot = 0, nc = 0, nr = 0;
        for (const auto& [g, w] : cv) {
          nc += w * w;
          auto it = mean_ref.find(g);
          if (it != mean_ref.end())
            dot += w * it->second;
        }
        for (const auto& [g, w] : mean_ref)
          nr += w * w;
        const double cos = nc > 0 && nr > 0 ? dot / (std::sqrt(nc) * std::sqrt(nr)) : 0.0;
        sums[id] += cos / static_cast<double>(kMaxNgram);
      }
    }
    double total = 0;
    for (const auto& [id, s] : sums) {
      out.per_id[id] = 10.0 * s;
      total += s;
    }
    out.corpus = 10.0 * total / n_ids;
    return out;
  }
}

#endif
