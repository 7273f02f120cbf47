#ifndef ZSSCENE_METRICS_RANKING_HPP
#define ZSSCENE_METRICS_RANKING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/tensor.hpp"

namespace zsscene::metrics
{
  struct RankedPrediction
  {
    std::string id;
    std::vector<std::string> ranking;  // best first, no duplicates
    std::string truth;

    void validate() const
    {
      std::set<std::string_view> seen;
      for (const auto& c : ranking)
        if (!seen.insert(c).second)
          throw InvalidArgument("prediction " + id + ": class '" + c + "' ranked twice");
    }
  };

  enum class ZsMode { classic, generalized };

  inline ZsMode parse_zs_mode(std::string_view s)
  {
    if (s == "classic")
      return ZsMode::classic;
    if (s == "generalized")
      return ZsMode::generalized;
    throw InvalidArgument("zero-shot mode must be classic or generalized, got '" + std::string(s) + "'");
  }

  inline std::string_view to_string(ZsMode m) { return m == ZsMode::classic ? "classic" : "generalized"; }

  namespace detail
  {
    inline bool in_top_k(const std::vector<std::string>& ranking, const std::string& truth, std::size_t k)
    {
      const auto end = ranking.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranking.size()));
      return std::find(ranking.begin(), end, truth) != end;
    }
  }

  /// Fraction of predictions whose truth is among the first k ranks.
  inline double topk_accuracy(std::span<const RankedPrediction> preds, std::size_t k)
  {
    if (k == 0)
      throw InvalidArgument("topk_accuracy: k must be >= 1");
    if (preds.empty())
      throw InvalidArgument("topk_accuracy: no predictions");
    std::size_t hits = 0;
    for (const auto& p : preds) {
      p.validate();
      hits += detail::in_top_k(p.ranking, p.truth, k);
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
  }

  /// Top-k accuracy over unseen-truth records. Classic mode drops seen
  /// candidates from each ranking first.
  inline double zs_hit_at_k(std::span<const RankedPrediction> preds, std::size_t k,
                            const std::set<std::string>& unseen, ZsMode mode)
  {
    if (unseen.empty())
      throw InvalidArgument("zs_hit_at_k: unseen class set is empty");
    std::vector<RankedPrediction> kept;
    for (const auto& p : preds) {
      if (!unseen.count(p.truth))
        continue;
      RankedPrediction q = p;
      if (mode == ZsMode::classic)
        std::erase_if(q.ranking, [&](const std::string& c) { return !unseen.count(c); });
      kept.push_back(std::move(q));
    }
    if (kept.empty())
      throw InvalidArgument("zs_hit_at_k: no records with an unseen ground truth");
    return topk_accuracy(kept, k);
  }

  /// Scores of every record for one class, with binary relevance.
  struct ScoredClass
  {
    std::vector<double> scores;
    std::vector<bool> relevant;
  };

  /// All-point AP: mean precision at the rank of each positive. Ranking is
  /// by descending score, lower index first on ties.
  inline double average_precision(const ScoredClass& c)
  {
    if (c.scores.size() != c.relevant.size())
      throw InvalidArgument("average_precision: scores and relevance differ in length");
    std::vector<std::size_t> order(c.scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.scores[a] > c.scores[b]; });
    double sum = 0;
    std::size_t positives = 0;
    for (std::size_t r = 0; r != order.size(); ++r) {
      if (!c.relevant[order[r]])
        continue;
      ++positives;
      sum += static_cast<double>(positives) / static_cast<double>(r + 1);
    }
    return positives ? sum / static_cast<double>(positives) : 0.0;
  }

  /// Unweighted mean AP over classes with at least one positive.
  inline double mean_average_precision(std::span<const ScoredClass> classes)
  {
    double sum = 0;
    std::size_t used = 0;
    for (const auto& c : classes) {
      if (std::find(c.relevant.begin(), c.relevant.end(), true) == c.relevant.end())
        continue;
      sum += average_precision(c);
      ++used;
    }
    if (!used)
      throw InvalidArgument("mean_average_precision: no class has a positive");
    return sum / static_cast<double>(used);
  }

  /// Micro F1 over unseen classes with the top-1 label as the prediction.
  inline double f1_unseen(std::span<const RankedPrediction> preds, const std::set<std::string>& unseen)
  {
    if (unseen.empty())
      throw InvalidArgument("f1_unseen: unseen class set is empty");
    std::size_t predicted = 0, truths = 0, correct = 0;
    for (const auto& p : preds) {
      const bool pred_unseen = !p.ranking.empty() && unseen.count(p.ranking.front());
      const bool truth_unseen = unseen.count(p.truth) > 0;
      predicted += pred_unseen;
      truths += truth_unseen;
      correct += pred_unseen && truth_unseen && p.ranking.front() == p.truth;
    }
    const double precision = predicted ? static_cast<double>(correct) / static_cast<double>(predicted) : 0.0;
    const double recall = truths ? static_cast<double>(correct) / static_cast<double>(truths) : 0.0;
    return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }

  /// Mean row-wise cosine between matched embeddings.
  template <class T>
  double mean_pair_cosine(const Tensor<T>& v, const Tensor<T>& t)
  {
    if (v.rows() != t.rows() || v.cols() != t.cols())
      throw ShapeError("mean_pair_cosine", v.rows(), v.cols(), t.rows(), t.cols());
    if (v.rows() == 0)
      throw InvalidArgument("mean_pair_cosine: no pairs");
    double sum = 0;
    for (std::size_t i = 0; i != v.rows(); ++i) {
      double dot = 0, nv = 0, nt = 0;
      for (std::size_t k = 0; k != v.cols(); ++k) {
        const double a = static_cast<double>(v(i, k)), b = static_cast<double>(t(i, k));
        dot += a * b;
        nv += a * a;
        nt += b * b;
      }
      if (nv == 0 || nt == 0)
        throw InvalidArgument("mean_pair_cosine: zero-norm row " + std::to_string(i));
      sum += std::clamp(dot / (std::sqrt(nv) * std::sqrt(nt)), -1.0, 1.0);
    }
    return sum / static_cast<double>(v.rows());
  }
}

#endif
