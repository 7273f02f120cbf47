#ifndef ZSSCENE_EVALUATE_HPP
#define ZSSCENE_EVALUATE_HPP

#include <chrono>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zsscene/data/dataset.hpp"
#include "zsscene/data/split.hpp"
#include "zsscene/metrics/caption.hpp"
#include "zsscene/metrics/ranking.hpp"
#include "zsscene/metrics/report.hpp"
#include "zsscene/pipeline.hpp"

namespace zsscene
{
  struct EvalOptions
  {
    metrics::ZsMode mode = metrics::ZsMode::classic;
    std::vector<std::string> templates = default_templates();
    std::map<std::string, std::string> candidate_captions;  // id -> generated caption
    std::string run = "run";
  };

  template <class T>
  struct EvalResult
  {
    metrics::MetricsReport report;
    std::vector<Prediction<T>> predictions;
    std::vector<std::string> unseen;
    std::vector<std::string> warnings;
  };

  template <class T>
  metrics::RankedPrediction ranked(const Prediction<T>& p, const ClassPromptSet<T>& set, const std::string& truth)
  {
    metrics::RankedPrediction r{p.id, {}, truth};
    for (auto c : p.ranking)
      r.ranking.push_back(set.classes[c]);
    return r;
  }

  /// Scores the test split (the whole dataset if it has no test records)
  /// against `classes`. Unseen classes are those with no train record.
  /// Embedding cosine is measured on the train split when one exists.
  template <class T>
  EvalResult<T> evaluate(const ModelState<T>& m, const Dataset& data, const std::vector<std::string>& classes,
                         const EvalOptions& opt = {})
  {
    EvalResult<T> out;
    auto set = make_class_set(m, classes, opt.templates);
    const std::set<std::string> known(classes.begin(), classes.end());

    Dataset eval, train;
    for (const auto& r : data)
      (r.split == Split::test ? eval : train).push_back(r);
    if (eval.empty())
      eval = train;
    if (eval.empty())
      throw InvalidArgument("eval: dataset is empty");
    for (const auto& r : eval)
      if (!known.count(r.label))
        throw InvalidArgument("eval: record " + r.id + " has label '" + r.label + "' missing from the class list");

    out.unseen = infer_unseen(data, classes);
    const std::set<std::string> unseen(out.unseen.begin(), out.unseen.end());

    const auto t0 = std::chrono::steady_clock::now();
    out.predictions = zero_shot_classify(eval, set, m);
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<metrics::RankedPrediction> ranks;
    for (std::size_t i = 0; i != eval.size(); ++i)
      ranks.push_back(ranked(out.predictions[i], set, eval[i].label));

    auto& rep = out.report;
    rep.run = opt.run;
    rep.zs_mode = std::string(metrics::to_string(opt.mode));
    rep.set("top1", metrics::topk_accuracy(ranks, 1));
    rep.set("top5", metrics::topk_accuracy(ranks, 5));

    const bool has_unseen_truth =
      std::any_of(eval.begin(), eval.end(), [&](const SceneRecord& r) { return unseen.count(r.label) > 0; });
    if (has_unseen_truth) {
      for (auto mode : {metrics::ZsMode::classic, metrics::ZsMode::generalized}) {
        const std::string suffix = mode == metrics::ZsMode::classic ? "_classic" : "_generalized";
        const double h1 = metrics::zs_hit_at_k(ranks, 1, unseen, mode);
        const double h5 = metrics::zs_hit_at_k(ranks, 5, unseen, mode);
        rep.set("zs_hit1" + suffix, h1);
        rep.set("zs_hit5" + suffix, h5);
        if (mode == opt.mode) {
          rep.set("zs_hit1", h1);
          rep.set("zs_hit5", h5);
        }
      }
      rep.set("f1_unseen", metrics::f1_unseen(ranks, unseen));
    } else {
      out.warnings.push_back("no test record has an unseen class; zero-shot metrics omitted");
    }

    std::vector<metrics::ScoredClass> scored(set.size());
    for (std::size_t c = 0; c != set.size(); ++c)
      for (std::size_t i = 0; i != eval.size(); ++i) {
        scored[c].scores.push_back(out.predictions[i].per_class[c]);
        scored[c].relevant.push_back(eval[i].label == set.classes[c]);
      }
    rep.set("map", metrics::mean_average_precision(scored));

    const auto& pairs = train.empty() ? eval : train;
    auto [img, txt] = embed_pairs(m, pairs);
    rep.set("mean_cosine", metrics::mean_pair_cosine(img, txt));

    double entropy = 0;
    std::size_t graphs = 0;
    for (const auto& p : out.predictions)
      if (p.attention.alpha.rows() >= 2) {
        entropy += attention_entropy(p.attention);
        ++graphs;
      }
    if (graphs)
      rep.set("attention_entropy", entropy / static_cast<double>(graphs));

    rep.set("inference_ms_per_record",
            std::chrono::duration<double, std::milli>(t1 - t0).count() / static_cast<double>(eval.size()));

    if (!opt.candidate_captions.empty()) {
      std::map<std::string, std::vector<Tokens>> refs;
      for (const auto& r : data)
        refs[r.id].push_back(tokenize(r.caption));
      std::map<std::string, Tokens> cands;
      double bleu = 0, meteor = 0;
      for (const auto& [id, cap] : opt.candidate_captions) {
        auto it = refs.find(id);
        if (it == refs.end())
          throw InvalidArgument("eval: caption id '" + id + "' has no reference in the dataset");
        cands[id] = tokenize(cap);
        bleu += metrics::bleu4(cands[id], it->second);
        meteor += metrics::meteor_lite(cands[id], it->second);
      }
      const double n = static_cast<double>(cands.size());
      rep.set("bleu4", bleu / n);
      rep.set("meteor", meteor / n);
      if (cands.size() >= 2)
        rep.set("cider", metrics::cider(cands, refs).corpus);
      else
        out.warnings.push_back("CIDEr needs at least 2 caption ids; omitted");
    }
    return out;
  }
}

#endif
