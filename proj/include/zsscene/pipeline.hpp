#ifndef ZSSCENE_PIPELINE_HPP
#define ZSSCENE_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zsscene/config.hpp"
#include "zsscene/core/adam.hpp"
#include "zsscene/core/error.hpp"
#include "zsscene/core/ops.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tape.hpp"
#include "zsscene/data/dataset.hpp"
#include "zsscene/model.hpp"
#include "zsscene/objective.hpp"
#include "zsscene/tokenize.hpp"

namespace zsscene
{
  inline const std::vector<std::string>& default_templates()
  {
    static const std::vector<std::string> t{"a photo of a {}", "a scene containing a {}", "{}"};
    return t;
  }

  /// Candidate classes with their rendered prompt embeddings.
  template <class T>
  struct ClassPromptSet
  {
    std::vector<std::string> classes;
    std::vector<std::string> templates;
    Tensor<T> rendered;  // C x d, unit rows

    std::size_t size() const { return classes.size(); }

    std::size_t index_of(const std::string& name) const
    {
      auto it = std::find(classes.begin(), classes.end(), name);
      if (it == classes.end())
        throw InvalidArgument("unknown class '" + name + "'");
      return static_cast<std::size_t>(it - classes.begin());
    }
  };

  namespace detail
  {
    inline std::vector<Tokens> class_texts(const std::string& name, const std::vector<std::string>& templates)
    {
      std::vector<Tokens> out;
      for (const auto& t : templates)
        out.push_back(tokenize(render_prompt(t, name)));
      return out;
    }

    inline void validate_classes(const std::vector<std::string>& classes, const std::vector<std::string>& templates)
    {
      if (classes.size() < 2)
        throw InvalidArgument("class set needs at least 2 classes, got " + std::to_string(classes.size()));
      std::set<std::string> seen;
      for (const auto& c : classes)
        if (!seen.insert(c).second)
          throw InvalidArgument("duplicate class name '" + c + "'");
      if (templates.empty())
        throw InvalidArgument("class set needs at least one template");
      for (const auto& t : templates)
        render_prompt(t, "x");
    }
  }

  /// Class embeddings on a tape: mean over templates of encode_text, then
  /// renormalized. C x d.
  template <class T>
  Var<T> class_embeddings(const ModelState<T>& m, const ModelVars<T>& v, const std::vector<std::string>& classes,
                          const std::vector<std::string>& templates)
  {
    std::vector<Var<T>> rows;
    rows.reserve(classes.size());
    for (const auto& c : classes)
      rows.push_back(ops::mean_rows(forward_texts(m, v, detail::class_texts(c, templates))));
    return ops::l2norm_rows(ops::concat_rows(rows));
  }

  template <class T>
  ClassPromptSet<T> make_class_set(const ModelState<T>& m, std::vector<std::string> classes,
                                   std::vector<std::string> templates = default_templates())
  {
    detail::validate_classes(classes, templates);
    ClassPromptSet<T> set{std::move(classes), std::move(templates), {}};
    Tape<T> tape;
    auto v = bind(tape, m, Trainable::none());
    set.rendered = class_embeddings(m, v, set.classes, set.templates).value();
    return set;
  }

  /// Re-renders the class embeddings after the text side changed.
  template <class T>
  void rerender(ClassPromptSet<T>& set, const ModelState<T>& m)
  {
    set = make_class_set(m, std::move(set.classes), std::move(set.templates));
  }

  template <class T>
  struct Prediction
  {
    std::string id;
    std::string label;
    std::size_t index = 0;
    double score = 0;
    std::vector<double> per_class;
    std::vector<std::size_t> ranking;  // class indices, best first
    std::vector<double> relevance;     // per graph node
    AttentionTensor<T> attention;      // final GAT layer
  };

  /// Class indices by descending score; ties keep the lower index first.
  inline std::vector<std::size_t> rank_scores(std::span<const double> scores)
  {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
  }

  /// Mean attention mass received by each node, renormalized to sum 1.
  template <class T>
  std::vector<double> node_relevance(const Tensor<T>& alpha)
  {
    const std::size_t m = alpha.rows();
    std::vector<double> rel(m, 0.0);
    for (std::size_t i = 0; i != m; ++i)
      for (std::size_t j = 0; j != m; ++j)
        rel[j] += static_cast<double>(alpha(i, j));
    const double total = std::accumulate(rel.begin(), rel.end(), 0.0);
    for (auto& r : rel)
      r = total > 0 ? r / total : 1.0 / static_cast<double>(m);
    return rel;
  }

  /// Scores one embedding against the class set.
  template <class T>
  Prediction<T> score_embedding(std::span<const T> z, const ClassPromptSet<T>& set)
  {
    if (set.size() < 2)
      throw InvalidArgument("class set needs at least 2 classes");
    if (z.size() != set.rendered.cols())
      throw ShapeError("zero_shot_classify", 1, z.size(), set.rendered.rows(), set.rendered.cols());
    Prediction<T> p;
    p.per_class.resize(set.size());
    for (std::size_t c = 0; c != set.size(); ++c)
      p.per_class[c] = static_cast<double>(cosine_similarity<T>(z, set.rendered.row_span(c)));
    p.ranking = rank_scores(p.per_class);
    p.index = p.ranking.front();
    p.label = set.classes[p.index];
    p.score = p.per_class[p.index];
    return p;
  }

  /// Fused image embeddings, one unit row per record.
  template <class T>
  Tensor<T> embed_images(const ModelState<T>& m, std::span<const SceneRecord* const> records)
  {
    Tape<T> tape;
    auto v = bind(tape, m, Trainable::none());
    return forward_images(tape, m, v, records).fused.value();
  }

  template <class T>
  std::vector<Prediction<T>> zero_shot_classify(std::span<const SceneRecord* const> records,
                                                const ClassPromptSet<T>& set, const ModelState<T>& m)
  {
    std::vector<Prediction<T>> out;
    if (records.empty())
      return out;
    Tape<T> tape;
    auto v = bind(tape, m, Trainable::none());
    auto fwd = forward_images(tape, m, v, records);
    const auto& z = fwd.fused.value();
    for (std::size_t i = 0; i != records.size(); ++i) {
      auto p = score_embedding<T>(z.row_span(i), set);
      p.id = records[i]->id;
      p.attention = {fwd.neighborhoods[i], fwd.final_alpha[i].value()};
      p.relevance = node_relevance(p.attention.alpha);
      out.push_back(std::move(p));
    }
    return out;
  }

  template <class T>
  Prediction<T> zero_shot_classify(const SceneRecord& record, const ClassPromptSet<T>& set, const ModelState<T>& m)
  {
    const SceneRecord* ptr = &record;
    return zero_shot_classify<T>(std::span<const SceneRecord* const>(&ptr, 1), set, m).front();
  }

  template <class T>
  std::vector<Prediction<T>> zero_shot_classify(const Dataset& records, const ClassPromptSet<T>& set,
                                                const ModelState<T>& m, std::size_t chunk = 64)
  {
    std::vector<const SceneRecord*> ptrs;
    for (const auto& r : records)
      ptrs.push_back(&r);
    std::vector<Prediction<T>> out;
    for (std::size_t b = 0; b < ptrs.size(); b += chunk) {
      const std::size_t e = std::min(ptrs.size(), b + chunk);
      auto part = zero_shot_classify<T>(std::span<const SceneRecord* const>(ptrs.data() + b, e - b), set, m);
      std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
  }

  template <class T>
  struct FeedbackResult
  {
    ModelState<T> model;
    ClassPromptSet<T> classes;
    Prediction<T> before;
    Prediction<T> after;
    double applied_rate = 0;  // step size actually taken
  };

  inline constexpr int kFeedbackHalvings = 30;

  /// One SGD step on the fusion parameters and prompt vectors along the
  /// gradient of -log softmax(per_class / tau) at the correct class, then
  /// reclassifies. The rate starts at `lr` and is halved until the correct
  /// class similarity does not drop; if no rate qualifies the model is kept.
  template <class T>
  FeedbackResult<T> feedback_update(const ModelState<T>& model, const SceneRecord& record,
                                    const std::string& correct_label, const ClassPromptSet<T>& classes, double lr)
  {
    const std::size_t target = classes.index_of(correct_label);
    if (!(lr >= 0.0) || !std::isfinite(lr))
      throw InvalidArgument("feedback learning rate must be finite and >= 0");
    FeedbackResult<T> out{model, classes, zero_shot_classify(record, classes, model), {}};
    if (lr == 0.0) {
      out.after = out.before;
      return out;
    }

    Tape<T> tape;
    Trainable tr;
    tr.prompts = true;
    tr.fusion = true;
    auto v = bind(tape, model, tr);
    const SceneRecord* ptr = &record;
    auto z = forward_images(tape, model, v, std::span<const SceneRecord* const>(&ptr, 1)).fused;
    auto cls = class_embeddings(model, v, classes.classes, classes.templates);
    auto logits = ops::scale(ops::matmul_bt(z, cls), static_cast<T>(1.0 / model.tau()));
    auto loss = ops::scale(ops::pick(ops::log_softmax_rows(logits), std::vector<std::size_t>{target}), T(-1));
    tape.backward(ops::sum(loss));

    const auto g_prompts = tape.grad(v.prompts);
    const auto g_proj = tape.grad(v.fusion_proj);
    const auto g_gate = tape.grad(v.fusion_gate);
    auto step = [](Tensor<T>& p, const Tensor<T>& g, double rate) {
      for (std::size_t k = 0; k != p.size(); ++k)
        p[k] = static_cast<T>(p[k] - rate * g[k]);
    };

    double rate = lr;
    for (int attempt = 0; attempt != kFeedbackHalvings; ++attempt, rate *= 0.5) {
      ModelState<T> cand = model;
      step(cand.prompts.vectors, g_prompts, rate);
      step(cand.fusion.proj, g_proj, rate);
      if (model.fusion.enabled)
        step(cand.fusion.gate, g_gate, rate);
      ClassPromptSet<T> set = classes;
      rerender(set, cand);
      auto after = zero_shot_classify(record, set, cand);
      if (after.per_class[target] >= out.before.per_class[target]) {
        out.model = std::move(cand);
        out.classes = std::move(set);
        out.after = std::move(after);
        out.applied_rate = rate;
        return out;
      }
    }
    out.after = out.before;
    return out;
  }

  template <class T>
  struct TrainResult
  {
    std::vector<double> epoch_loss;  // mean batch loss per epoch
  };

  /// Contrastive training over (image, caption) pairs with Adam. Batches are
  /// drawn from a seeded shuffle each epoch; a final short batch is kept
  /// when it has at least two pairs.
  template <class T>
  TrainResult<T> train(ModelState<T>& m, const Dataset& data, const RunConfig& cfg,
                       const std::function<void(std::size_t, double)>& on_epoch = {})
  {
    cfg.validate();
    if (data.empty())
      throw InvalidArgument("train: dataset is empty");
    if (data.size() < 2)
      throw InvalidArgument("train: contrastive training needs at least 2 pairs");
    if (cfg.batch_size > data.size())
      throw InvalidArgument("train: batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size "
                            + std::to_string(data.size()));
    if (cfg.batch_size < 2)
      throw InvalidArgument("train: batch_size must be at least 2");

    std::vector<Tokens> captions;
    for (const auto& r : data)
      captions.push_back(tokenize(r.caption));

    Adam<T> adam(AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon});
    SeededRng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    TrainResult<T> result;
    const Trainable tr = Trainable::all(cfg.trainable_temperature);

    for (std::size_t epoch = 0; epoch != cfg.epochs; ++epoch) {
      rng.shuffle(order.begin(), order.end());
      double total = 0;
      std::size_t batches = 0;
      for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
        const std::size_t e = std::min(order.size(), b + cfg.batch_size);
        if (e - b < 2)
          break;
        std::vector<const SceneRecord*> recs;
        std::vector<Tokens> texts;
        for (std::size_t k = b; k != e; ++k) {
          recs.push_back(&data[order[k]]);
          texts.push_back(captions[order[k]]);
        }

        Tape<T> tape;
        auto v = bind(tape, m, tr);
        Var<T> loss;
        try {
          auto z = forward_images(tape, m, v, recs).fused;
          auto t = forward_texts(m, v, texts);
          loss = contrastive_loss(z, t, v.log_tau, cfg.symmetric_loss);
        } catch (const NumericError& err) {
          throw NumericError("train: epoch " + std::to_string(epoch + 1) + " step " + std::to_string(batches + 1)
                             + ": " + err.what());
        }
        const double lv = static_cast<double>(loss.value().item());
        if (!std::isfinite(lv))
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + " step "
                             + std::to_string(batches + 1));
        tape.backward(loss);

        std::vector<Tensor<T>*> params;
        std::vector<Tensor<T>> grads;
        auto add = [&](Tensor<T>& p, Var<T> var) {
          params.push_back(&p);
          grads.push_back(tape.grad(var));
        };
        add(m.vision.w1, v.vision.w1);
        add(m.vision.b1, v.vision.b1);
        add(m.vision.w2, v.vision.w2);
        add(m.vision.b2, v.vision.b2);
        add(m.text.table, v.text.table);
        add(m.text.proj, v.text.proj);
        add(m.prompts.vectors, v.prompts);
        for (std::size_t l = 0; l != m.gat.layers.size(); ++l) {
          add(m.gat.layers[l].w, v.gat[l].w);
          add(m.gat.layers[l].a, v.gat[l].a);
        }
        add(m.fusion.proj, v.fusion_proj);
        add(m.fusion.gate, v.fusion_gate);
        add(m.log_tau, v.log_tau);
        adam.step(params, grads);

        total += lv;
        ++batches;
      }
      const double mean = total / static_cast<double>(batches);
      result.epoch_loss.push_back(mean);
      if (on_epoch)
        on_epoch(epoch + 1, mean);
    }
    return result;
  }

  /// Image and caption embeddings for a dataset, row-aligned, as doubles.
  template <class T>
  std::pair<Tensor<double>, Tensor<double>> embed_pairs(const ModelState<T>& m, const Dataset& data,
                                                        std::size_t chunk = 64)
  {
    Tensor<double> img(data.size(), m.d()), txt(data.size(), m.d());
    for (std::size_t b = 0; b < data.size(); b += chunk) {
      const std::size_t e = std::min(data.size(), b + chunk);
      std::vector<const SceneRecord*> recs;
      std::vector<Tokens> texts;
      for (std::size_t k = b; k != e; ++k) {
        recs.push_back(&data[k]);
        texts.push_back(tokenize(data[k].caption));
      }
      Tape<T> tape;
      auto v = bind(tape, m, Trainable::none());
      const auto& zi = forward_images(tape, m, v, recs).fused.value();
      const auto& zt = forward_texts(m, v, texts).value();
      for (std::size_t i = 0; i != e - b; ++i)
        for (std::size_t c = 0; c != m.d(); ++c) {
          img(b + i, c) = static_cast<double>(zi(i, c));
          txt(b + i, c) = static_cast<double>(zt(i, c));
        }
    }
    return {std::move(img), std::move(txt)};
  }
}

#endif
