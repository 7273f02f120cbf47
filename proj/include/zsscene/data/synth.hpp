#ifndef ZSSCENE_DATA_SYNTH_HPP
#define ZSSCENE_DATA_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/core/tensor.hpp"
#include "zsscene/data/dataset.hpp"
#include "zsscene/data/split.hpp"

namespace zsscene
{
  struct SynthConfig
  {
    std::size_t num_classes = 12;
    std::size_t unseen_count = 4;
    std::size_t latent_dim = 16;
    std::size_t feature_dim = 32;
    std::size_t samples_per_class = 50;
    double feature_noise = 0.1;
    std::size_t regions_min = 2;
    std::size_t regions_max = 5;
    std::size_t vocab_per_class = 3;
    std::uint64_t seed = 42;

    void validate() const;
  };

  namespace synth_words
  {
    inline constexpr std::array<std::string_view, 16> kAttributes{
      "red", "blue", "green", "yellow", "black", "white", "striped", "spotted",
      "wooden", "metal", "small", "large", "old", "bright", "dusty", "frozen"};
    inline constexpr std::array<std::string_view, 16> kObjects{
      "bird", "car", "tree", "boat", "house", "dog", "chair", "lamp",
      "kite", "bench", "hydrant", "lighthouse", "bicycle", "tower", "bridge", "horse"};
    inline constexpr std::array<std::string_view, 12> kModifiers{
      "outdoors", "indoors", "today", "nearby", "closeup", "again",
      "alone", "outside", "downtown", "overhead", "tonight", "yesterday"};
  }

  /// Class grid: classes are (attribute, object) pairs laid out row-major
  /// over an attributes x objects grid.
  struct ClassGrid
  {
    std::size_t objects = 0;
    std::size_t attributes = 0;

    static ClassGrid for_classes(std::size_t n)
    {
      ClassGrid g;
      g.objects = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))));
      g.attributes = (n + g.objects - 1) / g.objects;
      return g;
    }
  };

  inline void SynthConfig::validate() const
  {
    if (num_classes < 2)
      throw InvalidArgument("synth: num_classes must be at least 2");
    if (unseen_count == 0 || unseen_count >= num_classes)
      throw InvalidArgument("synth: unseen_count must satisfy 0 < unseen_count < num_classes");
    if (latent_dim == 0 || feature_dim == 0)
      throw InvalidArgument("synth: latent_dim and feature_dim must be positive");
    if (samples_per_class == 0)
      throw InvalidArgument("synth: samples_per_class must be positive");
    if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise))
      throw InvalidArgument("synth: feature_noise must be finite and >= 0");
    if (regions_min > regions_max)
      throw InvalidArgument("synth: regions_min exceeds regions_max");
    if (vocab_per_class == 0 || vocab_per_class > synth_words::kModifiers.size())
      throw InvalidArgument("synth: vocab_per_class must be in [1, "
                            + std::to_string(synth_words::kModifiers.size()) + "]");
    const auto grid = ClassGrid::for_classes(num_classes);
    if (grid.objects > synth_words::kObjects.size() || grid.attributes > synth_words::kAttributes.size())
      throw InvalidArgument("synth: num_classes too large for the built-in word pools");
  }

  struct SynthResult
  {
    Dataset records;                  // split fields assigned
    std::vector<std::string> classes;
    std::vector<std::string> unseen;
    Tensor<double> centroids;         // num_classes x latent_dim
    Tensor<double> latents;           // one latent point per record
    std::vector<std::size_t> class_of;
  };

  /// Generates paired scenes with planted compositional structure.
  ///
  /// Each class is an (attribute, object) pair; its latent centroid is the
  /// sum of one random vector per attribute and per object. Image features
  /// are a fixed random linear lift of centroid plus Gaussian noise, regions
  /// are jittered copies of the features, and the caption names the class.
  /// Unseen classes are picked so every attribute and object word still
  /// occurs in some seen class, which is what makes transfer possible.
  inline SynthResult synth_generate(const SynthConfig& cfg)
  {
    cfg.validate();
    SeededRng rng(cfg.seed);
    const auto grid = ClassGrid::for_classes(cfg.num_classes);
    const std::size_t ld = cfg.latent_dim, fd = cfg.feature_dim;
    const double unit = 1.0 / std::sqrt(static_cast<double>(ld));

    auto gaussian_rows = [&](std::size_t rows, std::size_t cols, double scale) {
      Tensor<double> t(rows, cols);
      for (auto& v : t.values())
        v = scale * rng.normal();
      return t;
    };
    const auto attr_vecs = gaussian_rows(grid.attributes, ld, unit);
    const auto obj_vecs = gaussian_rows(grid.objects, ld, unit);
    const auto lift = gaussian_rows(fd, ld, unit);

    SynthResult out;
    out.centroids = Tensor<double>(cfg.num_classes, ld);
    std::vector<std::size_t> attr_of(cfg.num_classes), obj_of(cfg.num_classes);
    for (std::size_t c = 0; c != cfg.num_classes; ++c) {
      attr_of[c] = c / grid.objects;
      obj_of[c] = c % grid.objects;
      out.classes.push_back(std::string(synth_words::kAttributes[attr_of[c]]) + " "
                            + std::string(synth_words::kObjects[obj_of[c]]));
      for (std::size_t k = 0; k != ld; ++k)
        out.centroids(c, k) = attr_vecs(attr_of[c], k) + obj_vecs(obj_of[c], k);
    }

    std::vector<std::vector<std::string>> class_vocab(cfg.num_classes);
    for (auto& vocab : class_vocab) {
      std::vector<std::string_view> pool(synth_words::kModifiers.begin(), synth_words::kModifiers.end());
      rng.shuffle(pool.begin(), pool.end());
      for (std::size_t k = 0; k != cfg.vocab_per_class; ++k)
        vocab.emplace_back(pool[k]);
    }

    // Unseen selection: a class may go unseen only if its attribute and its
    // object each keep at least one seen class.
    std::vector<std::size_t> order(cfg.num_classes);
    for (std::size_t c = 0; c != order.size(); ++c)
      order[c] = c;
    rng.shuffle(order.begin(), order.end());
    std::vector<std::size_t> attr_seen(grid.attributes, 0), obj_seen(grid.objects, 0);
    for (std::size_t c = 0; c != cfg.num_classes; ++c) {
      ++attr_seen[attr_of[c]];
      ++obj_seen[obj_of[c]];
    }
    std::vector<bool> is_unseen(cfg.num_classes, false);
    std::size_t chosen = 0;
    for (auto c : order) {
      if (chosen == cfg.unseen_count)
        break;
      if (attr_seen[attr_of[c]] >= 2 && obj_seen[obj_of[c]] >= 2) {
        is_unseen[c] = true;
        --attr_seen[attr_of[c]];
        --obj_seen[obj_of[c]];
        ++chosen;
      }
    }
    for (auto c : order) {
      if (chosen == cfg.unseen_count)
        break;
      if (!is_unseen[c]) {
        is_unseen[c] = true;
        ++chosen;
      }
    }

    const std::size_t total = cfg.num_classes * cfg.samples_per_class;
    out.latents = Tensor<double>(total, ld);
    Dataset raw;
    raw.reserve(total);
    for (std::size_t c = 0; c != cfg.num_classes; ++c) {
      for (std::size_t s = 0; s != cfg.samples_per_class; ++s) {
        const std::size_t n = raw.size();
        for (std::size_t k = 0; k != ld; ++k)
          out.latents(n, k) = out.centroids(c, k) + cfg.feature_noise * rng.normal();

        SceneRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "IMG%05zu", n + 1);
        r.id = id;
        r.image_features.assign(fd, 0.0);
        for (std::size_t f = 0; f != fd; ++f)
          for (std::size_t k = 0; k != ld; ++k)
            r.image_features[f] += lift(f, k) * out.latents(n, k);

        const std::size_t m = cfg.regions_min + rng.below(cfg.regions_max - cfg.regions_min + 1);
        for (std::size_t q = 0; q != m; ++q) {
          auto region = r.image_features;
          for (auto& v : region)
            v += cfg.feature_noise * rng.normal();
          r.regions.push_back(std::move(region));
        }

        const auto& modifier = class_vocab[c][rng.below(class_vocab[c].size())];
        r.caption = "a photo of a " + out.classes[c] + " " + modifier;
        r.label = out.classes[c];
        raw.push_back(std::move(r));
        out.class_of.push_back(c);
      }
    }

    SplitSpec spec;
    spec.seed = cfg.seed;
    for (std::size_t c = 0; c != cfg.num_classes; ++c) {
      if (is_unseen[c]) {
        spec.unseen.insert(out.classes[c]);
        out.unseen.push_back(out.classes[c]);
      } else {
        spec.seen.insert(out.classes[c]);
      }
    }
    auto split = split_seen_unseen(raw, spec);
    std::set<std::string> test_ids;
    for (const auto& r : split.zs_test)
      test_ids.insert(r.id);
    for (auto& r : raw)
      r.split = test_ids.count(r.id) ? Split::test : Split::train;
    out.records = std::move(raw);
    return out;
  }
}

#endif
