#ifndef ZSSCENE_DATA_SPLIT_HPP
#define ZSSCENE_DATA_SPLIT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "zsscene/core/error.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/data/dataset.hpp"

namespace zsscene
{
  inline constexpr double kSeenHoldoutFraction = 0.2;

  struct SplitSpec
  {
    std::set<std::string> seen;
    std::set<std::string> unseen;
    std::uint64_t seed = 0;

    void validate() const
    {
      if (unseen.empty())
        throw InvalidArgument("split: the unseen class set is empty");
      for (const auto& c : unseen)
        if (seen.count(c))
          throw InvalidArgument("split: class '" + c + "' is both seen and unseen");
    }
  };

  struct SplitResult
  {
    Dataset train;
    Dataset zs_test;  // every unseen-class record plus the seen-class holdout
  };

  /// Number of records of a seen class held out for the test split.
  inline std::size_t holdout_count(std::size_t n)
  {
    return static_cast<std::size_t>(std::llround(kSeenHoldoutFraction * static_cast<double>(n)));
  }

  /// Unseen-class records all go to the test split. Each seen class keeps
  /// round(20%) of its records, chosen by a seeded shuffle, for the test
  /// split too. Records keep their input order within each output.
  inline SplitResult split_seen_unseen(const Dataset& dataset, const SplitSpec& spec)
  {
    spec.validate();
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i != dataset.size(); ++i) {
      const auto& label = dataset[i].label;
      if (!spec.seen.count(label) && !spec.unseen.count(label))
        throw InvalidArgument("split: label '" + label + "' is in neither the seen nor the unseen set");
      by_class[label].push_back(i);
    }
    for (const auto& c : spec.unseen)
      if (!by_class.count(c))
        throw InvalidArgument("split: unseen class '" + c + "' has no records");

    std::vector<bool> held_out(dataset.size(), false);
    SeededRng rng(spec.seed);
    for (auto& [label, idx] : by_class) {
      if (spec.unseen.count(label))
        continue;
      auto order = idx;
      rng.shuffle(order.begin(), order.end());
      for (std::size_t k = 0; k != holdout_count(order.size()); ++k)
        held_out[order[k]] = true;
    }

    SplitResult out;
    for (std::size_t i = 0; i != dataset.size(); ++i) {
      SceneRecord r = dataset[i];
      if (spec.unseen.count(r.label) || held_out[i]) {
        r.split = Split::test;
        out.zs_test.push_back(std::move(r));
      } else {
        r.split = Split::train;
        out.train.push_back(std::move(r));
      }
    }
    return out;
  }

  /// Classes that never occur in the train split, in first-appearance order
  /// of `classes`.
  inline std::vector<std::string> infer_unseen(const Dataset& dataset, const std::vector<std::string>& classes)
  {
    std::set<std::string> trained;
    for (const auto& r : dataset)
      if (r.split == Split::train)
        trained.insert(r.label);
    std::vector<std::string> out;
    for (const auto& c : classes)
      if (!trained.count(c))
        out.push_back(c);
    return out;
  }
}

#endif
