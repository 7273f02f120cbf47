#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "zsscene/core/rng.hpp"
#include "zsscene/metrics/caption.hpp"
#include "zsscene/metrics/porter.hpp"
#include "zsscene/metrics/ranking.hpp"
#include "zsscene/metrics/report.hpp"

using namespace zsscene;
using namespace zsscene::metrics;

namespace
{
  RankedPrediction rp(std::string truth, std::vector<std::string> ranking)
  {
    return {"id", std::move(ranking), std::move(truth)};
  }

  Tokens toks(const std::string& s) { return tokenize(s); }

  // Precision at each positive counted directly from the scores, no sorting.
  double brute_ap(const ScoredClass& c)
  {
    const std::size_t n = c.scores.size();
    auto ahead = [&](std::size_t j, std::size_t i) {
      return c.scores[j] > c.scores[i] || (c.scores[j] == c.scores[i] && j <= i);
    };
    double sum = 0;
    std::size_t pos = 0;
    for (std::size_t i = 0; i != n; ++i) {
      if (!c.relevant[i])
        continue;
      std::size_t rank = 0, hits = 0;
      for (std::size_t j = 0; j != n; ++j)
        if (ahead(j, i)) {
          ++rank;
          hits += c.relevant[j];
        }
      sum += static_cast<double>(hits) / static_cast<double>(rank);
      ++pos;
    }
    return sum / static_cast<double>(pos);
  }

  std::vector<std::string> class_names(std::size_t n)
  {
    std::vector<std::string> out;
    for (std::size_t i = 0; i != n; ++i)
      out.push_back("c" + std::to_string(i));
    return out;
  }
}

TEST(TopK, Examples)
{
  std::vector<RankedPrediction> all_first{rp("a", {"a", "b"}), rp("b", {"b", "a"})};
  EXPECT_EQ(topk_accuracy(all_first, 1), 1.0);
  std::vector<RankedPrediction> mixed{rp("a", {"a", "b", "c"}), rp("b", {"b", "a", "c"}), rp("c", {"c", "a", "b"}),
                                      rp("a", {"b", "c", "a"})};
  EXPECT_EQ(topk_accuracy(mixed, 1), 0.75);
  EXPECT_EQ(topk_accuracy(mixed, 3), 1.0);
  EXPECT_EQ(topk_accuracy(mixed, 10), 1.0);
  EXPECT_THROW(topk_accuracy(mixed, 0), InvalidArgument);
  EXPECT_THROW(topk_accuracy(std::vector<RankedPrediction>{}, 1), InvalidArgument);
  EXPECT_THROW(topk_accuracy(std::vector<RankedPrediction>{rp("a", {"a", "a"})}, 1), InvalidArgument);
}

TEST(TopK, MatchesNaiveOracleAndIsMonotone)
{
  SeededRng rng(17);
  for (int trial = 0; trial != 100; ++trial) {
    const std::size_t C = 2 + rng.below(7), N = 1 + rng.below(8);
    const auto names = class_names(C);
    std::vector<RankedPrediction> preds;
    for (std::size_t i = 0; i != N; ++i) {
      auto ranking = names;
      rng.shuffle(ranking.begin(), ranking.end());
      preds.push_back(rp(names[rng.below(C)], ranking));
    }
    double prev = 0;
    for (std::size_t k = 1; k <= C + 1; ++k) {
      std::size_t hits = 0;
      for (const auto& p : preds)
        for (std::size_t r = 0; r < k && r < p.ranking.size(); ++r)
          if (p.ranking[r] == p.truth)
            ++hits;
      const double got = topk_accuracy(preds, k);
      EXPECT_NEAR(got, static_cast<double>(hits) / static_cast<double>(N), 1e-10);
      EXPECT_GE(got, prev);
      prev = got;
    }
  }
}

TEST(ZsHit, HandEnumeratedBothModes)
{
  const std::set<std::string> unseen{"u1", "u2"};
  std::vector<RankedPrediction> preds{
    rp("u1", {"u1", "s1", "u2", "s2"}),
    rp("u2", {"s1", "u2", "u1", "s2"}),
    rp("u1", {"s2", "s1", "u2", "u1"}),
    rp("s1", {"s1", "u1", "u2", "s2"}),
    rp("u2", {"u2", "s1", "s2", "u1"}),
  };
  EXPECT_EQ(zs_hit_at_k(preds, 1, unseen, ZsMode::classic), 0.75);
  EXPECT_EQ(zs_hit_at_k(preds, 1, unseen, ZsMode::generalized), 0.5);
  EXPECT_EQ(zs_hit_at_k(preds, 2, unseen, ZsMode::classic), 1.0);
  EXPECT_EQ(zs_hit_at_k(preds, 2, unseen, ZsMode::generalized), 0.75);
}

TEST(ZsHit, TrivialCasesAndErrors)
{
  const std::set<std::string> unseen{"u1", "u2"};
  std::vector<RankedPrediction> preds{rp("u1", {"u1", "s"}), rp("u2", {"u2", "u1"}), rp("s", {"u1", "s"})};
  EXPECT_EQ(zs_hit_at_k(preds, 1, unseen, ZsMode::generalized), 1.0);
  EXPECT_EQ(zs_hit_at_k(preds, 2, unseen, ZsMode::classic), 1.0);
  EXPECT_THROW(zs_hit_at_k(preds, 1, {}, ZsMode::classic), InvalidArgument);
  EXPECT_THROW(zs_hit_at_k(std::vector<RankedPrediction>{rp("s", {"s", "u1"})}, 1, unseen, ZsMode::classic),
               InvalidArgument);
  EXPECT_EQ(parse_zs_mode("generalized"), ZsMode::generalized);
  EXPECT_THROW(parse_zs_mode("open"), InvalidArgument);
}

TEST(MeanAveragePrecision, Examples)
{
  EXPECT_NEAR(average_precision({{3, 2, 1}, {true, false, true}}), 5.0 / 6.0, 1e-15);
  std::vector<ScoredClass> perfect{{{0.9, 0.8, 0.1}, {true, true, false}}, {{0.2, 0.1, 0.7}, {false, false, true}}};
  EXPECT_EQ(mean_average_precision(perfect), 1.0);
  // Ties keep the lower index ahead: positive at index 1 ranks second.
  EXPECT_NEAR(average_precision({{0.5, 0.5}, {false, true}}), 0.5, 1e-15);
  std::vector<ScoredClass> with_empty{{{0.9, 0.1}, {true, false}}, {{0.3, 0.2}, {false, false}}};
  EXPECT_EQ(mean_average_precision(with_empty), 1.0);
  std::vector<ScoredClass> none{{{0.3, 0.2}, {false, false}}};
  EXPECT_THROW(mean_average_precision(none), InvalidArgument);
}

TEST(MeanAveragePrecision, MatchesBruteForceOracle)
{
  SeededRng rng(5);
  for (int trial = 0; trial != 120; ++trial) {
    const std::size_t C = 1 + rng.below(8);
    const std::size_t N = trial < 20 ? 20 : 1 + rng.below(8);
    std::vector<ScoredClass> classes(C);
    double sum = 0;
    std::size_t used = 0;
    for (auto& c : classes) {
      for (std::size_t i = 0; i != N; ++i) {
        // Coarse scores so ties occur.
        c.scores.push_back(static_cast<double>(rng.below(5)) / 4.0);
        c.relevant.push_back(rng.uniform() < 0.4);
      }
      if (std::find(c.relevant.begin(), c.relevant.end(), true) != c.relevant.end()) {
        sum += brute_ap(c);
        ++used;
      }
    }
    if (!used) {
      EXPECT_THROW(mean_average_precision(classes), InvalidArgument);
      continue;
    }
    EXPECT_NEAR(mean_average_precision(classes), sum / static_cast<double>(used), 1e-10);
  }
}

TEST(MeanAveragePrecision, InvariantToRelabelingThatKeepsPositiveRanks)
{
  // Moving a negative among the negatives does not change AP.
  ScoredClass a{{0.9, 0.8, 0.7, 0.6, 0.5}, {true, false, true, false, false}};
  ScoredClass b{{0.9, 0.8, 0.7, 0.6, 0.5}, {true, false, true, false, false}};
  std::swap(b.scores[3], b.scores[4]);
  EXPECT_EQ(average_precision(a), average_precision(b));
}

TEST(F1Unseen, Examples)
{
  const std::set<std::string> unseen{"u1", "u2"};
  std::vector<RankedPrediction> perfect{rp("u1", {"u1"}), rp("s", {"s"}), rp("u2", {"u2"})};
  EXPECT_EQ(f1_unseen(perfect, unseen), 1.0);
  std::vector<RankedPrediction> never{rp("u1", {"s"}), rp("s", {"s"})};
  EXPECT_EQ(f1_unseen(never, unseen), 0.0);
  // predicted unseen: 1, 2, 6; unseen truths: 1, 2, 3, 6; correct: 1, 6
  // P = 2/3, R = 1/2, F1 = 4/7
  std::vector<RankedPrediction> mixed{rp("u1", {"u1"}), rp("u1", {"u2"}), rp("u2", {"s1"}),
                                      rp("s1", {"s2"}), rp("s1", {"s1"}), rp("u2", {"u2"})};
  EXPECT_NEAR(f1_unseen(mixed, unseen), 4.0 / 7.0, 1e-15);
  EXPECT_THROW(f1_unseen(mixed, {}), InvalidArgument);
}

TEST(MeanPairCosine, Examples)
{
  SeededRng rng(2);
  auto v = zsscene::testing::random_tensor(5, 4, rng);
  EXPECT_NEAR(mean_pair_cosine(v, v), 1.0, 1e-15);
  EXPECT_EQ(mean_pair_cosine(Tensor<double>::from_rows({{1, 0}, {0, 2}}), Tensor<double>::from_rows({{0, 3}, {1, 0}})),
            0.0);
  auto t = zsscene::testing::random_tensor(5, 4, rng);
  double sum = 0;
  for (std::size_t i = 0; i != 5; ++i) {
    double d = 0, a = 0, b = 0;
    for (std::size_t k = 0; k != 4; ++k) {
      d += v(i, k) * t(i, k);
      a += v(i, k) * v(i, k);
      b += t(i, k) * t(i, k);
    }
    sum += d / std::sqrt(a * b);
  }
  EXPECT_NEAR(mean_pair_cosine(v, t), sum / 5, 1e-12);
  EXPECT_THROW(mean_pair_cosine(v, zsscene::testing::random_tensor(4, 4, rng)), ShapeError);
}

TEST(Porter, KnownStems)
{
  const std::vector<std::pair<std::string, std::string>> cases{
    {"caresses", "caress"}, {"ponies", "poni"}, {"ties", "ti"}, {"caress", "caress"}, {"cats", "cat"},
    {"feed", "feed"}, {"agreed", "agre"}, {"plastered", "plaster"}, {"bled", "bled"}, {"motoring", "motor"},
    {"sing", "sing"}, {"conflated", "conflat"}, {"troubled", "troubl"}, {"sized", "size"}, {"hopping", "hop"},
    {"tanned", "tan"}, {"falling", "fall"}, {"hissing", "hiss"}, {"fizzed", "fizz"}, {"failing", "fail"},
    {"filing", "file"}, {"happy", "happi"}, {"sky", "sky"}, {"relational", "relat"}, {"conditional", "condit"},
    {"rational", "ration"}, {"digitizer", "digit"}, {"vietnamization", "vietnam"}, {"predication", "predic"},
    {"operator", "oper"}, {"feudalism", "feudal"}, {"decisiveness", "decis"}, {"hopefulness", "hope"},
    {"callousness", "callous"}, {"formaliti", "formal"}, {"sensitiviti", "sensit"}, {"sensibiliti", "sensibl"},
    {"triplicate", "triplic"}, {"formative", "form"}, {"formalize", "formal"}, {"electriciti", "electr"},
    {"electrical", "electr"}, {"hopeful", "hope"}, {"goodness", "good"}, {"revival", "reviv"},
    {"allowance", "allow"}, {"inference", "infer"}, {"airliner", "airlin"}, {"gyroscopic", "gyroscop"},
    {"adjustable", "adjust"}, {"defensible", "defens"}, {"irritant", "irrit"}, {"replacement", "replac"},
    {"adjustment", "adjust"}, {"dependent", "depend"}, {"adoption", "adopt"}, {"communism", "commun"},
    {"activate", "activ"}, {"angulariti", "angular"}, {"homologous", "homolog"}, {"effective", "effect"},
    {"bowdlerize", "bowdler"}, {"probate", "probat"}, {"rate", "rate"}, {"cease", "ceas"}, {"controll", "control"},
    {"roll", "roll"}, {"generalizations", "gener"}, {"oscillators", "oscil"}, {"dogs", "dog"},
    {"running", "run"}, {"runs", "run"}, {"is", "is"}, {"x2", "x2"},
  };
  for (const auto& [word, stem] : cases)
    EXPECT_EQ(porter_stem(word), stem) << word;
}

TEST(Bleu, Examples)
{
  EXPECT_EQ(bleu4(toks("a red bird sits on the branch"), {toks("a red bird sits on the branch")}), 100.0);
  EXPECT_EQ(bleu4({}, {toks("a b c d")}), 0.0);
  // p1 = p2 = p3 = 1, p4 = 1e-9 (no 4-grams), c = 3, r = 4
  const double expect = 100.0 * std::pow(1e-9, 0.25) * std::exp(1.0 - 4.0 / 3.0);
  EXPECT_NEAR(bleu4(toks("the cat sat"), {toks("the cat sat down")}), expect, 1e-6);
  EXPECT_NEAR(expect, 0.4029352, 1e-6);
  EXPECT_THROW(bleu4(toks("a"), {}), InvalidArgument);
}

TEST(Bleu, ClippingAndClosestReference)
{
  // "the the the the" vs "the cat": p1 = 1/4, p2 = 1e-9/3, p3 = 1e-9/2, p4 = 1e-9; BP = 1
  const double expect = 100.0 * std::exp((std::log(0.25) + std::log(1e-9 / 3) + std::log(1e-9 / 2) + std::log(1e-9)) / 4);
  EXPECT_NEAR(bleu4(toks("the the the the"), {toks("the cat")}), expect, 1e-9);
  // Identical to the second reference: maximum regardless of the first.
  EXPECT_EQ(bleu4(toks("a b c d e"), {toks("x y"), toks("a b c d e")}), 100.0);
}

TEST(Meteor, Examples)
{
  for (std::size_t m = 1; m != 8; ++m) {
    Tokens s;
    for (std::size_t i = 0; i != m; ++i)
      s.push_back("w" + std::to_string(i));
    EXPECT_DOUBLE_EQ(meteor_lite(s, {s}), 100.0 * (1.0 - 0.5 / std::pow(static_cast<double>(m), 3)));
  }
  EXPECT_EQ(meteor_lite(toks("a b"), {toks("c d")}), 0.0);
  EXPECT_EQ(meteor_lite(toks("dogs running"), {toks("dog runs")}), 93.75);
  // Greedy alignment: chunks = 5 of 6 matches.
  EXPECT_NEAR(meteor_lite(toks("the cat sat on the mat"), {toks("on the mat the cat sat")}),
              100.0 * (1.0 - 0.5 * std::pow(5.0 / 6.0, 3)), 1e-12);
  // Unequal lengths: m = 2, P = 2/3, R = 1, one chunk.
  const double P = 2.0 / 3.0, R = 1.0;
  EXPECT_NEAR(meteor_lite(toks("a red bird"), {toks("red bird")}),
              100.0 * (P * R / (0.9 * P + 0.1 * R)) * (1.0 - 0.5 / 8.0), 1e-12);
  EXPECT_THROW(meteor_lite(toks("a"), {}), InvalidArgument);
}

TEST(Meteor, BestOverReferencesAndIdentityIsMax)
{
  const auto cand = toks("a small dog runs");
  const double best = meteor_lite(cand, {toks("cats sleep"), cand});
  EXPECT_EQ(best, meteor_lite(cand, {cand}));
  EXPECT_GE(best, meteor_lite(cand, {toks("a small dog")}));
}

TEST(Cider, TwoIdCorpusHasZeroIdf)
{
  std::map<std::string, Tokens> cands{{"a", {"x"}}, {"b", {"y"}}};
  std::map<std::string, std::vector<Tokens>> refs{{"a", {{"x"}}}, {"b", {{"y"}}}};
  auto r = cider(cands, refs);
  EXPECT_EQ(r.corpus, 0.0);
  EXPECT_EQ(r.per_id.at("a"), 0.0);
}

TEST(Cider, ThreeIdHandComputed)
{
  // Every n-gram occurs in one id: idf = ln(3/2) > 0. Identical candidates
  // give cosine 1 for each order they have.
  std::map<std::string, Tokens> cands{{"A", toks("x y")}, {"B", toks("z w")}, {"C", toks("q")}};
  std::map<std::string, std::vector<Tokens>> refs{{"A", {toks("x y")}}, {"B", {toks("z w")}}, {"C", {toks("q")}}};
  auto r = cider(cands, refs);
  EXPECT_NEAR(r.per_id.at("A"), 5.0, 1e-12);
  EXPECT_NEAR(r.per_id.at("B"), 5.0, 1e-12);
  EXPECT_NEAR(r.per_id.at("C"), 2.5, 1e-12);
  EXPECT_NEAR(r.corpus, 10.0 * 1.25 / 3.0, 1e-12);

  // "x z" vs "x y": unigram cosine 1/2, no shared bigram.
  cands["A"] = toks("x z");
  EXPECT_NEAR(cider(cands, refs).per_id.at("A"), 10.0 * 0.5 / 4.0, 1e-12);
  cands["A"] = toks("k");
  EXPECT_EQ(cider(cands, refs).per_id.at("A"), 0.0);
}

TEST(Cider, Preconditions)
{
  std::map<std::string, Tokens> one{{"a", {"x"}}};
  std::map<std::string, std::vector<Tokens>> refs{{"a", {{"x"}}}};
  EXPECT_THROW(cider(one, refs), InvalidArgument);
  std::map<std::string, Tokens> two{{"a", {"x"}}, {"b", {"y"}}};
  EXPECT_THROW(cider(two, refs), InvalidArgument);
}

TEST(CaptionMetrics, Ranges)
{
  SeededRng rng(8);
  const std::vector<std::string> words{"a", "red", "bird", "car", "on", "the", "road", "sky"};
  std::map<std::string, Tokens> cands;
  std::map<std::string, std::vector<Tokens>> refs;
  for (int i = 0; i != 30; ++i) {
    auto sentence = [&] {
      Tokens t;
      for (std::size_t k = 0, n = 1 + rng.below(7); k != n; ++k)
        t.push_back(words[rng.below(words.size())]);
      return t;
    };
    const auto id = "id" + std::to_string(i);
    cands[id] = sentence();
    refs[id] = {sentence(), sentence()};
    const double b = bleu4(cands[id], refs[id]), m = meteor_lite(cands[id], refs[id]);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 100.0);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 100.0);
    EXPECT_EQ(b, bleu4(cands[id], refs[id]));
  }
  auto c = cider(cands, refs);
  EXPECT_GE(c.corpus, 0.0);
  EXPECT_LE(c.corpus, 10.0);
}

TEST(Report, JsonRoundTripAndCsvNames)
{
  MetricsReport r;
  r.run = "baseline";
  r.set("top1", 0.824);
  r.set("zs_hit1", 0.765);
  r.set("cider", 1.24);
  r.set("attention_entropy", 0.19);
  auto back = MetricsReport::from_json(nlohmann::json::parse(r.dump()));
  EXPECT_EQ(back.dump(), r.dump());
  const auto csv = r.table_csv();
  EXPECT_NE(csv.find("\"Top-1 Accuracy (%)\",82.4\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\"Zero-Shot Hit@1 (%)\",76.5\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\"CIDEr Score\",1.24\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\"Graph Attention Entropy\",0.19\n"), std::string::npos) << csv;
  EXPECT_EQ(csv.find("BLEU"), std::string::npos);
  EXPECT_THROW(r.set("rouge", 1.0), InvalidArgument);
}

TEST(Report, SchemaVersionChecked)
{
  auto j = nlohmann::json::parse(MetricsReport{}.dump());
  j["schema_version"] = 2;
  EXPECT_THROW(MetricsReport::from_json(j), InvalidArgument);
  j.erase("schema_version");
  EXPECT_THROW(MetricsReport::from_json(j), InvalidArgument);
}

TEST(Report, TableAndPlotData)
{
  MetricsReport a, b;
  a.run = "b-run";
  b.run = "a-run";
  for (auto* r : {&a, &b}) {
    r->set("top1", 0.5);
    r->set("map", 0.25);
    r->set("meteor", 30.0);
  }
  b.set("map", 0.75);
  ReportSet one{{a}};
  const auto table = one.text_table();
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 1 + 3);
  ReportSet two{{a, b}};
  const auto plot = two.plot_csv();
  EXPECT_EQ(plot,
            "metric,run,value\n"
            "\"METEOR Score\",a-run,30\n\"METEOR Score\",b-run,30\n"
            "\"Mean Average Precision (mAP)\",a-run,0.75\n\"Mean Average Precision (mAP)\",b-run,0.25\n"
            "\"Top-1 Accuracy (%)\",a-run,50\n\"Top-1 Accuracy (%)\",b-run,50\n");
  EXPECT_EQ(two.text_table(), (ReportSet{{b, a}}.text_table()));
  EXPECT_THROW((ReportSet{{a, a}}.plot_csv()), InvalidArgument);
  EXPECT_THROW(ReportSet{}.text_table(), InvalidArgument);
}
