#ifndef ZSSCENE_CLI_COMMANDS_HPP
#define ZSSCENE_CLI_COMMANDS_HPP

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsscene/checkpoint.hpp"
#include "zsscene/config.hpp"
#include "zsscene/core/error.hpp"
#include "zsscene/data/dataset.hpp"
#include "zsscene/data/synth.hpp"
#include "zsscene/evaluate.hpp"
#include "zsscene/metrics/caption.hpp"
#include "zsscene/metrics/report.hpp"
#include "zsscene/pipeline.hpp"

namespace zsscene::cli
{
  enum ExitCode : int { kOk = 0, kInputError = 2, kNumericError = 3 };

  enum class Precision { f32, f64 };

  inline Precision precision_from_env()
  {
    const char* v = std::getenv("ZS_SCENE_PRECISION");
    if (!v || std::string_view(v).empty() || std::string_view(v) == "f32")
      return Precision::f32;
    if (std::string_view(v) == "f64")
      return Precision::f64;
    throw InvalidArgument("ZS_SCENE_PRECISION must be f32 or f64, got '" + std::string(v) + "'");
  }

  struct Io
  {
    std::ostream& out = std::cout;
    std::ostream& err = std::cerr;
  };

  /// Runs `body` and maps failures to exit codes.
  template <class F>
  int guarded(Io io, F&& body)
  {
    try {
      return body();
    } catch (const NumericError& e) {
      io.err << "error: " << e.what() << '\n';
      return kNumericError;
    } catch (const InvalidArgument& e) {
      io.err << "error: " << e.what() << '\n';
      return kInputError;
    } catch (const std::exception& e) {
      io.err << "error: " << e.what() << '\n';
      return kInputError;
    }
  }

  template <class F>
  int dispatch_precision(Precision p, F&& body)
  {
    return p == Precision::f64 ? body(double{}) : body(float{});
  }

  namespace detail
  {
    inline void write_file(const std::string& path, const std::string& content)
    {
      std::ofstream out(path, std::ios::binary);
      if (!out)
        throw InvalidArgument("cannot write '" + path + "'");
      out << content;
    }

    inline std::string sibling(const std::string& path, const std::string& ext)
    {
      std::filesystem::path p(path);
      p.replace_extension(ext);
      return p.string();
    }

    inline std::string fmt(double v)
    {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return buf;
    }

    inline std::string csv_quote(const std::string& s)
    {
      std::string out = "\"";
      for (char c : s) {
        if (c == '"')
          out += '"';
        out += c;
      }
      return out + '"';
    }

    inline RunConfig load_run_config(const std::optional<std::string>& path)
    {
      return path ? run_config_from_json(zsscene::detail::read_json_file(*path)) : RunConfig{};
    }

    /// Class list: the file when given, else labels in first-appearance order.
    inline std::vector<std::string> load_classes(const std::optional<std::string>& path, const Dataset& data)
    {
      if (path)
        return read_lines(*path);
      std::vector<std::string> out;
      std::set<std::string> seen;
      for (const auto& r : data)
        if (seen.insert(r.label).second)
          out.push_back(r.label);
      return out;
    }

    inline std::vector<std::string> load_templates(const std::optional<std::string>& path)
    {
      if (!path)
        return default_templates();
      auto t = read_lines(*path);
      if (t.empty())
        throw InvalidArgument("template file '" + *path + "' is empty");
      return t;
    }

    /// JSONL of {"id", "caption"} or {"id", "captions": [...]}; repeated ids
    /// accumulate.
    inline std::map<std::string, std::vector<std::string>> read_captions(const std::string& path)
    {
      std::ifstream in(path);
      if (!in)
        throw InvalidArgument("cannot open captions '" + path + "'");
      std::map<std::string, std::vector<std::string>> out;
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
          continue;
        const std::string where = path + " line " + std::to_string(lineno) + ": ";
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          throw InvalidArgument(where + "malformed JSON: " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
          throw InvalidArgument(where + "expected an object with a string 'id'");
        auto& slot = out[j["id"].get<std::string>()];
        if (j.contains("caption") && j["caption"].is_string())
          slot.push_back(j["caption"].get<std::string>());
        else if (j.contains("captions") && j["captions"].is_array())
          for (const auto& c : j["captions"]) {
            if (!c.is_string())
              throw InvalidArgument(where + "'captions' must hold strings");
            slot.push_back(c.get<std::string>());
          }
        else
          throw InvalidArgument(where + "expected 'caption' or 'captions'");
      }
      return out;
    }

    inline Dataset train_split(const Dataset& data)
    {
      Dataset out;
      for (const auto& r : data)
        if (r.split == Split::train)
          out.push_back(r);
      return out;
    }

    template <class T>
    nlohmann::ordered_json prediction_json(const Prediction<T>& p, const ClassPromptSet<T>& set)
    {
      nlohmann::ordered_json j;
      j["id"] = p.id;
      j["predicted"] = p.label;
      j["similarity"] = p.score;
      nlohmann::ordered_json per = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c != set.size(); ++c)
        per[set.classes[c]] = p.per_class[c];
      j["per_class"] = std::move(per);
      j["relevance"] = p.relevance;
      return j;
    }
  }

  struct SynthOptions
  {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::string> classes_out;
  };

  inline int cmd_synth(const SynthOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      SynthConfig cfg = o.config ? synth_config_from_json(zsscene::detail::read_json_file(*o.config)) : SynthConfig{};
      if (o.seed)
        cfg.seed = *o.seed;
      cfg.validate();
      auto s = synth_generate(cfg);
      save_dataset(o.out, s.records);
      if (o.classes_out) {
        std::string text;
        for (const auto& c : s.classes)
          text += c + '\n';
        detail::write_file(*o.classes_out, text);
      }
      io.out << "wrote " << s.records.size() << " records to " << o.out << '\n';
      return int{kOk};
    });
  }

  struct TrainOptions
  {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    bool symmetric_loss = false;
    std::string dataset;
    std::string out;                      // checkpoint path
    std::optional<std::string> loss_csv;  // default: checkpoint path with .loss.csv
    Precision precision = Precision::f32;
  };

  template <class T>
  void train_model_log(ModelState<T>& m, const Dataset& train, const RunConfig& cfg, std::string& csv, Io io)
  {
    zsscene::train(m, train, cfg, [&](std::size_t epoch, double loss) {
      csv += std::to_string(epoch) + "," + detail::fmt(loss) + "\n";
      io.err << "epoch " << epoch << " loss " << detail::fmt(loss) << '\n';
    });
  }

  inline std::string default_loss_csv(const std::string& checkpoint) { return detail::sibling(checkpoint, ".loss.csv"); }

  inline int cmd_train(const TrainOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      RunConfig cfg = detail::load_run_config(o.config);
      if (o.seed)
        cfg.seed = *o.seed;
      if (o.symmetric_loss)
        cfg.symmetric_loss = true;
      cfg.validate();
      const Dataset train = detail::train_split(load_dataset(o.dataset));
      if (train.empty())
        throw InvalidArgument("train: dataset '" + o.dataset + "' has no train-split records");
      std::vector<Tokens> caps;
      for (const auto& r : train)
        caps.push_back(tokenize(r.caption));
      const std::size_t feature_dim = train.front().image_features.size();
      std::size_t region_dim = feature_dim;
      for (const auto& r : train)
        if (!r.regions.empty()) {
          region_dim = r.region_dim();
          break;
        }
      return dispatch_precision(o.precision, [&](auto tag) {
        using T = decltype(tag);
        auto m = ModelState<T>::init(cfg, Vocabulary::build(caps), feature_dim, region_dim);
        std::string csv = "epoch,mean_loss\n";
        train_model_log(m, train, cfg, csv, io);
        save_checkpoint(o.out, cfg, m);
        detail::write_file(o.loss_csv.value_or(default_loss_csv(o.out)), csv);
        io.out << "wrote checkpoint " << o.out << '\n';
        return int{kOk};
      });
    });
  }

  struct EvalOptions
  {
    std::string checkpoint;
    std::string dataset;
    std::optional<std::string> classes;
    std::optional<std::string> templates;
    std::string zs_mode = "classic";
    std::optional<std::string> captions;     // generated captions JSONL
    std::optional<std::string> predictions;  // per-record JSONL output
    std::string out;                         // metrics JSON; CSV alongside
    std::optional<std::string> run;
    Precision precision = Precision::f32;
  };

  inline int cmd_eval(const EvalOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      zsscene::EvalOptions opt;
      opt.mode = metrics::parse_zs_mode(o.zs_mode);
      opt.templates = detail::load_templates(o.templates);
      opt.run = o.run.value_or(std::filesystem::path(o.out).stem().string());
      if (o.captions)
        for (const auto& [id, caps] : detail::read_captions(*o.captions)) {
          if (caps.size() != 1)
            throw InvalidArgument("eval: id '" + id + "' has " + std::to_string(caps.size())
                                  + " generated captions, expected 1");
          opt.candidate_captions[id] = caps.front();
        }
      const Dataset data = load_dataset(o.dataset);
      const auto classes = detail::load_classes(o.classes, data);
      return dispatch_precision(o.precision, [&](auto tag) {
        using T = decltype(tag);
        auto ck = load_checkpoint<T>(o.checkpoint);
        auto res = evaluate(ck.model, data, classes, opt);
        for (const auto& w : res.warnings)
          io.err << "warning: " << w << '\n';
        detail::write_file(o.out, res.report.dump());
        detail::write_file(detail::sibling(o.out, ".csv"), res.report.table_csv());
        if (o.predictions) {
          std::map<std::string, const SceneRecord*> by_id;
          for (const auto& r : data)
            by_id[r.id] = &r;
          std::string text;
          for (const auto& p : res.predictions) {
            nlohmann::ordered_json j;
            j["id"] = p.id;
            j["truth"] = by_id.at(p.id)->label;
            j["predicted"] = p.label;
            j["top1"] = p.label == by_id.at(p.id)->label ? 1 : 0;
            j["similarity"] = p.score;
            text += j.dump() + '\n';
          }
          detail::write_file(*o.predictions, text);
        }
        io.out << metrics::ReportSet{{res.report}}.text_table();
        return int{kOk};
      });
    });
  }

  struct ClassifyOptions
  {
    std::string checkpoint;
    std::string records;  // JSONL dataset file
    std::optional<std::string> classes;
    std::optional<std::string> templates;
    std::optional<std::string> feedback;
    std::optional<double> feedback_lr;
    std::optional<std::string> out;  // default: stdout
    Precision precision = Precision::f32;
  };

  /// One JSON line per record; with feedback, a second line per record holds
  /// the prediction after the update.
  inline int cmd_classify(const ClassifyOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      const Dataset data = load_dataset(o.records);
      const auto classes = detail::load_classes(o.classes, data);
      const auto templates = detail::load_templates(o.templates);
      return dispatch_precision(o.precision, [&](auto tag) {
        using T = decltype(tag);
        auto ck = load_checkpoint<T>(o.checkpoint);
        auto set = make_class_set(ck.model, classes, templates);
        if (o.feedback)
          set.index_of(*o.feedback);
        const double lr = o.feedback_lr.value_or(ck.config.feedback_lr);
        std::string text;
        for (const auto& r : data) {
          if (o.feedback) {
            auto fb = feedback_update(ck.model, r, *o.feedback, set, lr);
            text += detail::prediction_json(fb.before, set).dump() + '\n';
            text += detail::prediction_json(fb.after, fb.classes).dump() + '\n';
          } else {
            text += detail::prediction_json(zero_shot_classify(r, set, ck.model), set).dump() + '\n';
          }
        }
        if (o.out)
          detail::write_file(*o.out, text);
        else
          io.out << text;
        return int{kOk};
      });
    });
  }

  struct ScoreCaptionsOptions
  {
    std::string candidates;
    std::string references;
    std::string out;  // CSV; JSON alongside
  };

  inline int cmd_score_captions(const ScoreCaptionsOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      const auto cand_raw = detail::read_captions(o.candidates);
      const auto ref_raw = detail::read_captions(o.references);
      if (cand_raw.empty())
        throw InvalidArgument("score-captions: no candidates");
      std::map<std::string, Tokens> cands;
      std::map<std::string, std::vector<Tokens>> refs;
      for (const auto& [id, caps] : cand_raw) {
        if (caps.size() != 1)
          throw InvalidArgument("score-captions: id '" + id + "' has " + std::to_string(caps.size())
                                + " candidate captions, expected 1");
        auto it = ref_raw.find(id);
        if (it == ref_raw.end())
          throw InvalidArgument("score-captions: no reference for id '" + id + "'");
        cands[id] = tokenize(caps.front());
        for (const auto& c : it->second)
          refs[id].push_back(tokenize(c));
      }
      std::optional<metrics::CiderResult> cider;
      if (cands.size() >= 2)
        cider = metrics::cider(cands, refs);
      else
        io.err << "warning: CIDEr needs at least 2 ids; column omitted\n";

      std::string csv = cider ? "id,caption,bleu4,meteor,cider\n" : "id,caption,bleu4,meteor\n";
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      double bleu_sum = 0, meteor_sum = 0;
      for (const auto& [id, toks] : cands) {
        const double b = metrics::bleu4(toks, refs[id]);
        const double m = metrics::meteor_lite(toks, refs[id]);
        bleu_sum += b;
        meteor_sum += m;
        const auto& caption = cand_raw.at(id).front();
        csv += detail::csv_quote(id) + "," + detail::csv_quote(caption) + "," + detail::fmt(b) + "," + detail::fmt(m);
        nlohmann::ordered_json row;
        row["id"] = id;
        row["caption"] = caption;
        row["bleu4"] = b;
        row["meteor"] = m;
        if (cider) {
          csv += "," + detail::fmt(cider->per_id.at(id));
          row["cider"] = cider->per_id.at(id);
        }
        csv += '\n';
        rows.push_back(std::move(row));
      }
      const double n = static_cast<double>(cands.size());
      csv += "corpus,," + detail::fmt(bleu_sum / n) + "," + detail::fmt(meteor_sum / n);
      nlohmann::ordered_json corpus;
      corpus["bleu4"] = bleu_sum / n;
      corpus["meteor"] = meteor_sum / n;
      if (cider) {
        csv += "," + detail::fmt(cider->corpus);
        corpus["cider"] = cider->corpus;
      }
      csv += '\n';
      nlohmann::ordered_json j;
      j["per_id"] = std::move(rows);
      j["corpus"] = std::move(corpus);
      detail::write_file(o.out, csv);
      detail::write_file(detail::sibling(o.out, ".json"), j.dump(2) + "\n");
      io.out << csv;
      return int{kOk};
    });
  }

  struct ReportOptions
  {
    std::vector<std::string> inputs;
    std::string out;                       // text table
    std::optional<std::string> plot_csv;   // default: out with .csv
  };

  inline int cmd_report(const ReportOptions& o, Io io = {})
  {
    return guarded(io, [&] {
      if (o.inputs.empty())
        throw InvalidArgument("report: no metrics files");
      metrics::ReportSet set;
      for (const auto& path : o.inputs) {
        try {
          set.reports.push_back(metrics::MetricsReport::from_json(zsscene::detail::read_json_file(path)));
        } catch (const InvalidArgument& e) {
          throw InvalidArgument(path + ": " + e.what());
        }
      }
      const auto table = set.text_table();
      detail::write_file(o.out, table);
      detail::write_file(o.plot_csv.value_or(detail::sibling(o.out, ".csv")), set.plot_csv());
      io.out << table;
      return int{kOk};
    });
  }
}

#endif
