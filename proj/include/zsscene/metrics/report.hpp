#ifndef ZSSCENE_METRICS_REPORT_HPP
#define ZSSCENE_METRICS_REPORT_HPP

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zsscene/core/error.hpp"

namespace zsscene::metrics
{
  inline constexpr int kReportSchemaVersion = 1;

  struct MetricField
  {
    std::string_view key;
    std::string_view display;
    bool percent;
  };

  /// Report fields in output order. Display names follow the usual
  /// evaluation table; rows marked (%) are scaled by 100 in CSV and text.
  inline constexpr std::array<MetricField, 16> kMetricFields{{
    {"top1", "Top-1 Accuracy (%)", true},
    {"top5", "Top-5 Accuracy (%)", true},
    {"zs_hit1", "Zero-Shot Hit@1 (%)", true},
    {"zs_hit5", "Zero-Shot Hit@5 (%)", true},
    {"zs_hit1_classic", "Zero-Shot Hit@1 classic (%)", true},
    {"zs_hit5_classic", "Zero-Shot Hit@5 classic (%)", true},
    {"zs_hit1_generalized", "Zero-Shot Hit@1 generalized (%)", true},
    {"zs_hit5_generalized", "Zero-Shot Hit@5 generalized (%)", true},
    {"map", "Mean Average Precision (mAP)", false},
    {"bleu4", "BLEU-4 Score", false},
    {"meteor", "METEOR Score", false},
    {"cider", "CIDEr Score", false},
    {"mean_cosine", "Embedding Cosine Similarity", false},
    {"f1_unseen", "F1-Score (Unseen Classes)", false},
    {"inference_ms_per_record", "Inference Time (ms/image)", false},
    {"attention_entropy", "Graph Attention Entropy", false},
  }};

  inline const MetricField& metric_field(std::string_view key)
  {
    for (const auto& f : kMetricFields)
      if (f.key == key)
        return f;
    throw InvalidArgument("unknown metric '" + std::string(key) + "'");
  }

  /// Evaluation results; inapplicable metrics are absent.
  struct MetricsReport
  {
    std::string run = "run";
    std::string zs_mode = "classic";
    std::map<std::string, double> values;  // keyed by MetricField::key

    void set(std::string_view key, double v)
    {
      metric_field(key);
      values[std::string(key)] = v;
    }

    std::optional<double> get(std::string_view key) const
    {
      auto it = values.find(std::string(key));
      return it == values.end() ? std::nullopt : std::optional<double>(it->second);
    }

    nlohmann::ordered_json to_json() const
    {
      nlohmann::ordered_json j;
      j["schema_version"] = kReportSchemaVersion;
      j["run"] = run;
      j["zs_mode"] = zs_mode;
      for (const auto& f : kMetricFields)
        if (auto v = get(f.key))
          j[std::string(f.key)] = *v;
      return j;
    }

    std::string dump() const { return to_json().dump(2) + "\n"; }

    static MetricsReport from_json(const nlohmann::json& j)
    {
      if (!j.is_object())
        throw InvalidArgument("metrics report must be a JSON object");
      if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw InvalidArgument("metrics report has no schema_version");
      if (j["schema_version"].get<int>() != kReportSchemaVersion)
        throw InvalidArgument("metrics report schema_version " + std::to_string(j["schema_version"].get<int>())
                              + " is not supported (expected " + std::to_string(kReportSchemaVersion) + ")");
      MetricsReport r;
      for (const auto& [key, v] : j.items()) {
        if (key == "schema_version")
          continue;
        if (key == "run" || key == "zs_mode") {
          if (!v.is_string())
            throw InvalidArgument("metrics report field '" + key + "' must be a string");
          (key == "run" ? r.run : r.zs_mode) = v.get<std::string>();
          continue;
        }
        if (!v.is_number())
          throw InvalidArgument("metrics report field '" + key + "' must be a number");
        r.set(key, v.get<double>());
      }
      return r;
    }

    /// `metric,value` rows using display names, percent rows scaled by 100.
    std::string table_csv() const
    {
      std::ostringstream out;
      out << "metric,value\n";
      for (const auto& f : kMetricFields)
        if (auto v = get(f.key))
          out << '"' << f.display << "\"," << format_value(f, *v) << '\n';
      return out.str();
    }

    static std::string format_value(const MetricField& f, double v)
    {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", f.percent ? 100.0 * v : v);
      return buf;
    }
  };

  /// Combined view of several reports: aligned text table and a long-form
  /// `metric,run,value` CSV. Rows ordered by metric name, then run name.
  struct ReportSet
  {
    std::vector<MetricsReport> reports;

    void validate() const
    {
      if (reports.empty())
        throw InvalidArgument("report: no metrics files");
      std::set<std::string> runs;
      for (const auto& r : reports)
        if (!runs.insert(r.run).second)
          throw InvalidArgument("report: duplicate run name '" + r.run + "'");
    }

    std::vector<std::string> metric_names() const
    {
      std::set<std::string> names;
      for (const auto& r : reports)
        for (const auto& [k, _] : r.values)
          names.insert(std::string(metric_field(k).display));
      return {names.begin(), names.end()};
    }

    std::vector<const MetricsReport*> sorted_runs() const
    {
      std::vector<const MetricsReport*> out;
      for (const auto& r : reports)
        out.push_back(&r);
      std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->run < b->run; });
      return out;
    }

    static std::optional<double> lookup(const MetricsReport& r, const std::string& display)
    {
      for (const auto& f : kMetricFields)
        if (f.display == display)
          if (auto v = r.get(f.key))
            return std::stod(MetricsReport::format_value(f, *v));
      return std::nullopt;
    }

    std::string plot_csv() const
    {
      validate();
      std::ostringstream out;
      out << "metric,run,value\n";
      for (const auto& name : metric_names())
        for (const auto* r : sorted_runs())
          if (auto v = lookup(*r, name)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", *v);
            out << '"' << name << "\"," << r->run << ',' << buf << '\n';
          }
      return out.str();
    }

    std::string text_table() const
    {
      validate();
      const auto names = metric_names();
      const auto runs = sorted_runs();
      std::size_t w0 = std::string_view("metric").size();
      for (const auto& n : names)
        w0 = std::max(w0, n.size());
      std::vector<std::size_t> widths;
      std::vector<std::vector<std::string>> cells(names.size());
      for (const auto* r : runs) {
        std::size_t w = r->run.size();
        for (std::size_t i = 0; i != names.size(); ++i) {
          std::string cell = "-";
          if (auto v = lookup(*r, names[i])) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.4f", *v);
            cell = buf;
          }
          w = std::max(w, cell.size());
          cells[i].push_back(std::move(cell));
        }
        widths.push_back(w);
      }
      std::ostringstream out;
      auto pad = [&](const std::string& s, std::size_t w, bool right) {
        if (right)
          out << std::string(w - s.size(), ' ') << s;
        else
          out << s << std::string(w - s.size(), ' ');
      };
      pad("metric", w0, false);
      for (std::size_t c = 0; c != runs.size(); ++c) {
        out << "  ";
        pad(runs[c]->run, widths[c], true);
      }
      out << '\n';
      for (std::size_t i = 0; i != names.size(); ++i) {
        pad(names[i], w0, false);
        for (std::size_t c = 0; c != runs.size(); ++c) {
          out << "  ";
          pad(cells[i][c], widths[c], true);
        }
        out << '\n';
      }
      return out.str();
    }
  };
}

#endif
