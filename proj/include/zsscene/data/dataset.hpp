#ifndef ZSSCENE_DATA_DATASET_HPP
#define ZSSCENE_DATA_DATASET_HPP

#include <cstddef>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "zsscene/core/error.hpp"

namespace zsscene
{
  enum class Split { train, test };

  inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

  /// One scene: a global feature vector standing in for the image, region
  /// feature vectors that become graph nodes, a caption, and a class label.
  struct SceneRecord
  {
    std::string id;
    std::vector<double> image_features;
    std::vector<std::vector<double>> regions;
    std::string caption;
    std::string label;
    Split split = Split::train;
    std::string comment;  // free-form; reserved for external feature extractors

    std::size_t region_dim() const { return regions.empty() ? 0 : regions.front().size(); }

    void validate() const
    {
      if (id.empty())
        throw InvalidArgument("record has an empty id");
      if (image_features.empty())
        throw InvalidArgument("record " + id + ": image_features is empty");
      if (label.empty())
        throw InvalidArgument("record " + id + ": label is empty");
      for (const auto& r : regions)
        if (r.size() != regions.front().size() || r.empty())
          throw InvalidArgument("record " + id + ": region feature dimensions are not uniform");
    }

    friend bool operator==(const SceneRecord&, const SceneRecord&) = default;
  };

  using Dataset = std::vector<SceneRecord>;

  inline nlohmann::json to_json(const SceneRecord& r)
  {
    nlohmann::json j;
    j["id"] = r.id;
    j["image_features"] = r.image_features;
    j["regions"] = r.regions;
    j["caption"] = r.caption;
    j["label"] = r.label;
    j["split"] = std::string(to_string(r.split));
    if (!r.comment.empty())
      j["comment"] = r.comment;
    return j;
  }

  namespace detail
  {
    inline std::vector<double> number_array(const nlohmann::json& j, const char* field)
    {
      if (!j.is_array())
        throw InvalidArgument(std::string("field '") + field + "' must be an array of numbers");
      std::vector<double> out;
      out.reserve(j.size());
      for (const auto& v : j) {
        if (!v.is_number())
          throw InvalidArgument(std::string("field '") + field + "' must contain only numbers");
        out.push_back(v.get<double>());
      }
      return out;
    }

    inline const nlohmann::json& required(const nlohmann::json& j, const char* field)
    {
      auto it = j.find(field);
      if (it == j.end())
        throw InvalidArgument(std::string("missing field '") + field + "'");
      return *it;
    }

    inline std::string required_string(const nlohmann::json& j, const char* field)
    {
      const auto& v = required(j, field);
      if (!v.is_string())
        throw InvalidArgument(std::string("field '") + field + "' must be a string");
      return v.get<std::string>();
    }
  }

  inline SceneRecord record_from_json(const nlohmann::json& j)
  {
    if (!j.is_object())
      throw InvalidArgument("record must be a JSON object");
    static const std::set<std::string> known{"id", "image_features", "regions", "caption", "label", "split", "comment"};
    for (const auto& [key, _] : j.items())
      if (!known.count(key))
        throw InvalidArgument("unknown field '" + key + "'");

    SceneRecord r;
    r.id = detail::required_string(j, "id");
    r.image_features = detail::number_array(detail::required(j, "image_features"), "image_features");
    const auto& regions = detail::required(j, "regions");
    if (!regions.is_array())
      throw InvalidArgument("field 'regions' must be an array of arrays");
    for (const auto& reg : regions)
      r.regions.push_back(detail::number_array(reg, "regions"));
    r.caption = detail::required_string(j, "caption");
    r.label = detail::required_string(j, "label");
    const auto split = detail::required_string(j, "split");
    if (split == "train")
      r.split = Split::train;
    else if (split == "test")
      r.split = Split::test;
    else
      throw InvalidArgument("field 'split' must be \"train\" or \"test\", got \"" + split + "\"");
    if (j.contains("comment")) {
      if (!j["comment"].is_string())
        throw InvalidArgument("field 'comment' must be a string");
      r.comment = j["comment"].get<std::string>();
    }
    r.validate();
    return r;
  }

  /// One JSON object per line; blank lines are skipped. Errors carry the
  /// 1-based line number.
  inline Dataset read_dataset(std::istream& in)
  {
    Dataset out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos)
        continue;
      try {
        out.push_back(record_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }

  inline Dataset load_dataset(const std::string& path)
  {
    std::ifstream in(path);
    if (!in)
      throw InvalidArgument("cannot open dataset '" + path + "'");
    return read_dataset(in);
  }

  inline void write_dataset(std::ostream& out, const Dataset& records)
  {
    for (const auto& r : records)
      out << to_json(r).dump() << '\n';
  }

  inline void save_dataset(const std::string& path, const Dataset& records)
  {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw InvalidArgument("cannot write dataset '" + path + "'");
    write_dataset(out, records);
  }

  /// Substitutes the single "{}" slot of `templ`.
  inline std::string render_prompt(std::string_view templ, std::string_view class_name)
  {
    const auto pos = templ.find("{}");
    if (pos == std::string_view::npos)
      throw InvalidArgument("template '" + std::string(templ) + "' has no {} slot");
    if (templ.find("{}", pos + 2) != std::string_view::npos)
      throw InvalidArgument("template '" + std::string(templ) + "' has more than one {} slot");
    std::string out(templ.substr(0, pos));
    out += class_name;
    out += templ.substr(pos + 2);
    return out;
  }

  /// Non-blank lines of a UTF-8 text file, trailing CR and spaces removed.
  inline std::vector<std::string> read_lines(const std::string& path)
  {
    std::ifstream in(path);
    if (!in)
      throw InvalidArgument("cannot open '" + path + "'");
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
        line.pop_back();
      if (!line.empty())
        out.push_back(line);
    }
    return out;
  }
}

#endif
