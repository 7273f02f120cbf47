#ifndef ZSSCENE_CHECKPOINT_HPP
#define ZSSCENE_CHECKPOINT_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>

#include <json.hpp>

#include "zsscene/config.hpp"
#include "zsscene/core/error.hpp"
#include "zsscene/model.hpp"

namespace zsscene
{
  inline constexpr int kCheckpointFormatVersion = 1;

  template <class T>
  constexpr const char* precision_name()
  {
    return std::is_same_v<T, float> ? "f32" : "f64";
  }

  template <class T>
  struct Checkpoint
  {
    RunConfig config;
    ModelState<T> model;
  };

  template <class T>
  std::string checkpoint_dump(const RunConfig& cfg, const ModelState<T>& m)
  {
    nlohmann::ordered_json j;
    j["format_version"] = kCheckpointFormatVersion;
    j["precision"] = precision_name<T>();
    nlohmann::ordered_json c;
    const nlohmann::json cfg_json = to_json(cfg);
    for (const auto& [k, v] : cfg_json.items())
      c[k] = v;
    j["config"] = c;
    j["feature_dim"] = m.feature_dim();
    j["region_dim"] = m.region_dim();
    j["vocabulary"] = m.text.vocab.tokens();
    nlohmann::ordered_json params;
    for (const auto& [name, t] : const_cast<ModelState<T>&>(m).named_parameters()) {
      nlohmann::ordered_json p;
      p["rows"] = t->rows();
      p["cols"] = t->cols();
      auto& data = p["data"] = nlohmann::ordered_json::array();
      for (auto v : t->values())
        data.push_back(static_cast<double>(v));
      params[name] = std::move(p);
    }
    j["parameters"] = std::move(params);
    return j.dump() + "\n";
  }

  template <class T>
  Checkpoint<T> checkpoint_parse(const std::string& text)
  {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("checkpoint: malformed JSON: ") + e.what());
    }
    try {
      if (!j.is_object() || !j.contains("format_version"))
        throw InvalidArgument("checkpoint: missing format_version");
      const int version = j.at("format_version").get<int>();
      if (version != kCheckpointFormatVersion)
        throw InvalidArgument("checkpoint: format_version " + std::to_string(version) + " is not supported (expected "
                              + std::to_string(kCheckpointFormatVersion) + ")");
      Checkpoint<T> ck;
      ck.config = run_config_from_json(j.at("config"));
      auto vocab = Vocabulary::from_tokens(j.at("vocabulary").get<Tokens>());
      ck.model = ModelState<T>::init(ck.config, std::move(vocab), j.at("feature_dim").get<std::size_t>(),
                                     j.at("region_dim").get<std::size_t>());
      const auto& params = j.at("parameters");
      auto named = ck.model.named_parameters();
      if (params.size() != named.size())
        throw InvalidArgument("checkpoint: expected " + std::to_string(named.size()) + " parameter arrays, found "
                              + std::to_string(params.size()));
      for (auto& [name, t] : named) {
        if (!params.contains(name))
          throw InvalidArgument("checkpoint: missing parameter '" + name + "'");
        const auto& p = params.at(name);
        const auto rows = p.at("rows").template get<std::size_t>(), cols = p.at("cols").template get<std::size_t>();
        if (rows != t->rows() || cols != t->cols())
          throw ShapeError("checkpoint:" + name, rows, cols, t->rows(), t->cols());
        const auto data = p.at("data").template get<std::vector<double>>();
        if (data.size() != t->size())
          throw InvalidArgument("checkpoint: parameter '" + name + "' has " + std::to_string(data.size())
                                + " values, expected " + std::to_string(t->size()));
        for (std::size_t k = 0; k != data.size(); ++k)
          (*t)[k] = static_cast<T>(data[k]);
        if (!t->all_finite())
          throw InvalidArgument("checkpoint: parameter '" + name + "' has non-finite values");
      }
      return ck;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("checkpoint: ") + e.what());
    }
  }

  template <class T>
  void save_checkpoint(const std::string& path, const RunConfig& cfg, const ModelState<T>& m)
  {
    std::ofstream out(path, std::ios::binary);
    if (!out)
      throw InvalidArgument("cannot write checkpoint '" + path + "'");
    out << checkpoint_dump(cfg, m);
  }

  template <class T>
  Checkpoint<T> load_checkpoint(const std::string& path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in)
      throw InvalidArgument("cannot open checkpoint '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_parse<T>(buf.str());
  }
}

#endif
