#ifndef ZSSCENE_CONFIG_HPP
#define ZSSCENE_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "zsscene/core/error.hpp"
#include "zsscene/data/synth.hpp"
#include "zsscene/scenegraph.hpp"

namespace zsscene
{
  /// Every tunable of a training/evaluation run. All fields have defaults, so
  /// an empty JSON object is a valid configuration.
  struct RunConfig
  {
    std::size_t d = 64;
    std::size_t prompt_tokens = 8;
    double tau_init = 0.07;
    bool symmetric_loss = false;
    bool trainable_temperature = true;
    std::size_t gat_layers = 2;
    std::string gat_topology = "complete";  // complete | knn
    std::size_t gat_knn = 3;
    std::string gat_activation = "relu";    // relu | tanh | identity
    std::size_t gat_dim = 0;                // 0 means d
    bool fusion = true;                     // false pins lambda at 0
    double lambda_init = 0.5;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 42;
    double feedback_lr = 0.01;

    std::size_t gat_out_dim() const { return gat_dim ? gat_dim : d; }

    Topology topology() const
    {
      return gat_topology == "knn" ? Topology::knn(gat_knn) : Topology::complete();
    }

    Activation activation() const
    {
      if (gat_activation == "tanh")
        return Activation::tanh;
      if (gat_activation == "identity")
        return Activation::identity;
      return Activation::relu;
    }

    void validate() const
    {
      if (d < 2)
        throw InvalidArgument("config: d must be >= 2");
      if (!(tau_init > 0.0) || !std::isfinite(tau_init))
        throw InvalidArgument("config: tau_init must be positive");
      if (gat_layers == 0)
        throw InvalidArgument("config: gat_layers must be >= 1");
      if (gat_topology != "complete" && gat_topology != "knn")
        throw InvalidArgument("config: gat_topology must be \"complete\" or \"knn\"");
      if (gat_topology == "knn" && gat_knn == 0)
        throw InvalidArgument("config: gat_knn must be >= 1");
      if (gat_activation != "relu" && gat_activation != "tanh" && gat_activation != "identity")
        throw InvalidArgument("config: gat_activation must be relu, tanh, or identity");
      if (!(lambda_init > 0.0 && lambda_init < 1.0))
        throw InvalidArgument("config: lambda_init must be in (0, 1)");
      if (!(learning_rate >= 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)
          || !(adam_epsilon > 0.0))
        throw InvalidArgument("config: invalid optimizer settings");
      if (batch_size == 0)
        throw InvalidArgument("config: batch_size must be >= 1");
      if (!(feedback_lr >= 0.0) || !std::isfinite(feedback_lr))
        throw InvalidArgument("config: feedback_lr must be >= 0");
    }
  };

  namespace detail
  {
    inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* what)
    {
      if (!j.is_object())
        throw InvalidArgument(std::string(what) + ": expected a JSON object");
      for (const auto& [key, _] : j.items())
        if (!known.count(key))
          throw InvalidArgument(std::string(what) + ": unknown key '" + key + "'");
    }

    template <class V>
    void read_field(const nlohmann::json& j, const char* key, V& dst, const char* what)
    {
      auto it = j.find(key);
      if (it == j.end())
        return;
      try {
        if constexpr (std::is_same_v<V, std::size_t> || std::is_same_v<V, std::uint64_t>) {
          if (!it->is_number_unsigned())
            throw InvalidArgument("not a nonnegative integer");
        } else if constexpr (std::is_same_v<V, bool>) {
          if (!it->is_boolean())
            throw InvalidArgument("not a boolean");
        } else if constexpr (std::is_same_v<V, double>) {
          if (!it->is_number())
            throw InvalidArgument("not a number");
        } else {
          if (!it->is_string())
            throw InvalidArgument("not a string");
        }
        dst = it->get<V>();
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(what) + ": key '" + key + "' " + e.what());
      }
    }

    inline nlohmann::json read_json_file(const std::string& path)
    {
      std::ifstream in(path);
      if (!in)
        throw InvalidArgument("cannot open '" + path + "'");
      try {
        return nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("'" + path + "': malformed JSON: " + e.what());
      }
    }
  }

#define ZSSCENE_RUN_FIELDS(X)                                                                    \
  X(d) X(prompt_tokens) X(tau_init) X(symmetric_loss) X(trainable_temperature) X(gat_layers)     \
  X(gat_topology) X(gat_knn) X(gat_activation) X(gat_dim) X(fusion) X(lambda_init)              \
  X(learning_rate) X(beta1) X(beta2) X(adam_epsilon) X(epochs) X(batch_size) X(seed) X(feedback_lr)

#define ZSSCENE_SYNTH_FIELDS(X)                                                                  \
  X(num_classes) X(unseen_count) X(latent_dim) X(feature_dim) X(samples_per_class)              \
  X(feature_noise) X(regions_min) X(regions_max) X(vocab_per_class) X(seed)

  inline nlohmann::json to_json(const RunConfig& c)
  {
    nlohmann::json j;
#define X(f) j[#f] = c.f;
    ZSSCENE_RUN_FIELDS(X)
#undef X
    return j;
  }

  inline RunConfig run_config_from_json(const nlohmann::json& j)
  {
    std::set<std::string> known;
#define X(f) known.insert(#f);
    ZSSCENE_RUN_FIELDS(X)
#undef X
    detail::reject_unknown(j, known, "run config");
    RunConfig c;
#define X(f) detail::read_field(j, #f, c.f, "run config");
    ZSSCENE_RUN_FIELDS(X)
#undef X
    c.validate();
    return c;
  }

  inline nlohmann::json to_json(const SynthConfig& c)
  {
    nlohmann::json j;
#define X(f) j[#f] = c.f;
    ZSSCENE_SYNTH_FIELDS(X)
#undef X
    return j;
  }

  inline SynthConfig synth_config_from_json(const nlohmann::json& j)
  {
    std::set<std::string> known;
#define X(f) known.insert(#f);
    ZSSCENE_SYNTH_FIELDS(X)
#undef X
    detail::reject_unknown(j, known, "synth config");
    SynthConfig c;
#define X(f) detail::read_field(j, #f, c.f, "synth config");
    ZSSCENE_SYNTH_FIELDS(X)
#undef X
    c.validate();
    return c;
  }

#undef ZSSCENE_RUN_FIELDS
#undef ZSSCENE_SYNTH_FIELDS
}

#endif
