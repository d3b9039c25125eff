#pragma once

#include "crayon/attributes/schema.hpp"
#include "crayon/io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

namespace crayon::model {

struct ModelConfig {
  int vocab_size = 0;
  int word_dim = 300;
  int encoder_layers = 2;
  int encoder_hidden = 300;  // both directions together
  int decoder_hidden = 300;
  int attr_dim = 300;
  int style_mlp_hidden = 300;
  int predictor_hidden = 300;
  int bow_hidden = 300;
  double keep_prob = 0.9;
  double gumbel_tau = 1.0;
  double init_range = 0.1;
  std::uint64_t seed = 1;
  // Attributes fed to the decoder and trained by the predictor losses.
  std::array<bool, attr::kAttributeCount> enabled{true, true, true, true, true};

  int encoder_direction_hidden() const { return encoder_hidden / 2; }
  bool is_enabled(attr::Attribute a) const { return enabled[attr::index_of(a)]; }

  void validate() const {
    if (vocab_size < 4) throw ConfigError("model: vocab_size must cover the 4 reserved ids");
    if (word_dim <= 0 || decoder_hidden <= 0 || attr_dim <= 0 || style_mlp_hidden <= 0 || predictor_hidden <= 0 ||
        bow_hidden <= 0) {
      throw ConfigError("model: dimensions must be positive");
    }
    if (encoder_layers < 1) throw ConfigError("model: encoder_layers must be >= 1");
    if (encoder_hidden <= 0 || encoder_hidden % 2 != 0) throw ConfigError("model: encoder_hidden must be even and positive");
    if (keep_prob <= 0.0 || keep_prob > 1.0) throw ConfigError("model: keep_prob must be in (0, 1]");
    if (gumbel_tau <= 0.0) throw ConfigError("model: gumbel_tau must be positive");
  }
};

inline nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json enabled = nlohmann::json::object();
  for (auto a : attr::kAllAttributes) enabled[std::string(attr::name_of(a))] = c.is_enabled(a);
  return {{"vocab_size", c.vocab_size},
          {"word_dim", c.word_dim},
          {"encoder_layers", c.encoder_layers},
          {"encoder_hidden", c.encoder_hidden},
          {"decoder_hidden", c.decoder_hidden},
          {"attr_dim", c.attr_dim},
          {"style_mlp_hidden", c.style_mlp_hidden},
          {"predictor_hidden", c.predictor_hidden},
          {"bow_hidden", c.bow_hidden},
          {"keep_prob", c.keep_prob},
          {"gumbel_tau", c.gumbel_tau},
          {"init_range", c.init_range},
          {"seed", c.seed},
          {"enabled", enabled}};
}

// Fields absent from `j` keep the values already in `c`.
inline void update_from_json(ModelConfig& c, const nlohmann::json& j) {
  static const std::array<const char*, 14> known = {"vocab_size", "word_dim", "encoder_layers", "encoder_hidden",
                                                    "decoder_hidden", "attr_dim", "style_mlp_hidden",
                                                    "predictor_hidden", "bow_hidden", "keep_prob", "gumbel_tau",
                                                    "init_range", "seed", "enabled"};
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* n) { return k == n; }) == known.end()) {
      throw ConfigError("model: unknown field '" + k + "'");
    }
  }
  try {
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.word_dim = j.value("word_dim", c.word_dim);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
    c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
    c.attr_dim = j.value("attr_dim", c.attr_dim);
    c.style_mlp_hidden = j.value("style_mlp_hidden", c.style_mlp_hidden);
    c.predictor_hidden = j.value("predictor_hidden", c.predictor_hidden);
    c.bow_hidden = j.value("bow_hidden", c.bow_hidden);
    c.keep_prob = j.value("keep_prob", c.keep_prob);
    c.gumbel_tau = j.value("gumbel_tau", c.gumbel_tau);
    c.init_range = j.value("init_range", c.init_range);
    c.seed = j.value("seed", c.seed);
    if (j.contains("enabled")) {
      for (const auto& [name, on] : j["enabled"].items()) {
        auto a = attr::attribute_from_name(name);
        if (!a) throw ConfigError("model: unknown attribute '" + name + "'");
        c.enabled[attr::index_of(*a)] = on.get<bool>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

}  // namespace crayon::model
