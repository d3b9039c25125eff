#pragma once

// HTTP inference service: POST /generate, GET /schema, GET /health.
// Requests are stateless; every call carries the full history.

#include "crayon/corpus/dialogue.hpp"
#include "crayon/model/checkpoint.hpp"
#include "crayon/model/generate.hpp"
#include "crayon/training/reward.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace crayon::service {

using nlohmann::json;

inline constexpr int kMaxGenerateLength = 100;

struct ServedModel {
  model::Checkpoint<float> checkpoint;
  std::string digest;
  std::string source;
  train::RewardConfig reward = train::RewardConfig::standard();
};

struct Reply {
  int status = 200;
  json body;
};

// Failure with an HTTP status attached.
class RequestError : public std::runtime_error {
 public:
  RequestError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct GenerateRequest {
  std::vector<Tokens> history;
  std::vector<Tokens> persona;
  attr::PartialAttributes attributes;
  model::GenerateOptions decode;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::optional<int> parse_value(attr::Attribute a, const json& v) {
  const std::string name(attr::name_of(a));
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "auto") return std::nullopt;
    const auto labels = attr::value_labels(a);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == s) return static_cast<int>(i);
    }
    throw RequestError(400, "invalid value '" + s + "' for attribute " + name);
  }
  int x = 0;
  if (v.is_boolean()) x = v.get<bool>() ? 1 : 0;
  else if (v.is_number_integer()) x = v.get<int>();
  else throw RequestError(400, "invalid value for attribute " + name);
  if (x < 0 || x >= attr::arity_of(a)) throw RequestError(400, "value out of range for attribute " + name);
  return x;
}

inline std::vector<Tokens> utterances(const json& j, const char* field) {
  std::vector<Tokens> out;
  if (!j.contains(field)) return out;
  if (!j[field].is_array()) throw RequestError(400, std::string(field) + " must be a list of strings");
  for (const auto& u : j[field]) {
    if (!u.is_string()) throw RequestError(400, std::string(field) + " must be a list of strings");
    out.push_back(tokenize(u.get<std::string>()));
  }
  return out;
}

}  // namespace detail

inline GenerateRequest parse_generate_request(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw RequestError(400, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw RequestError(400, "request body must be a JSON object");
  static const std::set<std::string> known{"history", "persona", "attributes", "decode", "temperature", "max_len", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw RequestError(400, "unknown field '" + k + "'");
  }
  GenerateRequest r;
  r.history = detail::utterances(j, "history");
  r.persona = detail::utterances(j, "persona");
  if (j.contains("attributes")) {
    if (!j["attributes"].is_object()) throw RequestError(400, "attributes must be an object");
    for (const auto& [name, v] : j["attributes"].items()) {
      const auto a = attr::attribute_from_name(name);
      if (!a) throw RequestError(400, "unknown attribute '" + name + "'");
      r.attributes[attr::index_of(*a)] = detail::parse_value(*a, v);
    }
  }
  const std::string decode = j.value("decode", "greedy");
  if (decode != "greedy" && decode != "sample") throw RequestError(400, "decode must be greedy or sample");
  r.decode.sample = decode == "sample";
  try {
    r.decode.temperature = j.value("temperature", 1.0);
    r.decode.max_len = j.value("max_len", 40);
    r.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw RequestError(400, e.what());
  }
  if (r.decode.max_len < 1 || r.decode.max_len > kMaxGenerateLength) throw RequestError(400, "max_len must be in [1, 100]");
  if (!(r.decode.temperature > 0.0)) throw RequestError(400, "temperature must be positive");
  bool any = false;
  for (const auto& u : r.history) any = any || !u.empty();
  if (!any) throw RequestError(422, "history must contain at least one non-empty utterance");
  return r;
}

inline json schema_document(const attr::AttributeSchema& schema) {
  json doc;
  doc["attributes"] = to_json(schema);
  doc["token_bins"] = attr::kTokenBins;
  return doc;
}

class InferenceService {
 public:
  InferenceService() = default;

  void install(std::shared_ptr<const ServedModel> m) {
    std::lock_guard lock(mu_);
    current_ = std::move(m);
  }

  // Loads and installs a checkpoint; the previous snapshot stays in use by
  // requests already holding it.
  void load(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    auto m = std::make_shared<ServedModel>();
    m->checkpoint = model::deserialize_checkpoint<float>(bytes, path.string());
    m->digest = model::digest_hex(bytes);
    m->source = path.string();
    if (m->checkpoint.extra.contains("reward")) train::update_from_json(m->reward, m->checkpoint.extra["reward"]);
    install(std::move(m));
  }

  std::shared_ptr<const ServedModel> snapshot() const {
    std::lock_guard lock(mu_);
    return current_;
  }

  Reply health() const {
    const auto m = snapshot();
    if (!m) return {200, {{"status", "no_model"}}};
    return {200, {{"status", "ok"}, {"checkpoint", m->source}, {"digest", m->digest}}};
  }

  Reply schema() const {
    const auto m = snapshot();
    return {200, schema_document(m ? m->checkpoint.resources.schema : attr::AttributeSchema::standard())};
  }

  Reply generate(const std::string& body) const {
    try {
      const auto req = parse_generate_request(body);
      const auto m = snapshot();
      if (!m) throw RequestError(503, "no model loaded");
      return {200, run(*m, req)};
    } catch (const RequestError& e) {
      return {e.status(), {{"error", e.what()}}};
    } catch (const std::invalid_argument& e) {
      return {400, {{"error", e.what()}}};
    }
  }

  void mount(httplib::Server& server) const {
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_content(r.body.dump(), "application/json; charset=utf-8");
    };
    server.Get("/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server.Get("/schema", [this, send](const httplib::Request&, httplib::Response& res) { send(res, schema()); });
    server.Post("/generate", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, generate(req.body));
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
  }

 private:
  static json run(const ServedModel& served, const GenerateRequest& req) {
    const auto& ck = served.checkpoint;
    corpus::DialogueExample dialogue{req.persona, req.history, {}};
    const auto results = model::generate(*ck.model, ck.vocab, std::vector<Tokens>{dialogue.context_tokens()},
                                         {req.attributes}, req.decode, req.seed);
    const auto& r = results.front();

    json out;
    out["response"] = join(r.tokens);
    out["tokens"] = r.tokens;
    out["used_attributes"] = to_json(r.used);
    json auto_filled = json::array();
    json prior = json::object();
    for (auto a : attr::kAllAttributes) {
      const auto j = attr::index_of(a);
      if (!req.attributes[j]) auto_filled.push_back(std::string(attr::name_of(a)));
      prior[std::string(attr::name_of(a))] = r.prior[j];
    }
    out["auto_filled"] = std::move(auto_filled);
    out["predicted_prior"] = std::move(prior);
    json styles = json::array();
    for (const auto& s : r.token_styles) styles.push_back({{"specificity", s[0]}, {"relatedness", s[1]}});
    out["token_styles"] = std::move(styles);

    const auto score = train::attribute_consistency_reward(r.tokens, dialogue.last_utterance(), r.used, served.reward,
                                                           ck.resources);
    json per = json::object();
    for (auto a : attr::kAllAttributes) per[std::string(attr::name_of(a))] = score.per_attribute[attr::index_of(a)];
    out["reward_if_scored"] = {{"per_attribute", std::move(per)}, {"total", score.total},
                               {"reannotated", to_json(score.reannotated)}};
    return out;
  }

  mutable std::mutex mu_;
  std::shared_ptr<const ServedModel> current_;
};

}  // namespace crayon::service
