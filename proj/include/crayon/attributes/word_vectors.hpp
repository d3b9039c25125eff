#pragma once

#include "crayon/io.hpp"
#include "crayon/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace crayon::attr {

struct WordVectorTable {
  int dim = 0;
  std::map<std::string, Eigen::VectorXd> vectors;

  const Eigen::VectorXd* find(const std::string& w) const {
    auto it = vectors.find(w);
    return it == vectors.end() ? nullptr : &it->second;
  }

  void add(const std::string& w, Eigen::VectorXd v) {
    if (dim == 0) dim = static_cast<int>(v.size());
    if (v.size() != dim || dim <= 0) throw std::invalid_argument("word vectors: inconsistent dimension for " + w);
    vectors[w] = std::move(v);
  }

  // Unweighted mean over in-vocabulary tokens; zero when none are known.
  Eigen::VectorXd mean(const Tokens& tokens) const {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
    int n = 0;
    for (const auto& t : tokens) {
      if (const auto* v = find(t)) {
        sum += *v;
        ++n;
      }
    }
    return n > 0 ? Eigen::VectorXd(sum / n) : sum;
  }
};

inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// Token followed by D decimal floats per line.
inline WordVectorTable load_word_vectors(const std::filesystem::path& path) {
  WordVectorTable t;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream in(line);
    std::string word;
    in >> word;
    std::vector<double> vals;
    double x;
    while (in >> x) vals.push_back(x);
    if (!in.eof()) throw FormatError(path.string(), lineno, "non-numeric vector component");
    if (vals.empty()) throw FormatError(path.string(), lineno, "missing vector components");
    if (t.dim != 0 && static_cast<int>(vals.size()) != t.dim) {
      throw FormatError(path.string(), lineno, "expected " + std::to_string(t.dim) + " components");
    }
    t.add(word, Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return t;
}

inline nlohmann::json to_json(const WordVectorTable& t) {
  nlohmann::json words = nlohmann::json::object();
  for (const auto& [w, v] : t.vectors) words[w] = std::vector<double>(v.data(), v.data() + v.size());
  return {{"dim", t.dim}, {"words", std::move(words)}};
}

inline WordVectorTable word_vectors_from_json(const nlohmann::json& j) {
  WordVectorTable t;
  t.dim = j.at("dim").get<int>();
  for (const auto& [w, arr] : j.at("words").items()) {
    auto vals = arr.get<std::vector<double>>();
    t.add(w, Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return t;
}

}  // namespace crayon::attr
