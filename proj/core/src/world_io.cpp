#include "cguide/world_io.hpp"

#include <fstream>

namespace cguide {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError(path + ": " + msg);
}

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path + "." + key, "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix_of(const json& j, Eigen::Index d, const std::string& path) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d) fail(path, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vector row = vector_of(j[static_cast<size_t>(r)], rp);
    if (row.size() != d) fail(rp, "row has wrong length");
    m.row(r) = row.transpose();
  }
  return m;
}

GaussianComponent component_of(const json& j, Eigen::Index d, const std::string& path) {
  const Vector mean = vector_of(field(j, "mean", path), path + ".mean");
  if (mean.size() != d) fail(path + ".mean", "length " + std::to_string(mean.size()) + " != dimension " + std::to_string(d));
  const bool has_var = j.contains("variance");
  const bool has_cov = j.contains("cov");
  if (has_var && has_cov) fail(path, "'variance' and 'cov' are mutually exclusive");
  try {
    if (has_cov) return GaussianComponent(mean, matrix_of(j.at("cov"), d, path + ".cov"));
    const double var = has_var ? number(j.at("variance"), path + ".variance") : 1.0;
    if (!(var > 0.0)) fail(path + ".variance", "must be positive");
    return GaussianComponent::isotropic(mean, var);
  } catch (const ConfigError& e) {
    if (std::string(e.what()).rfind(path, 0) == 0) throw;
    fail(path, e.what());
  }
}

}  // namespace

World world_from_json(const json& j) {
  const std::string root = "world";
  const json& dim_j = field(j, "dimension", root);
  if (!dim_j.is_number_integer() || dim_j.get<long>() <= 0) fail(root + ".dimension", "expected a positive integer");
  const auto d = static_cast<Eigen::Index>(dim_j.get<long>());
  const json& prompts = field(j, "prompts", root);
  if (!prompts.is_array() || prompts.empty()) fail(root + ".prompts", "expected a non-empty array");
  World world(d);
  for (size_t i = 0; i < prompts.size(); ++i) {
    const std::string p = root + ".prompts[" + std::to_string(i) + "]";
    const json& entry = prompts[i];
    const json& tokens_j = field(entry, "tokens", p);
    if (!tokens_j.is_array() || tokens_j.empty()) fail(p + ".tokens", "expected a non-empty array of strings");
    std::vector<std::string> tokens;
    for (size_t k = 0; k < tokens_j.size(); ++k) {
      if (!tokens_j[k].is_string()) fail(p + ".tokens[" + std::to_string(k) + "]", "expected a string");
      tokens.push_back(tokens_j[k].get<std::string>());
    }
    const double prior = entry.contains("prior") ? number(entry.at("prior"), p + ".prior") : 0.0;
    const json& comps = field(entry, "components", p);
    if (!comps.is_array() || comps.empty()) fail(p + ".components", "expected a non-empty array");
    std::vector<double> weights;
    std::vector<GaussianComponent> cs;
    for (size_t k = 0; k < comps.size(); ++k) {
      const std::string cp = p + ".components[" + std::to_string(k) + "]";
      const double w = comps[k].contains("weight") ? number(comps[k].at("weight"), cp + ".weight") : 1.0;
      if (!(w > 0.0)) fail(cp + ".weight", "must be positive");
      weights.push_back(w);
      cs.push_back(component_of(comps[k], d, cp));
    }
    try {
      world.add(PromptId(tokens), GaussianMixture(std::move(weights), std::move(cs)), prior);
    } catch (const std::invalid_argument& e) {
      fail(p, e.what());
    }
  }
  return world;
}

json world_to_json(const World& world) {
  json prompts = json::array();
  for (const auto& prompt : world.prompts()) {
    const PromptEntry& e = world.entry(prompt);
    json comps = json::array();
    for (size_t k = 0; k < e.mixture.size(); ++k) {
      const auto& c = e.mixture.components()[k];
      json cj;
      cj["weight"] = e.mixture.weights()[k];
      cj["mean"] = std::vector<double>(c.mean().data(), c.mean().data() + c.mean().size());
      if (c.is_isotropic()) {
        cj["variance"] = c.cov()(0, 0);
      } else {
        json rows = json::array();
        for (Eigen::Index r = 0; r < c.cov().rows(); ++r) {
          std::vector<double> row(static_cast<size_t>(c.cov().cols()));
          for (Eigen::Index q = 0; q < c.cov().cols(); ++q) row[static_cast<size_t>(q)] = c.cov()(r, q);
          rows.push_back(row);
        }
        cj["cov"] = rows;
      }
      comps.push_back(cj);
    }
    prompts.push_back({{"tokens", prompt.tokens()}, {"prior", e.prior}, {"components", comps}});
  }
  return {{"dimension", world.dim()}, {"prompts", prompts}};
}

World load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open world file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("world file '" + path.string() + "': " + e.what());
  }
  return world_from_json(j);
}

}  // namespace cguide
