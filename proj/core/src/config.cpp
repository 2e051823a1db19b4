#include "ruinkit/config.hpp"

#include <array>
#include <set>

#include <json.hpp>

#include "ruinkit/error.hpp"

namespace ruinkit {

namespace {

using nlohmann::json;

constexpr std::array<const char*, 7> kScalarKeys = {"a", "sigma", "c", "alpha1", "alpha2", "mu1", "mu2"};

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::InvalidInput, std::string("missing key '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number()) throw Error(ErrorCode::InvalidInput, std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* where) {
  for (const auto& item : j.items())
    if (!allowed.contains(item.key()))
      throw Error(ErrorCode::InvalidInput, "unknown key '" + item.key() + "' in " + where);
}

}  // namespace

ModelParams model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed model JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "model must be a JSON object");
  std::set<std::string> allowed(kScalarKeys.begin(), kScalarKeys.end());
  allowed.insert("interarrival");
  reject_unknown(j, allowed, "model");

  ModelParams p;
  p.a = number(j, "a");
  p.sigma = number(j, "sigma");
  p.c = number(j, "c");
  p.alpha1 = number(j, "alpha1");
  p.alpha2 = number(j, "alpha2");
  p.mu1 = number(j, "mu1");
  p.mu2 = number(j, "mu2");

  if (j.contains("interarrival")) {
    const json& law = j.at("interarrival");
    if (!law.is_object() || !law.contains("kind") || !law.at("kind").is_string())
      throw Error(ErrorCode::InvalidInput, "interarrival must be an object with a string 'kind'");
    const auto kind = law.at("kind").get<std::string>();
    if (kind == "poisson") {
      reject_unknown(law, {"kind"}, "interarrival");
      p.interarrival = PoissonArrivals{};
    } else if (kind == "gamma") {
      reject_unknown(law, {"kind", "shape", "scale"}, "interarrival");
      p.interarrival = GammaArrivals{number(law, "shape"), number(law, "scale")};
    } else {
      throw Error(ErrorCode::InvalidInput, "unknown interarrival kind '" + kind + "'");
    }
  }
  return p;
}

std::string model_to_json(const ModelParams& p) {
  nlohmann::ordered_json j = {{"a", p.a},           {"sigma", p.sigma}, {"c", p.c},     {"alpha1", p.alpha1},
            {"alpha2", p.alpha2}, {"mu1", p.mu1},     {"mu2", p.mu2}};
  if (const auto* g = std::get_if<GammaArrivals>(&p.interarrival))
    j["interarrival"] = {{"kind", "gamma"}, {"shape", g->shape}, {"scale", g->scale}};
  else
    j["interarrival"] = {{"kind", "poisson"}};
  return j.dump(2);
}

}  // namespace ruinkit
