#pragma once

#include <string>
#include <string_view>

#include "ruinkit/model.hpp"

namespace ruinkit {

// JSON object with keys a, sigma, c, alpha1, alpha2, mu1, mu2 and an optional
// interarrival law, {"kind": "poisson"} or {"kind": "gamma", "shape": k,
// "scale": s}. Unknown or missing keys throw Error(InvalidInput). The values
// are not validated here; see validate().
ModelParams model_from_json(std::string_view text);

// Inverse of model_from_json; numbers use shortest round-trip formatting.
std::string model_to_json(const ModelParams& params);

}  // namespace ruinkit
