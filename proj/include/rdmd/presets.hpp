#pragma once

// Experiment presets for the three benchmark systems. The same documents ship
// as presets/<name>.json.

#include <string>
#include <vector>

#include <json.hpp>

#include "rdmd/spectrum_harness.hpp"

namespace rdmd {

struct PresetInfo {
  std::string name;
  std::string description;
  nlohmann::json document;
};

inline std::vector<PresetInfo> experiment_presets() {
  using nlohmann::json;
  const json rotation = {{"type", "RandomRotation"}, {"nu", 0.5}, {"dyn_noise_halfwidth", 0.5}};
  const json linear = {{"type", "NoisyLinear"}, {"forcing_halfwidth", 0.5}};
  const json stuart_landau = {{"type", "StuartLandau"}, {"gamma", 1.0},  {"beta", 1.0},     {"delta", 0.5},
                              {"epsilon", 0.05},        {"dt", 0.05},    {"substeps", 10}, {"safety_radius", 1000.0}};

  std::vector<PresetInfo> out;
  auto add = [&](std::string name, std::string description, json doc) {
    doc["name"] = name;
    doc["description"] = description;
    out.push_back({std::move(name), std::move(description), std::move(doc)});
  };

  add("rotation-measnoise",
      "random rotation, 10 trig observables with U[-0.5,0.5] measurement noise; alg3 with the "
      "shift-1 dual against alg1",
      {{"system", rotation},
       {"n_samples", 10000},
       {"burn_in", 0},
       {"realizations", 5},
       {"seed", 1001},
       {"dictionary", {{"preset", "RotationTrig"}, {"K", 5}}},
       {"noise", {{"kind", "UniformReal"}, {"scale", 0.5}}},
       {"dual", {{"shift", 1}, {"augment", json::array()}, {"extra_shifts", 0}}},
       {"algorithm", {{"name", "alg3"}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"symmetric", 5}}}});

  add("rotation-hankel",
      "random rotation, sin x + sin 2x + sin 3x with U[-0.5,0.5] noise, 24 delays, dual shift 24, "
      "alg4 at rank 6 against alg1",
      {{"system", rotation},
       {"n_samples", 10000},
       {"burn_in", 0},
       {"realizations", 5},
       {"seed", 1002},
       {"dictionary", {{"preset", "RotationSum"}, {"K", 3}}},
       {"noise", {{"kind", "UniformReal"}, {"scale", 0.5}}},
       {"embedding", {{"delays", 24}, {"dual_shift", 24}}},
       {"algorithm", {{"name", "alg4"}, {"rank", 6}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"symmetric", 3}}}});

  add("rotation-hankel-augmented",
      "as rotation-hankel with 8 delays and a dual augmented with f, f^2, f^3 at "
      "43 past shifts t-1 .. t-43",
      {{"system", rotation},
       {"n_samples", 10000},
       {"burn_in", 0},
       {"realizations", 5},
       {"seed", 1003},
       {"dictionary", {{"preset", "RotationSum"}, {"K", 3}}},
       {"noise", {{"kind", "UniformReal"}, {"scale", 0.5}}},
       {"embedding", {{"delays", 8}, {"dual_shift", 8}}},
       {"dual", {{"shift", 1}, {"augment", {"id", "square", "cube"}}, {"extra_shifts", 42}}},
       {"algorithm", {{"name", "alg4"}, {"rank", 6}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"symmetric", 3}}}});

  add("linear-measnoise",
      "linear system with U[-0.5,0.5]^4 forcing, state observables with standard normal "
      "measurement noise; alg3 with the shift-1 dual against alg1",
      {{"system", linear},
       {"n_samples", 5000},
       {"burn_in", 500},
       {"realizations", 5},
       {"seed", 1004},
       {"dictionary", {{"preset", "LinearState"}}},
       {"noise", {{"kind", "GaussianReal"}, {"scale", 1.0}}},
       {"dual", {{"shift", 1}, {"augment", json::array()}, {"extra_shifts", 0}}},
       {"algorithm", {{"name", "alg3"}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"all", true}}}});

  add("linear-hankel",
      "linear system, x1+x2+x3+x4 with 4 delays and dual shift 3; alg3 against alg1",
      {{"system", linear},
       {"n_samples", 5000},
       {"burn_in", 500},
       {"realizations", 5},
       {"seed", 1005},
       {"dictionary", {{"preset", "LinearSum"}}},
       {"noise", {{"kind", "None"}, {"scale", 0.0}}},
       {"embedding", {{"delays", 4}, {"dual_shift", 3}}},
       {"algorithm", {{"name", "alg3"}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"all", true}}}});

  add("sl-measnoise",
      "stochastic Stuart-Landau, f_{+-1..6} with complex Gaussian noise (variance 1/4 per "
      "component), dt 0.05; alg3 with the shift-1 dual against alg1, continuous-time spectrum",
      {{"system", stuart_landau},
       {"n_samples", 100000},
       {"burn_in", 1000},
       {"realizations", 5},
       {"seed", 1006},
       {"dictionary", {{"preset", "StuartLandauExp"}, {"K", 6}}},
       {"noise", {{"kind", "ComplexGaussian"}, {"scale", 0.5}}},
       {"dual", {{"shift", 1}, {"augment", json::array()}, {"extra_shifts", 0}}},
       {"algorithm", {{"name", "alg3"}}},
       {"baseline", {{"name", "alg1"}}},
       {"truth", {{"symmetric", 6}, {"l", 0}}}});

  add("sl-hankel",
      "stochastic Stuart-Landau, sum of f_{+-1..6} with 400 rows (f and 399 delays), dual "
      "shift 399; alg4 at rank 12 against alg2 at rank 12",
      {{"system", stuart_landau},
       {"n_samples", 100000},
       {"burn_in", 1000},
       {"realizations", 5},
       {"seed", 1007},
       {"dictionary", {{"preset", "StuartLandauExpSum"}, {"K", 6}}},
       {"noise", {{"kind", "None"}, {"scale", 0.0}}},
       {"embedding", {{"delays", 400}, {"dual_shift", 399}}},
       {"algorithm", {{"name", "alg4"}, {"rank", 12}}},
       {"baseline", {{"name", "alg2"}, {"rank", 12}}},
       {"truth", {{"symmetric", 6}, {"l", 0}}}});

  return out;
}

inline std::optional<ExperimentConfig> find_preset(const std::string& name) {
  for (const auto& p : experiment_presets())
    if (p.name == name) return config_from_json(p.document);
  return std::nullopt;
}

}  // namespace rdmd
