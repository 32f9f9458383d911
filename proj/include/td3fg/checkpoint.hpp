#pragma once

// Network checkpoint format (JSON, one object per file):
//
//   {
//     "format": "td3fg-mlp",
//     "version": 1,
//     "output_activation": "tanh" | "identity",
//     "output_scale": <double>,
//     "hidden_activation": "tanh" | "relu",
//     "layers": [ {"in": <int>, "out": <int>,
//                  "weight": [out*in doubles, row-major],
//                  "bias": [out doubles]}, ... ]
//   }
//
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "td3fg/error.hpp"
#include "td3fg/mlp.hpp"

namespace td3fg {

inline nlohmann::json mlp_to_json(const MLPParams& p) {
  nlohmann::json j;
  j["format"] = "td3fg-mlp";
  j["version"] = 1;
  j["output_activation"] = p.output_activation == OutputActivation::Tanh ? "tanh" : "identity";
  j["output_scale"] = p.output_scale;
  j["hidden_activation"] = p.hidden_activation == HiddenActivation::Relu ? "relu" : "tanh";
  auto& layers = j["layers"];
  layers = nlohmann::json::array();
  for (const auto& l : p.layers) {
    layers.push_back({{"in", l.in()}, {"out", l.out()}, {"weight", l.weight.data()},
                      {"bias", l.bias}});
  }
  return j;
}

inline MLPParams mlp_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "td3fg-mlp") {
      throw ParseError("checkpoint: unexpected format tag");
    }
    if (j.at("version").get<int>() != 1) throw ParseError("checkpoint: unsupported version");
    MLPParams p;
    const auto act = j.at("output_activation").get<std::string>();
    if (act == "tanh") {
      p.output_activation = OutputActivation::Tanh;
    } else if (act == "identity") {
      p.output_activation = OutputActivation::Identity;
    } else {
      throw ParseError("checkpoint: unknown output activation '" + act + "'");
    }
    p.output_scale = j.at("output_scale").get<double>();
    const auto hidden = j.at("hidden_activation").get<std::string>();
    if (hidden == "relu") {
      p.hidden_activation = HiddenActivation::Relu;
    } else if (hidden == "tanh") {
      p.hidden_activation = HiddenActivation::Tanh;
    } else {
      throw ParseError("checkpoint: unknown hidden activation '" + hidden + "'");
    }
    for (const auto& lj : j.at("layers")) {
      const auto in = lj.at("in").get<std::size_t>();
      const auto out = lj.at("out").get<std::size_t>();
      Layer l{Matrix(out, in, lj.at("weight").get<std::vector<double>>()),
              lj.at("bias").get<std::vector<double>>()};
      p.layers.push_back(std::move(l));
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_mlp(const MLPParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << mlp_to_json(p).dump() << '\n';
  if (!out) throw InputError("write failed for '" + path + "'");
}

inline MLPParams load_mlp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint '") + path + "': " + e.what());
  }
  return mlp_from_json(j);
}

}  // namespace td3fg
