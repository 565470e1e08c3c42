/*
 * Copyright 2026 The MTDML Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mtdml/serialize.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mtdml/error.hpp"

namespace mtdml {

namespace {

// ---- model documents ----

json mlp_to_json(const Mlp& net) {
  json layers = json::array();
  for (const DenseLayer& l : net.layers()) {
    layers.push_back({{"weight",
                       {{"rows", l.weight.rows()},
                        {"cols", l.weight.cols()},
                        {"values", std::vector<double>(l.weight.values().begin(),
                                                       l.weight.values().end())}}},
                      {"bias", l.bias}});
  }
  std::vector<std::string> acts;
  for (Activation a : net.spec().activations) acts.push_back(activation_name(a));
  return {{"layer_widths", net.spec().layer_widths}, {"activations", acts}, {"layers", layers}};
}

Mlp mlp_from_json(const json& j) {
  MlpSpec spec;
  spec.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
  for (const auto& a : j.at("activations")) {
    spec.activations.push_back(activation_from_name(a.get<std::string>()));
  }
  Mlp net(spec);
  const json& layers = j.at("layers");
  if (layers.size() != net.layers().size()) {
    throw ParseError("model document: layer count does not match layer_widths");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseLayer& dst = net.layers()[l];
    const json& w = layers[l].at("weight");
    Tensor2 weight(w.at("rows").get<std::size_t>(), w.at("cols").get<std::size_t>(),
                   w.at("values").get<std::vector<double>>());
    std::vector<double> bias = layers[l].at("bias").get<std::vector<double>>();
    if (weight.rows() != dst.weight.rows() || weight.cols() != dst.weight.cols() ||
        bias.size() != dst.bias.size()) {
      throw ParseError("model document: layer " + std::to_string(l) + " has wrong shape");
    }
    dst.weight = std::move(weight);
    dst.bias = std::move(bias);
  }
  return net;
}

json scaler_to_json(const Scaler& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

Scaler scaler_from_json(const json& j) {
  Scaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  if (s.mean.size() != s.stddev.size()) throw ParseError("scaler: length mismatch");
  for (double v : s.stddev) {
    if (!(v > 0.0)) throw ParseError("scaler: stddev entries must be > 0");
  }
  return s;
}

constexpr const char* kNetworkNames[] = {"bottom", "head_i", "head_c", "head_a",
                                         "f_t",    "f_y",    "f_k"};

template <typename F>
auto parse_guard(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

// ---- config documents ----

using Setter = std::function<void(const json&)>;

void apply_fields(const json& doc, const std::map<std::string, Setter>& setters,
                  const std::string& section) {
  if (!doc.is_object()) throw ConfigError(section + ": expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(section + ": unknown key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(section + "." + key + ": " + e.what());
    }
  }
}

template <typename T>
Setter bind(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter bind_count(std::size_t& field) {
  return [&field](const json& v) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("expected a non-negative integer, got " + v.dump());
    }
    field = v.get<std::size_t>();
  };
}

Setter bind_double(double& field) {
  return [&field](const json& v) {
    if (!v.is_number()) throw ConfigError("expected a number, got " + v.dump());
    field = v.get<double>();
  };
}

std::string train_mode_name(TrainMode m) {
  return m == TrainMode::kCrossFit ? "crossfit" : "joint";
}

}  // namespace

json model_to_json(const MtdmlModel& m, const Scaler* scaler) {
  const ModelSpec& s = m.spec();
  json networks = json::object();
  auto nets = m.networks();
  for (std::size_t i = 0; i < nets.size(); ++i) networks[kNetworkNames[i]] = mlp_to_json(*nets[i]);
  return {{"version", kModelVersion},
          {"spec",
           {{"input_dim", s.input_dim},
            {"treatment_dim", s.treatment_dim},
            {"shared_width", s.shared_width},
            {"rep_dim", s.rep_dim},
            {"tower_width", s.tower_width},
            {"hidden_activation", activation_name(s.hidden_activation)},
            {"disentangle", s.disentangle}}},
          {"signs", s.signs},
          {"y_floor", s.y_floor},
          {"networks", networks},
          {"scaler", scaler ? scaler_to_json(*scaler) : json(nullptr)}};
}

MtdmlModel model_from_json(const json& doc, Scaler* scaler) {
  return parse_guard("model document", [&] {
    if (doc.at("version").get<std::string>() != kModelVersion) {
      throw ParseError("model document: unsupported version " + doc.at("version").dump());
    }
    const json& js = doc.at("spec");
    ModelSpec spec;
    spec.input_dim = js.at("input_dim").get<std::size_t>();
    spec.treatment_dim = js.at("treatment_dim").get<std::size_t>();
    spec.shared_width = js.at("shared_width").get<std::size_t>();
    spec.rep_dim = js.at("rep_dim").get<std::size_t>();
    spec.tower_width = js.at("tower_width").get<std::size_t>();
    spec.hidden_activation = activation_from_name(js.at("hidden_activation").get<std::string>());
    spec.disentangle = js.at("disentangle").get<bool>();
    spec.signs = doc.at("signs").get<std::vector<int>>();
    spec.y_floor = doc.at("y_floor").get<double>();
    MtdmlModel m(spec, 0);
    auto nets = m.networks();
    const json& jn = doc.at("networks");
    for (std::size_t i = 0; i < nets.size(); ++i) {
      Mlp loaded = mlp_from_json(jn.at(kNetworkNames[i]));
      if (!(loaded.spec() == nets[i]->spec())) {
        throw ParseError(std::string("model document: network '") + kNetworkNames[i] +
                         "' does not match the spec");
      }
      *nets[i] = std::move(loaded);
    }
    if (scaler && doc.contains("scaler") && !doc.at("scaler").is_null()) {
      *scaler = scaler_from_json(doc.at("scaler"));
    }
    return m;
  });
}

json ensemble_to_json(const CrossFitEnsemble& e) {
  return {{"version", kEnsembleVersion},
          {"fold_seed", e.fold_seed},
          {"scaler", scaler_to_json(e.scaler)},
          {"model_a", model_to_json(e.model_a, &e.scaler)},
          {"model_b", model_to_json(e.model_b, &e.scaler)}};
}

CrossFitEnsemble ensemble_from_json(const json& doc) {
  return parse_guard("ensemble document", [&] {
    if (doc.at("version").get<std::string>() != kEnsembleVersion) {
      throw ParseError("ensemble document: unsupported version " + doc.at("version").dump());
    }
    CrossFitEnsemble e;
    e.fold_seed = doc.at("fold_seed").get<std::uint64_t>();
    e.scaler = scaler_from_json(doc.at("scaler"));
    e.model_a = model_from_json(doc.at("model_a"));
    e.model_b = model_from_json(doc.at("model_b"));
    if (e.model_a.spec().input_dim != e.scaler.mean.size() ||
        e.model_b.spec().input_dim != e.scaler.mean.size() ||
        e.model_a.spec().treatment_dim != e.model_b.spec().treatment_dim) {
      throw ParseError("ensemble document: models and scaler disagree on dimensions");
    }
    return e;
  });
}

void save_ensemble(const CrossFitEnsemble& e, const std::string& path) {
  write_text_file(path, ensemble_to_json(e).dump() + "\n");
}

CrossFitEnsemble load_ensemble(const std::string& path) {
  return ensemble_from_json(read_json_file(path));
}

DgpConfig dgp_from_json(const json& doc, DgpConfig base) {
  DgpConfig c = base;
  std::map<std::string, Setter> s{
      {"n", bind_count(c.n)},
      {"d_i", bind_count(c.d_i)},
      {"d_c", bind_count(c.d_c)},
      {"d_a", bind_count(c.d_a)},
      {"k_t", bind_count(c.k_t)},
      {"gamma", bind_double(c.gamma)},
      {"effect", [&](const json& v) { c.effect = effect_kind_from_name(v.get<std::string>()); }},
      {"effect_constant", bind_double(c.effect_constant)},
      {"slope_hi", bind_double(c.slope_hi)},
      {"slope_lo", bind_double(c.slope_lo)},
      {"rho", bind_double(c.rho)},
      {"phi", bind_double(c.phi)},
      {"sigma_t", bind_double(c.sigma_t)},
      {"t_shift", bind_double(c.t_shift)},
      {"seed", bind(c.seed)},
  };
  apply_fields(doc, s, "dgp");
  c.validate();
  return c;
}

json dgp_to_json(const DgpConfig& c) {
  return {{"n", c.n},
          {"d_i", c.d_i},
          {"d_c", c.d_c},
          {"d_a", c.d_a},
          {"k_t", c.k_t},
          {"gamma", c.gamma},
          {"effect", effect_kind_name(c.effect)},
          {"effect_constant", c.effect_constant},
          {"slope_hi", c.slope_hi},
          {"slope_lo", c.slope_lo},
          {"rho", c.rho},
          {"phi", c.phi},
          {"sigma_t", c.sigma_t},
          {"t_shift", c.t_shift},
          {"seed", c.seed}};
}

TrainConfig train_from_json(const json& doc, TrainConfig base) {
  TrainConfig c = base;
  ModelSpec& a = c.architecture;
  std::map<std::string, Setter> s{
      {"epochs", bind_count(c.epochs)},
      {"batch_size", bind_count(c.batch_size)},
      {"learning_rate", bind_double(c.learning_rate)},
      {"seed", bind(c.seed)},
      {"lambda_rlo", bind_double(c.loss.lambda_rlo)},
      {"lambda_k", bind_double(c.loss.lambda_k)},
      {"rho", bind_double(c.loss.rho)},
      {"folds", bind_count(c.folds)},
      {"mode",
       [&](const json& v) {
         const std::string m = v.get<std::string>();
         if (m == "crossfit") {
           c.mode = TrainMode::kCrossFit;
         } else if (m == "joint") {
           c.mode = TrainMode::kJoint;
         } else {
           throw ConfigError("train.mode: expected 'crossfit' or 'joint'");
         }
       }},
      {"use_ica_disentangle", bind(c.use_ica_disentangle)},
      {"use_tweedie", bind(c.use_tweedie)},
      {"patience", bind_count(c.patience)},
      {"shared_width", bind_count(a.shared_width)},
      {"rep_dim", bind_count(a.rep_dim)},
      {"tower_width", bind_count(a.tower_width)},
      {"hidden_activation",
       [&](const json& v) { a.hidden_activation = activation_from_name(v.get<std::string>()); }},
      {"signs", bind(a.signs)},
      {"y_floor", bind_double(a.y_floor)},
  };
  apply_fields(doc, s, "train");
  c.validate();
  return c;
}

json train_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"seed", c.seed},
          {"lambda_rlo", c.loss.lambda_rlo},
          {"lambda_k", c.loss.lambda_k},
          {"rho", c.loss.rho},
          {"folds", c.folds},
          {"mode", train_mode_name(c.mode)},
          {"use_ica_disentangle", c.use_ica_disentangle},
          {"use_tweedie", c.use_tweedie},
          {"patience", c.patience},
          {"shared_width", c.architecture.shared_width},
          {"rep_dim", c.architecture.rep_dim},
          {"tower_width", c.architecture.tower_width},
          {"hidden_activation", activation_name(c.architecture.hidden_activation)},
          {"signs", c.architecture.signs},
          {"y_floor", c.architecture.y_floor}};
}

EvalSettings eval_from_json(const json& doc, EvalSettings base) {
  EvalSettings c = base;
  std::map<std::string, Setter> s{
      {"dim", bind_count(c.dim)},
      {"threshold",
       [&](const json& v) {
         if (v.is_null()) {
           c.threshold.reset();
         } else {
           c.threshold = v.get<double>();
         }
       }},
      {"contrast", bind_double(c.contrast)},
      {"t_base", bind(c.t_base)},
  };
  apply_fields(doc, s, "eval");
  return c;
}

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig rc;
  const bool sectioned = doc.contains("dgp") || doc.contains("train") || doc.contains("eval");
  if (!sectioned) {
    rc.dgp = dgp_from_json(doc);
    return rc;
  }
  for (const auto& [key, value] : doc.items()) {
    if (key == "dgp") {
      rc.dgp = dgp_from_json(value);
    } else if (key == "train") {
      rc.train = train_from_json(value);
    } else if (key == "eval") {
      rc.eval = eval_from_json(value);
    } else {
      throw ConfigError("config: unknown section '" + key + "'");
    }
  }
  return rc;
}

json metrics_to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"pehe", opt(r.pehe)},
          {"eps_ate", opt(r.eps_ate)},
          {"eps_att", opt(r.eps_att)},
          {"policy_risk", opt(r.policy_risk)},
          {"qini_auuc", opt(r.qini_auuc)},
          {"pcoc", opt(r.pcoc)},
          {"n_evaluated", r.n_evaluated}};
}

MetricsReport metrics_from_json(const json& doc) {
  return parse_guard("metrics document", [&] {
    auto opt = [&](const char* key) -> std::optional<double> {
      if (!doc.contains(key) || doc.at(key).is_null()) return std::nullopt;
      return doc.at(key).get<double>();
    };
    MetricsReport r;
    r.pehe = opt("pehe");
    r.eps_ate = opt("eps_ate");
    r.eps_att = opt("eps_att");
    r.policy_risk = opt("policy_risk");
    r.qini_auuc = opt("qini_auuc");
    r.pcoc = opt("pcoc");
    if (doc.contains("n_evaluated")) r.n_evaluated = doc.at("n_evaluated").get<std::size_t>();
    return r;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace mtdml
