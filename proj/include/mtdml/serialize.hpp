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

#ifndef MTDML_SERIALIZE_HPP_
#define MTDML_SERIALIZE_HPP_

#include <string>

#include "json.hpp"
#include "mtdml/baselines.hpp"
#include "mtdml/data.hpp"
#include "mtdml/eval.hpp"
#include "mtdml/model.hpp"
#include "mtdml/training.hpp"

namespace mtdml {

using json = nlohmann::json;

inline constexpr const char* kModelVersion = "mtdml-model-v1";
inline constexpr const char* kEnsembleVersion = "mtdml-ensemble-v1";

// Model documents. Malformed documents throw ParseError.
json model_to_json(const MtdmlModel& m, const Scaler* scaler = nullptr);
MtdmlModel model_from_json(const json& doc, Scaler* scaler = nullptr);

json ensemble_to_json(const CrossFitEnsemble& e);
CrossFitEnsemble ensemble_from_json(const json& doc);
void save_ensemble(const CrossFitEnsemble& e, const std::string& path);
CrossFitEnsemble load_ensemble(const std::string& path);

// Configuration documents overlay `base`; unknown keys and ill-typed values
// throw ConfigError.
DgpConfig dgp_from_json(const json& doc, DgpConfig base = {});
json dgp_to_json(const DgpConfig& cfg);
TrainConfig train_from_json(const json& doc, TrainConfig base = {});
json train_to_json(const TrainConfig& cfg);
EvalSettings eval_from_json(const json& doc, EvalSettings base = {});

// Everything a CLI run can be configured with. The document has optional
// sections "dgp", "train" and "eval"; a document with none of them is read
// as a bare DgpConfig.
struct RunConfig {
  DgpConfig dgp;
  TrainConfig train;
  EvalSettings eval;
};
RunConfig run_config_from_json(const json& doc);

// Absent metrics serialize as null.
json metrics_to_json(const MetricsReport& r);
MetricsReport metrics_from_json(const json& doc);

// Reads a JSON file. Throws IoError if unreadable and ParseError if invalid.
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mtdml

#endif  // MTDML_SERIALIZE_HPP_
