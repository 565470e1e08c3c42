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

#include "mtdml/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mtdml/data.hpp"
#include "mtdml/error.hpp"
#include "mtdml/eval.hpp"
#include "mtdml/serialize.hpp"
#include "mtdml/training.hpp"

namespace mtdml {

namespace {

constexpr const char* kNullCell = "—";

unsigned threads_from_env() {
  const char* v = std::getenv("MTDML_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw ConfigError("MTDML_THREADS must be a positive integer");
  return static_cast<unsigned>(n);
}

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  json doc;
  try {
    doc = read_json_file(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(doc);
}

std::vector<double> parse_vector(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError(std::string(flag) + ": not a number: '" + cell + "'");
    }
  }
  return out;
}

json stage_json(const StageReport& s) {
  json j = {{"epochs", s.trace.size()}, {"total", s.trace.empty() ? 0.0 : s.trace.back()}};
  const LossComponents& c = s.final_components;
  if (s.stage != Stage::kCausal) {
    j["treatment"] = c.treatment;
    j["outcome"] = c.outcome;
    if (s.has_rlo) j["rlo"] = c.rlo;
  }
  if (s.stage != Stage::kPropensity) {
    j["final"] = c.final_outcome;
    j["k_reg"] = c.kreg;
  }
  return j;
}

json round_json(const RoundReport& r) {
  json j = json::object();
  for (const StageReport& s : r.stages) j[stage_name(s.stage)] = stage_json(s);
  return j;
}

std::string format_cell(const std::optional<double>& v) {
  if (!v) return kNullCell;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", *v);
  return buf;
}

// Display width of a UTF-8 string (code points).
std::size_t display_width(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

int cmd_simulate(Context& ctx, const std::string& config, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> n, const std::string& out_path) {
  RunConfig rc = load_run_config(config);
  if (seed) rc.dgp.seed = *seed;
  if (n) rc.dgp.n = *n;
  rc.dgp.validate();
  const Dataset d = generate_synthetic(rc.dgp, threads_from_env());
  save_csv(d, out_path);
  const OutcomeSummary s = summarize_outcome(d.y);
  const json summary = {{"n", d.size()},
                        {"D", d.num_covariates()},
                        {"K_t", d.num_treatments()},
                        {"zero_fraction", s.zero_fraction},
                        {"y_mean", s.mean},
                        {"y_skewness", s.skewness}};
  ctx.out << summary.dump() << "\n";
  ctx.err << "wrote " << d.size() << " rows to " << out_path << "\n";
  return kExitOk;
}

struct TrainFlags {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> learning_rate;
  std::optional<std::string> mode;
  bool no_ica = false;
  bool no_tweedie = false;
};

int cmd_train(Context& ctx, const TrainFlags& f) {
  RunConfig rc = load_run_config(f.config);
  TrainConfig& cfg = rc.train;
  if (f.seed) cfg.seed = *f.seed;
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.batch_size) cfg.batch_size = *f.batch_size;
  if (f.learning_rate) cfg.learning_rate = *f.learning_rate;
  if (f.mode) cfg = train_from_json(json{{"mode", *f.mode}}, cfg);
  if (f.no_ica) cfg.use_ica_disentangle = false;
  if (f.no_tweedie) cfg.use_tweedie = false;
  cfg.threads = threads_from_env();
  cfg.validate();

  const Dataset d = load_csv(f.data);
  const CrossFitEnsemble e = crossfit_train(d, cfg);
  save_ensemble(e, f.out);
  const json summary = {{"round_a", round_json(e.round_a)}, {"round_b", round_json(e.round_b)}};
  ctx.out << summary.dump() << "\n";
  ctx.err << "wrote ensemble to " << f.out << "\n";
  return kExitOk;
}

struct EvalFlags {
  std::string config;
  std::string model;
  std::string data;
  std::string out;
  std::string curve;
  std::optional<std::size_t> dim;
  std::optional<double> threshold;
  std::optional<double> contrast;
};

int cmd_evaluate(Context& ctx, const EvalFlags& f) {
  RunConfig rc = load_run_config(f.config);
  EvalSettings& s = rc.eval;
  if (f.dim) s.dim = *f.dim;
  if (f.threshold) s.threshold = *f.threshold;
  if (f.contrast) s.contrast = *f.contrast;

  const CrossFitEnsemble e = load_ensemble(f.model);
  const Dataset d = load_csv(f.data);
  if (d.num_covariates() != e.scaler.mean.size() ||
      d.num_treatments() != e.model_a.spec().treatment_dim) {
    throw ConfigError("evaluate: data dimensions do not match the model");
  }
  if (s.dim >= d.num_treatments()) throw ConfigError("evaluate: --dim out of range");
  const Evaluation ev = evaluate(e, d, s);
  const std::string text = metrics_to_json(ev.report).dump(2) + "\n";
  if (!f.out.empty()) write_text_file(f.out, text);
  if (!f.curve.empty()) {
    std::string csv = "fraction,qini\n";
    for (const CurvePoint& p : ev.curve) {
      csv += format_double(p.fraction) + "," + format_double(p.qini) + "\n";
    }
    write_text_file(f.curve, csv);
  }
  ctx.out << text;
  return kExitOk;
}

int cmd_predict(Context& ctx, const std::string& model, const std::string& data,
                const std::string& from_text, const std::string& to_text,
                const std::string& out_path) {
  const std::vector<double> t_from = parse_vector(from_text, "--t-from");
  const std::vector<double> t_to = parse_vector(to_text, "--t-to");
  const CrossFitEnsemble e = load_ensemble(model);
  const std::size_t k = e.model_a.spec().treatment_dim;
  if (t_from.size() != k || t_to.size() != k) {
    throw ConfigError("predict: --t-from and --t-to need " + std::to_string(k) + " values");
  }
  const Dataset d = load_csv(data);
  if (d.num_covariates() != e.scaler.mean.size() || d.num_treatments() != k) {
    throw ConfigError("predict: data dimensions do not match the model");
  }
  const std::vector<double> delta = ensemble_uplift(e, d.x, t_from, t_to);
  const EnsemblePrediction pred = ensemble_predict(e, d.x, d.t);
  std::string csv = "row,delta_y";
  for (std::size_t j = 0; j < k; ++j) csv += ",kappa_" + std::to_string(j);
  csv += "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(delta[i]);
    for (std::size_t j = 0; j < k; ++j) csv += "," + format_double(pred.kappa(i, j));
    csv += "\n";
  }
  if (out_path.empty()) {
    ctx.out << csv;
  } else {
    write_text_file(out_path, csv);
    ctx.err << "wrote " << d.size() << " predictions to " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_report(Context& ctx, const std::vector<std::string>& inputs,
               const std::string& out_path) {
  static const char* kColumns[] = {"pehe", "eps_ate", "eps_att", "policy_risk", "qini_auuc",
                                   "pcoc"};
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"model"});
  for (const char* c : kColumns) rows.back().push_back(c);
  for (const std::string& path : inputs) {
    const MetricsReport r = metrics_from_json(read_json_file(path));
    rows.push_back({std::filesystem::path(path).stem().string(), format_cell(r.pehe),
                    format_cell(r.eps_ate), format_cell(r.eps_att), format_cell(r.policy_risk),
                    format_cell(r.qini_auuc), format_cell(r.pcoc)});
  }
  if (!out_path.empty()) {
    std::string csv;
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) csv += (c ? "," : "") + row[c];
      csv += "\n";
    }
    write_text_file(out_path, csv);
  }
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      ctx.out << row[c];
      if (c + 1 < row.size()) ctx.out << std::string(width[c] - display_width(row[c]) + 2, ' ');
    }
    ctx.out << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Debiased multi-treatment uplift estimation with monotone response", "mtdml"};
  app.require_subcommand(1);

  std::string config, out_path, data, model;
  std::optional<std::uint64_t> seed;

  auto* sim = app.add_subcommand("simulate", "Draw a synthetic confounded dataset");
  std::optional<std::size_t> sim_n;
  sim->add_option("--config", config, "JSON config (bare DgpConfig or run config)");
  sim->add_option("--seed", seed, "Override the generator seed");
  sim->add_option("--n", sim_n, "Override the sample count");
  sim->add_option("--out", out_path, "Output CSV path")->required();

  auto* train = app.add_subcommand("train", "Fit a cross-fitted ensemble");
  TrainFlags tf;
  train->add_option("--config", tf.config, "JSON run config");
  train->add_option("--data", tf.data, "Training CSV")->required();
  train->add_option("--out", tf.out, "Output ensemble JSON")->required();
  train->add_option("--seed", tf.seed, "Override the training seed");
  train->add_option("--epochs", tf.epochs, "Override epochs");
  train->add_option("--batch-size", tf.batch_size, "Override batch size");
  train->add_option("--lr", tf.learning_rate, "Override learning rate");
  train->add_option("--mode", tf.mode, "crossfit or joint");
  train->add_flag("--no-ica", tf.no_ica, "Disable I/C/A disentanglement");
  train->add_flag("--no-tweedie", tf.no_tweedie, "Use squared error instead of Tweedie");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Compute the metric report");
  EvalFlags ef;
  evaluate_cmd->add_option("--config", ef.config, "JSON run config (eval section)");
  evaluate_cmd->add_option("--model", ef.model, "Ensemble JSON")->required();
  evaluate_cmd->add_option("--data", ef.data, "Evaluation CSV")->required();
  evaluate_cmd->add_option("--out", ef.out, "Metrics JSON output path");
  evaluate_cmd->add_option("--curve", ef.curve, "Uplift curve CSV output path");
  evaluate_cmd->add_option("--dim", ef.dim, "Treatment dimension to binarize");
  evaluate_cmd->add_option("--threshold", ef.threshold, "Binarization threshold");
  evaluate_cmd->add_option("--contrast", ef.contrast, "Uplift contrast along --dim");
  evaluate_cmd->add_option("--seed", seed, "Accepted for uniformity; evaluation is deterministic");

  auto* predict = app.add_subcommand("predict", "Per-sample counterfactual uplift");
  std::string t_from, t_to;
  predict->add_option("--model", model, "Ensemble JSON")->required();
  predict->add_option("--data", data, "Input CSV")->required();
  predict->add_option("--t-from", t_from, "Comma-separated baseline treatment")->required();
  predict->add_option("--t-to", t_to, "Comma-separated target treatment")->required();
  predict->add_option("--out", out_path, "Output CSV path (stdout if omitted)");

  auto* report = app.add_subcommand("report", "Tabulate metric reports");
  std::vector<std::string> inputs;
  report->add_option("inputs", inputs, "Metrics JSON files")->required();
  report->add_option("--out", out_path, "Output CSV path");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  Context ctx{out, err};
  try {
    if (*sim) return cmd_simulate(ctx, config, seed, sim_n, out_path);
    if (*train) return cmd_train(ctx, tf);
    if (*evaluate_cmd) return cmd_evaluate(ctx, ef);
    if (*predict) return cmd_predict(ctx, model, data, t_from, t_to, out_path);
    if (*report) return cmd_report(ctx, inputs, out_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapabilityError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ParseError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DegenerateError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace mtdml
