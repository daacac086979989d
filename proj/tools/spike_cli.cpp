#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "spikelab/harness.hpp"
#include "spikelab/master_equation.hpp"
#include "spikelab/measure.hpp"
#include "spikelab/prediction.hpp"
#include "spikelab/transforms.hpp"

using nlohmann::ordered_json;
using namespace spikelab;

namespace {

struct MeasureOpts {
  std::string file;
  std::optional<double> semicircle_sigma;
  std::optional<double> mp_ratio;

  void attach(CLI::App* cmd) {
    auto* f = cmd->add_option("--measure", file, "measure description (JSON)");
    auto* s = cmd->add_option("--semicircle", semicircle_sigma,
                              "semicircle measure with scale sigma");
    auto* m = cmd->add_option("--mp", mp_ratio,
                              "Marchenko-Pastur measure with ratio c");
    f->excludes(s)->excludes(m);
    s->excludes(m);
  }

  SpectralMeasure build() const {
    if (semicircle_sigma) return SpectralMeasure::semicircle(*semicircle_sigma);
    if (mp_ratio) return SpectralMeasure::marchenko_pastur(*mp_ratio);
    if (!file.empty()) return measure_from_json_file(file);
    throw CLI::ValidationError(
        "measure", "one of --measure/--semicircle/--mp is required");
  }
};

PerturbationModel parse_model(const std::string& s) {
  if (s == "additive") return PerturbationModel::Additive;
  if (s == "multiplicative") return PerturbationModel::Multiplicative;
  if (s == "similarity") return PerturbationModel::Similarity;
  throw CLI::ValidationError("model", "expected additive|multiplicative|similarity");
}

int cmd_predict(const MeasureOpts& mopts, const std::vector<double>& thetas,
                const std::string& model_name) {
  const SpectralMeasure mu = mopts.build();
  const SpikePrediction pred =
      predict(mu, SpikeSpec(thetas), parse_model(model_name));
  ordered_json spikes = ordered_json::array();
  for (const SpikeResult& s : pred.spikes) {
    ordered_json j;
    j["theta"] = s.theta;
    j["detectable"] = s.detectable;
    j["limit"] = s.limit;
    if (s.overlap_sq.has_value())
      j["overlap_sq"] = *s.overlap_sq;
    else
      j["overlap_sq"] = nullptr;
    j["multiplicity"] = s.multiplicity;
    spikes.push_back(j);
  }
  std::cout << spikes.dump(2) << "\n";
  return 0;
}

int cmd_transform(const MeasureOpts& mopts, const std::string& kind_name,
                  std::optional<double> z, std::optional<double> invert_w,
                  int order) {
  const SpectralMeasure mu = mopts.build();
  const TransformKind kind =
      (kind_name == "cauchy" || kind_name == "G") ? TransformKind::Cauchy
                                                  : TransformKind::T;
  // Plain evaluation prints just the value; richer queries get JSON.
  if (z && !invert_w) {
    const double v = kind == TransformKind::Cauchy
                         ? cauchy_transform_real(mu, *z, order)
                         : t_transform_real(mu, *z, order);
    std::printf("%.17g\n", v);
    return 0;
  }
  ordered_json out;
  out["kind"] = kind_name;
  if (z) {
    const double v = kind == TransformKind::Cauchy
                         ? cauchy_transform_real(mu, *z, order)
                         : t_transform_real(mu, *z, order);
    out["z"] = *z;
    out["order"] = order;
    out["value"] = v;
  }
  if (invert_w) {
    const double x =
        invert_transform(mu, *invert_w, kind,
                         *invert_w > 0.0 ? BranchSide::above_b()
                                         : BranchSide::below_a());
    out["w"] = *invert_w;
    out["inverse"] = x;
  }
  const TransformProfile& prof = edge_limits(mu);
  out["edge_limits"] = {{"g_at_b_plus", prof.g_at_b_plus},
                        {"g_at_a_minus", prof.g_at_a_minus}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path) {
  const ExperimentConfig cfg = config_from_file(config_path);
  const VerificationReport rep = run_experiment(cfg);
  write_outputs(rep);
  std::cout << report_to_json(rep);
  return 0;
}

int cmd_verify(const std::string& config_path) {
  const ExperimentConfig cfg = config_from_file(config_path);
  const VerificationReport rep = run_experiment(cfg);
  write_outputs(rep);
  std::cout << report_to_json(rep);
  return rep.pass ? 0 : 1;
}

int cmd_sweep(const std::string& config_path, const std::string& param,
              double from, double to, int steps, const std::string& style_name,
              const std::string& out_path) {
  if (param != "theta")
    throw CLI::ValidationError("param", "only theta sweeps are supported");
  const ExperimentConfig cfg = config_from_file(config_path);
  const SweepReport sweep = sweep_experiment(cfg, from, to, steps);
  const PlotStyle style = style_name == "overlap_curve"
                              ? PlotStyle::OverlapCurve
                              : PlotStyle::TransitionCurve;
  const std::string csv = emit_plot_data(sweep, style);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiked random matrix phase-transition laboratory"};
  app.require_subcommand(1);

  MeasureOpts predict_measure, transform_measure;
  std::vector<double> thetas;
  std::string model_name = "additive";
  auto* predict_cmd =
      app.add_subcommand("predict", "asymptotic outlier predictions");
  predict_measure.attach(predict_cmd);
  predict_cmd->add_option("--theta", thetas, "spike values, descending")
      ->required()
      ->delimiter(',');
  predict_cmd->add_option("--model", model_name,
                          "additive|multiplicative|similarity");

  std::string kind_name = "cauchy";
  std::optional<double> z, invert_w;
  int order = 0;
  auto* transform_cmd =
      app.add_subcommand("transform", "evaluate or invert G / T");
  transform_measure.attach(transform_cmd);
  auto* kind_opt = transform_cmd->add_option("--kind", kind_name, "cauchy|t")
                       ->check(CLI::IsMember({"cauchy", "t"}));
  transform_cmd->add_option("--which", kind_name, "G|T (alias for --kind)")
      ->check(CLI::IsMember({"G", "T"}))
      ->excludes(kind_opt);
  transform_cmd->add_option("--z", z, "evaluation point outside the support");
  transform_cmd->add_option("--order", order, "0 = value, 1 = derivative")
      ->check(CLI::Range(0, 1));
  transform_cmd->add_option("--invert", invert_w,
                            "solve transform(x) = w on the outer branch");

  std::string sim_config, verify_config, sweep_config;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run Monte Carlo trials from a config");
  simulate_cmd->add_option("--config", sim_config, "experiment config (JSON)")
      ->required();
  auto* verify_cmd = app.add_subcommand(
      "verify", "run trials and check them against predictions");
  verify_cmd->add_option("--config", verify_config, "experiment config (JSON)")
      ->required();

  std::string sweep_param = "theta", sweep_style = "transition_curve",
              sweep_out;
  double sweep_from = 0.0, sweep_to = 0.0;
  int sweep_steps = 0;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "sweep theta and emit plot data");
  sweep_cmd->add_option("--config", sweep_config, "experiment config (JSON)")
      ->required();
  sweep_cmd->add_option("--param", sweep_param, "swept parameter (theta)");
  sweep_cmd->add_option("--from", sweep_from, "first theta")->required();
  sweep_cmd->add_option("--to", sweep_to, "last theta")->required();
  sweep_cmd->add_option("--steps", sweep_steps, "number of grid points")
      ->required();
  sweep_cmd->add_option("--style", sweep_style,
                        "transition_curve|overlap_curve")
      ->check(CLI::IsMember({"transition_curve", "overlap_curve"}));
  sweep_cmd->add_option("--out", sweep_out, "output CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (predict_cmd->parsed())
      return cmd_predict(predict_measure, thetas, model_name);
    if (transform_cmd->parsed())
      return cmd_transform(transform_measure, kind_name, z, invert_w, order);
    if (simulate_cmd->parsed()) return cmd_simulate(sim_config);
    if (verify_cmd->parsed()) return cmd_verify(verify_config);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_config, sweep_param, sweep_from, sweep_to,
                       sweep_steps, sweep_style, sweep_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
