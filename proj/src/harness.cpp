#include "spikelab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace spikelab {

using ordered_json = nlohmann::ordered_json;

namespace {

void check_keys(const nlohmann::json& j,
                const std::vector<std::string>& allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::invalid_argument("config: unknown key \"" + it.key() +
                                  "\" in " + where);
}

EnsembleSpec ensemble_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("config: ensemble must be an object");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "goe" || kind == "gue") {
    check_keys(j, {"kind", "n", "sigma"}, "ensemble");
    const double sigma = j.value("sigma", 1.0);
    return kind == "goe" ? EnsembleSpec::goe(j.at("n").get<int>(), sigma)
                         : EnsembleSpec::gue(j.at("n").get<int>(), sigma);
  }
  if (kind == "wishart_real" || kind == "wishart_complex") {
    check_keys(j, {"kind", "n", "m"}, "ensemble");
    const int n = j.at("n").get<int>(), m = j.at("m").get<int>();
    return kind == "wishart_real" ? EnsembleSpec::wishart_real(n, m)
                                  : EnsembleSpec::wishart_complex(n, m);
  }
  if (kind == "fixed_diagonal") {
    check_keys(j, {"kind", "diagonal"}, "ensemble");
    return EnsembleSpec::fixed_diagonal(
        j.at("diagonal").get<std::vector<double>>());
  }
  throw std::invalid_argument("config: unknown ensemble kind \"" + kind +
                              "\"");
}

std::string ensemble_kind_name(EnsembleSpec::Kind k) {
  switch (k) {
    case EnsembleSpec::Kind::GOE:
      return "goe";
    case EnsembleSpec::Kind::GUE:
      return "gue";
    case EnsembleSpec::Kind::WishartReal:
      return "wishart_real";
    case EnsembleSpec::Kind::WishartComplex:
      return "wishart_complex";
    case EnsembleSpec::Kind::FixedDiagonal:
      return "fixed_diagonal";
  }
  return "?";
}

PerturbationModel model_from_name(const std::string& s) {
  if (s == "additive") return PerturbationModel::Additive;
  if (s == "multiplicative") return PerturbationModel::Multiplicative;
  if (s == "similarity") return PerturbationModel::Similarity;
  throw std::invalid_argument("config: unknown model \"" + s + "\"");
}

std::string model_name(PerturbationModel m) {
  switch (m) {
    case PerturbationModel::Additive:
      return "additive";
    case PerturbationModel::Multiplicative:
      return "multiplicative";
    case PerturbationModel::Similarity:
      return "similarity";
  }
  return "?";
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

int thread_budget(int trials) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("SPIKE_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) cap = std::min(cap, v);
  }
  return std::min(cap, trials);
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

TrialRecord run_one_trial(const ExperimentConfig& cfg, const SpikeSpec& spikes,
                          std::uint64_t trial) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRng rng(cfg.seed, trial);
  const int r = static_cast<int>(spikes.thetas.size());
  TrialRecord rec;
  if (cfg.ensemble.complex_field()) {
    const auto x = sample_ensemble<std::complex<double>>(cfg.ensemble, rng);
    const auto d = deform<std::complex<double>>(x, spikes, cfg.model, rng);
    rec = spectrum_and_overlaps<std::complex<double>>(d, spikes, cfg.model, r,
                                                      r);
  } else {
    const auto x = sample_ensemble<double>(cfg.ensemble, rng);
    const auto d = deform<double>(x, spikes, cfg.model, rng);
    rec = spectrum_and_overlaps<double>(d, spikes, cfg.model, r, r);
  }
  rec.seed = cfg.seed;
  rec.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != 1)
    throw std::invalid_argument("config: unsupported schema_version");
  ensemble.validate();
  (void)spikes();  // descending/nonzero checks
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (!(tolerances.eigenvalue_abs > 0.0) || !(tolerances.overlap_abs > 0.0))
    throw std::invalid_argument("config: tolerances must be positive");
}

ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  check_keys(j,
             {"schema_version", "ensemble", "spikes", "model", "trials",
              "seed", "tolerances", "outputs"},
             "top level");
  ExperimentConfig cfg;
  cfg.schema_version = j.at("schema_version").get<int>();
  cfg.ensemble = ensemble_from_json(j.at("ensemble"));
  cfg.thetas = j.at("spikes").get<std::vector<double>>();
  cfg.model = model_from_name(j.at("model").get<std::string>());
  cfg.trials = j.at("trials").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, {"eigenvalue_abs", "overlap_abs"}, "tolerances");
    cfg.tolerances.eigenvalue_abs = t.value("eigenvalue_abs", 0.05);
    cfg.tolerances.overlap_abs = t.value("overlap_abs", 0.05);
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    check_keys(o, {"report_json", "trials_csv"}, "outputs");
    cfg.outputs.report_json = o.value("report_json", "");
    cfg.outputs.trials_csv = o.value("trials_csv", "");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["schema_version"] = cfg.schema_version;
  ordered_json e;
  e["kind"] = ensemble_kind_name(cfg.ensemble.kind);
  e["n"] = cfg.ensemble.n;
  switch (cfg.ensemble.kind) {
    case EnsembleSpec::Kind::GOE:
    case EnsembleSpec::Kind::GUE:
      e["sigma"] = cfg.ensemble.sigma;
      break;
    case EnsembleSpec::Kind::WishartReal:
    case EnsembleSpec::Kind::WishartComplex:
      e["m"] = cfg.ensemble.m;
      break;
    case EnsembleSpec::Kind::FixedDiagonal:
      e.erase("n");
      e["diagonal"] = cfg.ensemble.diagonal;
      break;
  }
  j["ensemble"] = e;
  j["spikes"] = cfg.thetas;
  j["model"] = model_name(cfg.model);
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["tolerances"] = {{"eigenvalue_abs", cfg.tolerances.eigenvalue_abs},
                     {"overlap_abs", cfg.tolerances.overlap_abs}};
  return j.dump(2);
}

SpectralMeasure limiting_measure(const EnsembleSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case EnsembleSpec::Kind::GOE:
    case EnsembleSpec::Kind::GUE:
      return SpectralMeasure::semicircle(spec.sigma);
    case EnsembleSpec::Kind::WishartReal:
    case EnsembleSpec::Kind::WishartComplex:
      return SpectralMeasure::marchenko_pastur(spec.wishart_ratio());
    case EnsembleSpec::Kind::FixedDiagonal: {
      std::map<double, int> counts;
      for (double v : spec.diagonal) ++counts[v];
      std::vector<double> atoms, weights;
      for (const auto& [v, c] : counts) {
        atoms.push_back(v);
        weights.push_back(static_cast<double>(c) / spec.n);
      }
      return SpectralMeasure::atomic(std::move(atoms), std::move(weights));
    }
  }
  throw std::logic_error("unreachable");
}

VerificationReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const SpikeSpec spikes = cfg.spikes();
  const int r = static_cast<int>(spikes.thetas.size());

  VerificationReport report;
  report.config = cfg;
  report.config_hash = fnv1a_hex(config_to_json(cfg));
  report.trials.resize(cfg.trials);

  const int nthreads = thread_budget(cfg.trials);
  if (nthreads <= 1) {
    for (int t = 0; t < cfg.trials; ++t)
      report.trials[t] = run_one_trial(cfg, spikes, t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < cfg.trials;
             t = next.fetch_add(1))
          report.trials[t] = run_one_trial(cfg, spikes, t);
      });
    for (auto& th : pool) th.join();
  }

  const SpectralMeasure mu = limiting_measure(cfg.ensemble);
  const SpikePrediction pred = predict(mu, spikes, cfg.model);
  const auto [edge_a, edge_b] = mu.support_bounds();
  std::optional<SpikePrediction> sim_pred;
  if (cfg.model == PerturbationModel::Multiplicative)
    sim_pred = predict(mu, spikes, PerturbationModel::Similarity);

  report.pass = true;
  for (int i = 0; i < r; ++i) {
    SpikeReportRow row;
    row.theta = spikes.thetas[i];
    row.detectable = pred.spikes[i].detectable;
    row.predicted_limit = pred.spikes[i].limit;
    row.predicted_overlap = pred.spikes[i].overlap_sq;

    std::vector<double> eigs, ovls, sims;
    for (const TrialRecord& rec : report.trials) {
      eigs.push_back(row.theta > 0.0
                         ? rec.top_eigenvalues[i]
                         : rec.bottom_eigenvalues[r - 1 - i]);
      ovls.push_back(rec.overlaps_sq[i]);
      if (!rec.similarity_overlaps_sq.empty())
        sims.push_back(rec.similarity_overlaps_sq[i]);
    }
    std::tie(row.eigenvalue_mean, row.eigenvalue_stderr) = mean_stderr(eigs);
    std::tie(row.overlap_mean, row.overlap_stderr) = mean_stderr(ovls);

    // Subcritical spikes sit at the bulk edge, which converges on the slower
    // n^{-2/3} scale; allow double the tolerance there.
    const double eig_tol = row.detectable ? cfg.tolerances.eigenvalue_abs
                                          : 2.0 * cfg.tolerances.eigenvalue_abs;
    row.eigenvalue_pass =
        std::abs(row.eigenvalue_mean - row.predicted_limit) <= eig_tol;
    if (!row.eigenvalue_pass) report.pass = false;
    if (row.predicted_overlap.has_value()) {
      row.overlap_pass = std::abs(row.overlap_mean - *row.predicted_overlap) <=
                         cfg.tolerances.overlap_abs;
      if (!*row.overlap_pass) report.pass = false;
    }
    if (!sims.empty() && sim_pred) {
      row.predicted_similarity_overlap = sim_pred->spikes[i].overlap_sq;
      row.similarity_overlap_mean = mean_stderr(sims).first;
      if (row.predicted_similarity_overlap.has_value()) {
        row.similarity_overlap_pass =
            std::abs(*row.similarity_overlap_mean -
                     *row.predicted_similarity_overlap) <=
            cfg.tolerances.overlap_abs;
        if (!*row.similarity_overlap_pass) report.pass = false;
      }
    }
    report.rows.push_back(row);
  }
  (void)edge_a;
  (void)edge_b;
  report.wallclock =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return report;
}

std::string report_to_json(const VerificationReport& report) {
  ordered_json j;
  j["config"] = ordered_json::parse(config_to_json(report.config));
  j["config_hash"] = report.config_hash;
  j["library_version"] = "1.0.0";
  ordered_json rows = ordered_json::array();
  for (const SpikeReportRow& row : report.rows) {
    ordered_json r;
    r["theta"] = row.theta;
    r["detectable"] = row.detectable;
    r["predicted_limit"] = row.predicted_limit;
    r["eigenvalue_mean"] = row.eigenvalue_mean;
    r["eigenvalue_stderr"] = row.eigenvalue_stderr;
    r["eigenvalue_pass"] = row.eigenvalue_pass;
    if (row.predicted_overlap.has_value())
      r["predicted_overlap"] = *row.predicted_overlap;
    else
      r["predicted_overlap"] = nullptr;
    r["overlap_mean"] = row.overlap_mean;
    r["overlap_stderr"] = row.overlap_stderr;
    if (row.overlap_pass.has_value())
      r["overlap_pass"] = *row.overlap_pass;
    else
      r["overlap_pass"] = "informational";
    if (row.similarity_overlap_mean.has_value()) {
      if (row.predicted_similarity_overlap.has_value())
        r["predicted_similarity_overlap"] = *row.predicted_similarity_overlap;
      r["similarity_overlap_mean"] = *row.similarity_overlap_mean;
      if (row.similarity_overlap_pass.has_value())
        r["similarity_overlap_pass"] = *row.similarity_overlap_pass;
    }
    rows.push_back(r);
  }
  j["spikes"] = rows;
  j["pass"] = report.pass;
  j["wallclock_seconds"] = report.wallclock;
  return j.dump(2) + "\n";
}

std::string trials_to_csv(const VerificationReport& report) {
  std::ostringstream out;
  const int r = static_cast<int>(report.config.thetas.size());
  out << "trial,seed";
  for (int i = 1; i <= r; ++i) out << ",lambda_" << i;
  for (int i = 1; i <= r; ++i) out << ",mu_" << i;
  for (int i = 1; i <= r; ++i) out << ",overlap_" << i;
  const bool sims = !report.trials.empty() &&
                    !report.trials.front().similarity_overlaps_sq.empty();
  if (sims)
    for (int i = 1; i <= r; ++i) out << ",similarity_overlap_" << i;
  out << "\n";
  for (std::size_t t = 0; t < report.trials.size(); ++t) {
    const TrialRecord& rec = report.trials[t];
    out << t << "," << rec.seed;
    for (double v : rec.top_eigenvalues) out << "," << fmt17(v);
    for (double v : rec.bottom_eigenvalues) out << "," << fmt17(v);
    for (double v : rec.overlaps_sq) out << "," << fmt17(v);
    if (sims)
      for (double v : rec.similarity_overlaps_sq) out << "," << fmt17(v);
    out << "\n";
  }
  return out.str();
}

void write_outputs(const VerificationReport& report) {
  const auto write_file = [](const std::string& path,
                             const std::string& content) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
  };
  write_file(report.config.outputs.report_json, report_to_json(report));
  write_file(report.config.outputs.trials_csv, trials_to_csv(report));
}

SweepReport sweep_experiment(const ExperimentConfig& base, double from,
                             double to, int steps) {
  if (steps < 0) throw std::invalid_argument("sweep: steps must be >= 0");
  SweepReport out;
  out.is_sweep = true;
  out.param = "theta";
  for (int k = 0; k < steps; ++k) {
    const double theta =
        steps == 1 ? from : from + (to - from) * k / (steps - 1);
    if (theta == 0.0) continue;
    ExperimentConfig cfg = base;
    cfg.thetas = {theta};
    cfg.outputs = {};
    const VerificationReport rep = run_experiment(cfg);
    SweepRow row;
    row.theta = theta;
    row.predicted_limit = rep.rows[0].predicted_limit;
    row.empirical_mean = rep.rows[0].eigenvalue_mean;
    row.predicted_overlap = rep.rows[0].predicted_overlap;
    row.overlap_mean = rep.rows[0].overlap_mean;
    out.rows.push_back(row);
  }
  return out;
}

std::string emit_plot_data(const SweepReport& report, PlotStyle style) {
  if (!report.is_sweep)
    throw std::domain_error("emit_plot_data: not a sweep report");
  std::ostringstream out;
  const bool eig = style == PlotStyle::TransitionCurve;
  out << (eig ? "theta,predicted_eigenvalue,empirical_eigenvalue\n"
              : "theta,predicted_overlap,empirical_overlap\n");
  for (const SweepRow& row : report.rows) {
    out << fmt17(row.theta) << ",";
    if (eig)
      out << fmt17(row.predicted_limit) << "," << fmt17(row.empirical_mean);
    else {
      if (row.predicted_overlap.has_value())
        out << fmt17(*row.predicted_overlap);
      out << "," << fmt17(row.overlap_mean);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace spikelab
