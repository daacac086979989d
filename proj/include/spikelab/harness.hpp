#ifndef SPIKELAB_HARNESS_HPP
#define SPIKELAB_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spikelab/measure.hpp"
#include "spikelab/prediction.hpp"
#include "spikelab/rmt.hpp"

namespace spikelab {

struct Tolerances {
  double eigenvalue_abs = 0.05;
  double overlap_abs = 0.05;
};

struct OutputPaths {
  std::string report_json;  // empty = don't write
  std::string trials_csv;
};

struct ExperimentConfig {
  int schema_version = 1;
  EnsembleSpec ensemble;
  std::vector<double> thetas;  // descending, nonzero
  PerturbationModel model = PerturbationModel::Additive;
  int trials = 1;
  std::uint64_t seed = 0;
  Tolerances tolerances;
  OutputPaths outputs;

  SpikeSpec spikes() const { return SpikeSpec(thetas); }
  void validate() const;
};

/// Strict JSON parsing: versioned schema, unknown keys rejected.
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

/// The limiting spectral measure of the undeformed ensemble: Semicircle for
/// GOE/GUE, Marchenko-Pastur(c = n/m) for Wishart, and the empirical atomic
/// measure of the entries for FixedDiagonal.
SpectralMeasure limiting_measure(const EnsembleSpec& spec);

struct SpikeReportRow {
  double theta = 0.0;
  bool detectable = false;
  double predicted_limit = 0.0;
  double eigenvalue_mean = 0.0;
  double eigenvalue_stderr = 0.0;
  bool eigenvalue_pass = false;
  std::optional<double> predicted_overlap;  // empty = unknown (informational)
  double overlap_mean = 0.0;
  double overlap_stderr = 0.0;
  std::optional<bool> overlap_pass;  // empty when prediction is unknown
  // Multiplicative model only: the similarity-matrix eigenvector overlap.
  std::optional<double> predicted_similarity_overlap;
  std::optional<double> similarity_overlap_mean;
  std::optional<bool> similarity_overlap_pass;
};

struct VerificationReport {
  ExperimentConfig config;
  std::string config_hash;
  std::vector<SpikeReportRow> rows;
  std::vector<TrialRecord> trials;
  bool pass = false;
  double wallclock = 0.0;
};

/// Runs config.trials independent trials (parallel up to SPIKE_THREADS,
/// aggregated in trial order), compares aggregates against the asymptotic
/// predictions, and fills the report. Use write_outputs to persist it.
VerificationReport run_experiment(const ExperimentConfig& cfg);

std::string report_to_json(const VerificationReport& report);
std::string trials_to_csv(const VerificationReport& report);
void write_outputs(const VerificationReport& report);

struct SweepRow {
  double theta = 0.0;
  double predicted_limit = 0.0;
  double empirical_mean = 0.0;
  std::optional<double> predicted_overlap;
  double overlap_mean = 0.0;
};

struct SweepReport {
  bool is_sweep = false;
  std::string param;
  std::vector<SweepRow> rows;
};

/// Re-runs the experiment at `steps` evenly spaced values of theta in
/// [from, to], replacing the configured spikes with the single swept one.
SweepReport sweep_experiment(const ExperimentConfig& base, double from,
                             double to, int steps);

enum class PlotStyle { TransitionCurve, OverlapCurve };

/// Two labeled data columns (predicted, empirical) against theta; throws
/// std::domain_error for a non-sweep report.
std::string emit_plot_data(const SweepReport& report, PlotStyle style);

}  // namespace spikelab

#endif
