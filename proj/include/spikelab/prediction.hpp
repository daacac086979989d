#ifndef SPIKELAB_PREDICTION_HPP
#define SPIKELAB_PREDICTION_HPP

#include <optional>
#include <vector>

#include "spikelab/measure.hpp"

namespace spikelab {

enum class PerturbationModel { Additive, Multiplicative, Similarity };
enum class OverlapVariant { Raw, Similarity };

/// Nonzero perturbation eigenvalues theta_1 >= ... >= theta_r.
struct SpikeSpec {
  std::vector<double> thetas;  // descending, nonzero
  int positive_count = 0;      // s = #{i : theta_i > 0}

  explicit SpikeSpec(std::vector<double> t);
};

/// Asymptotic prediction for one spike. overlap_sq is empty when the paper
/// leaves the value open (subcritical with finite edge derivative).
struct SpikeResult {
  double theta;
  double limit;
  bool detectable;
  std::optional<double> overlap_sq;
  int multiplicity;  // count of spikes sharing this theta
};

struct SpikePrediction {
  PerturbationModel model;
  std::vector<SpikeResult> spikes;  // same order as the input thetas
};

SpikePrediction predict_additive(const SpectralMeasure& mu,
                                 const SpikeSpec& spikes);

/// Limiting squared overlap for a single additive spike; empty = unknown.
std::optional<double> predict_additive_overlap(const SpectralMeasure& mu,
                                               double theta);

SpikePrediction predict_multiplicative(const SpectralMeasure& mu,
                                       const SpikeSpec& spikes);

std::optional<double> predict_multiplicative_overlap(
    const SpectralMeasure& mu, double theta,
    OverlapVariant variant = OverlapVariant::Raw);

/// Model-dispatching convenience used by the harness; Similarity shares the
/// multiplicative eigenvalue limits with similarity-variant overlaps.
SpikePrediction predict(const SpectralMeasure& mu, const SpikeSpec& spikes,
                        PerturbationModel model);

/// Isolated eigenvalues predicted inside a hole (c, d) of the support:
/// pairs (theta_i, limit) for those theta_i with 1/theta_i in the gap image.
std::vector<std::pair<double, double>> predict_in_gap(
    const SpectralMeasure& mu, std::pair<double, double> gap,
    const SpikeSpec& spikes);

}  // namespace spikelab

#endif
