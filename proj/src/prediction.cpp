#include "spikelab/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spikelab/transforms.hpp"

namespace spikelab {

SpikeSpec::SpikeSpec(std::vector<double> t) : thetas(std::move(t)) {
  if (thetas.empty()) throw std::invalid_argument("spike spec: no thetas");
  if (!std::is_sorted(thetas.begin(), thetas.end(), std::greater<double>()))
    throw std::invalid_argument("spike spec: thetas must be descending");
  for (double th : thetas) {
    if (th == 0.0) throw std::invalid_argument("spike spec: zero theta");
    if (th > 0.0) ++positive_count;
  }
}

namespace {

int multiplicity_of(const std::vector<double>& thetas, double theta) {
  return static_cast<int>(std::count(thetas.begin(), thetas.end(), theta));
}

std::optional<double> overlap_generic(const SpectralMeasure& mu, double theta,
                                      TransformKind which,
                                      OverlapVariant variant) {
  const TransformProfile& prof = edge_limits(mu);
  const bool cauchy = which == TransformKind::Cauchy;
  const double lim_hi = cauchy ? prof.g_at_b_plus : prof.t_at_b_plus.value();
  const double lim_lo = cauchy ? prof.g_at_a_minus : prof.t_at_a_minus.value();
  const double w = 1.0 / theta;
  if (w > lim_lo && w < lim_hi) {
    const BranchSide side =
        theta > 0.0 ? BranchSide::above_b() : BranchSide::below_a();
    try {
      const double rho = invert_transform(mu, w, which, side);
      if (cauchy) {
        const double gp = cauchy_transform_real(mu, rho, 1);
        return -1.0 / (theta * theta * gp);
      }
      const double tp = t_transform_real(mu, rho, 1);
      const double raw = -1.0 / (theta * theta * rho * tp + theta);
      if (variant == OverlapVariant::Raw) return raw;
      return (theta + 1.0) * raw / (theta * raw + 1.0);
    } catch (const std::out_of_range&) {
      // Numerically exactly critical: fall through to the edge case.
    }
  }
  // Subcritical: zero when the relevant edge derivative blows up, otherwise
  // left open.
  const double dlim =
      theta > 0.0
          ? (cauchy ? prof.g_prime_at_b_plus : prof.t_prime_at_b_plus.value())
          : (cauchy ? prof.g_prime_at_a_minus
                    : prof.t_prime_at_a_minus.value());
  if (std::isinf(dlim)) return 0.0;
  return std::nullopt;
}

SpikePrediction predict_generic(const SpectralMeasure& mu,
                                const SpikeSpec& spikes, TransformKind which,
                                PerturbationModel model,
                                OverlapVariant variant) {
  const auto [a, b] = mu.support_bounds();
  const TransformProfile& prof = edge_limits(mu);
  const bool cauchy = which == TransformKind::Cauchy;
  const double lim_hi = cauchy ? prof.g_at_b_plus : prof.t_at_b_plus.value();
  const double lim_lo = cauchy ? prof.g_at_a_minus : prof.t_at_a_minus.value();

  SpikePrediction out;
  out.model = model;
  for (double theta : spikes.thetas) {
    SpikeResult r{};
    r.theta = theta;
    r.multiplicity = multiplicity_of(spikes.thetas, theta);
    const double w = 1.0 / theta;
    // Strict inequality: an exactly-critical spike stays at the edge. An
    // inversion that fails as out_of_range means w sits at the limit to
    // within rounding, which is the same situation.
    const bool above = theta > 0.0;
    r.detectable = above ? (w < lim_hi) : (w > lim_lo);
    r.limit = above ? b : a;
    if (r.detectable) {
      try {
        r.limit = invert_transform(
            mu, w, which, above ? BranchSide::above_b() : BranchSide::below_a());
      } catch (const std::out_of_range&) {
        r.detectable = false;
      }
    }
    r.overlap_sq = overlap_generic(mu, theta, which, variant);
    out.spikes.push_back(r);
  }
  return out;
}

}  // namespace

SpikePrediction predict_additive(const SpectralMeasure& mu,
                                 const SpikeSpec& spikes) {
  return predict_generic(mu, spikes, TransformKind::Cauchy,
                         PerturbationModel::Additive, OverlapVariant::Raw);
}

std::optional<double> predict_additive_overlap(const SpectralMeasure& mu,
                                               double theta) {
  if (theta == 0.0) throw std::invalid_argument("theta must be nonzero");
  return overlap_generic(mu, theta, TransformKind::Cauchy,
                         OverlapVariant::Raw);
}

namespace {
void check_multiplicative(const SpectralMeasure& mu, const SpikeSpec& spikes) {
  if (!mu.nonnegative_support())
    throw std::domain_error("multiplicative model requires support in [0,inf)");
  for (double theta : spikes.thetas)
    if (1.0 + theta <= 0.0)
      throw std::domain_error("multiplicative spike needs 1 + theta > 0");
}
}  // namespace

SpikePrediction predict_multiplicative(const SpectralMeasure& mu,
                                       const SpikeSpec& spikes) {
  check_multiplicative(mu, spikes);
  return predict_generic(mu, spikes, TransformKind::T,
                         PerturbationModel::Multiplicative,
                         OverlapVariant::Raw);
}

std::optional<double> predict_multiplicative_overlap(const SpectralMeasure& mu,
                                                     double theta,
                                                     OverlapVariant variant) {
  if (theta == 0.0) throw std::invalid_argument("theta must be nonzero");
  if (1.0 + theta <= 0.0)
    throw std::domain_error("multiplicative spike needs 1 + theta > 0");
  if (!mu.nonnegative_support())
    throw std::domain_error("multiplicative model requires support in [0,inf)");
  return overlap_generic(mu, theta, TransformKind::T, variant);
}

SpikePrediction predict(const SpectralMeasure& mu, const SpikeSpec& spikes,
                        PerturbationModel model) {
  switch (model) {
    case PerturbationModel::Additive:
      return predict_additive(mu, spikes);
    case PerturbationModel::Multiplicative:
      return predict_multiplicative(mu, spikes);
    case PerturbationModel::Similarity: {
      check_multiplicative(mu, spikes);
      SpikePrediction p =
          predict_generic(mu, spikes, TransformKind::T,
                          PerturbationModel::Similarity,
                          OverlapVariant::Similarity);
      return p;
    }
  }
  throw std::logic_error("unreachable");
}

std::vector<std::pair<double, double>> predict_in_gap(
    const SpectralMeasure& mu, std::pair<double, double> gap,
    const SpikeSpec& spikes) {
  std::vector<std::pair<double, double>> out;
  for (double theta : spikes.thetas) {
    try {
      const double z =
          invert_transform(mu, 1.0 / theta, TransformKind::Cauchy,
                           BranchSide::gap(gap.first, gap.second));
      out.emplace_back(theta, z);
    } catch (const std::out_of_range&) {
      // 1/theta outside the gap image: no isolated eigenvalue here.
    }
  }
  return out;
}

}  // namespace spikelab
