#ifndef SPIKELAB_TRANSFORMS_HPP
#define SPIKELAB_TRANSFORMS_HPP

#include <complex>
#include <optional>

#include "spikelab/measure.hpp"

namespace spikelab {

/// Edge limits of the Cauchy and T transforms, in extended reals
/// (+/-infinity encoded as IEEE infinities). The T entries are absent for
/// measures whose support is not contained in [0, inf).
struct TransformProfile {
  double g_at_a_minus;        // in [-inf, 0)
  double g_at_b_plus;         // in (0, +inf]
  double g_prime_at_a_minus;  // <= 0, possibly -inf
  double g_prime_at_b_plus;
  std::optional<double> t_at_a_minus;
  std::optional<double> t_at_b_plus;
  std::optional<double> t_prime_at_a_minus;
  std::optional<double> t_prime_at_b_plus;
};

struct EdgeClassification {
  bool threshold_finite;    // edge transform limit finite  <=>  alpha > 0
  bool derivative_infinite; // edge derivative infinite     <=>  alpha <= 1
};

enum class TransformKind { Cauchy, T };

/// Branch of the functional inverse: above the support, below it, or inside
/// a hole (c, d) of the support.
struct BranchSide {
  enum Kind { AboveB, BelowA, Gap } kind;
  double gap_lo = 0.0, gap_hi = 0.0;

  static BranchSide above_b() { return {AboveB}; }
  static BranchSide below_a() { return {BelowA}; }
  static BranchSide gap(double c, double d) { return {Gap, c, d}; }
};

/// G(z) = int dmu(t)/(z-t) for order 0; G'(z) for order 1. Closed forms for
/// the semicircle and Marchenko-Pastur families, quadrature otherwise.
std::complex<double> cauchy_transform(const SpectralMeasure& mu,
                                      std::complex<double> z, int order = 0);

/// T(z) = int t dmu(t)/(z-t); requires support in [0, inf) and mu != delta_0.
std::complex<double> t_transform(const SpectralMeasure& mu,
                                 std::complex<double> z, int order = 0);

/// Real-axis evaluation; z may lie in a hole of the support.
double cauchy_transform_real(const SpectralMeasure& mu, double z,
                             int order = 0);
double t_transform_real(const SpectralMeasure& mu, double z, int order = 0);

/// Edge limits; computed once per measure and cached.
const TransformProfile& edge_limits(const SpectralMeasure& mu);

/// Unique z on the chosen branch with transform(z) = w, by bracketed
/// bisection. Throws std::out_of_range when w is outside the branch image.
double invert_transform(const SpectralMeasure& mu, double w,
                        TransformKind which, BranchSide side);

/// R(w) = G^{-1}(w) - 1/w and S(w) = (1+w)/(w T^{-1}(w)).
double r_transform(const SpectralMeasure& mu, double w);
double s_transform(const SpectralMeasure& mu, double w);

EdgeClassification classify_edge(double alpha);

}  // namespace spikelab

#endif
