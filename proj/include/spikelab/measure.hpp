#ifndef SPIKELAB_MEASURE_HPP
#define SPIKELAB_MEASURE_HPP

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace spikelab {

enum class MeasureKind { Atomic, SmoothDensity, Semicircle, MarchenkoPastur };

/// A compactly supported probability measure on the real line.
///
/// Four representations are supported: a purely atomic measure, a smooth
/// density on [a,b] with power-law edge exponents (optionally plus an atom
/// at zero), and the semicircle / Marchenko-Pastur families with closed
/// forms. Instances are immutable after construction and cheap to copy.
class SpectralMeasure {
 public:
  static SpectralMeasure atomic(std::vector<double> atoms,
                                std::vector<double> weights);
  static SpectralMeasure semicircle(double sigma);
  static SpectralMeasure marchenko_pastur(double c);
  static SpectralMeasure smooth_density(double a, double b,
                                        std::function<double(double)> density,
                                        double alpha_lo, double alpha_hi,
                                        double atom_at_zero_weight = 0.0);
  /// Uniform grid of density samples on [a,b], interpolated linearly.
  static SpectralMeasure density_grid(double a, double b,
                                      std::vector<double> samples,
                                      double alpha_lo, double alpha_hi,
                                      double atom_at_zero_weight = 0.0);

  MeasureKind kind() const;

  /// Convex hull endpoints of the support, including any atom at zero.
  std::pair<double, double> support_bounds() const;

  /// Endpoints of the continuous (density) part; equals support_bounds()
  /// except when an atom at zero sits outside the density support.
  std::pair<double, double> density_bounds() const;

  /// Family parameter: sigma for Semicircle, ratio c for MarchenkoPastur.
  double family_param() const;

  bool has_density() const;
  double density_at(double t) const;
  double atom_at_zero_weight() const;
  double edge_exponent_lo() const;
  double edge_exponent_hi() const;
  const std::vector<double>& atoms() const;
  const std::vector<double>& atom_weights() const;

  bool nonnegative_support() const;
  /// True when x lies in the support (within tol of an atom, or inside the
  /// density interval).
  bool in_support(double x, double tol = 1e-12) const;

  /// k-th raw moment, k <= 8.
  double moment(int k) const;

  /// Distribution function F(x) = mu((-inf, x]).
  double cdf(double x) const;
  /// Left limit F(x-); differs from cdf(x) only at atoms.
  double cdf_left(double x) const;
  /// Smallest x with F(x) >= p (numerical inverse of the cdf).
  double quantile(double p) const;

  /// Integrates g against the measure (atoms included), with edge-adapted
  /// quadrature for the density part. extra_pow_lo/hi declare an additional
  /// power-law factor of g at the respective density edge, e.g. -1 when
  /// g(t) = 1/(b-t), so the substitution can absorb the full singularity.
  double integrate(const std::function<double(double)>& g,
                   double extra_pow_lo = 0.0, double extra_pow_hi = 0.0) const;
  /// Same, density part only (no atoms).
  double integrate_density(const std::function<double(double)>& g,
                           double extra_pow_lo = 0.0,
                           double extra_pow_hi = 0.0) const;
  /// Density part with g(t, t - a, b - t): the edge distances are exact near
  /// the substituted edge, so kernels singular at an edge can be evaluated
  /// without cancellation.
  double integrate_density_edge(
      const std::function<double(double, double, double)>& g,
      double extra_pow_lo = 0.0, double extra_pow_hi = 0.0) const;

  // Per-measure cache slot used by the transforms module to hold the edge
  // TransformProfile; filled once under the call_once guard.
  struct CacheSlot {
    std::once_flag once;
    std::shared_ptr<void> value;
  };
  CacheSlot& cache_slot() const;

 private:
  struct Impl;
  explicit SpectralMeasure(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Eigenvalues of a finite matrix, stored in descending order.
struct EmpiricalSpectrum {
  std::vector<double> values;  // descending

  explicit EmpiricalSpectrum(std::vector<double> v);
  std::size_t size() const { return values.size(); }
};

/// Kolmogorov sup-distance between the empirical CDF and the measure CDF.
double ks_distance(const EmpiricalSpectrum& empirical,
                   const SpectralMeasure& measure);

/// Parses the JSON measure file format: {"kind": "semicircle"|
/// "marchenko_pastur"|"atomic"|"density_grid", ...params}.
SpectralMeasure measure_from_json_text(const std::string& text);
SpectralMeasure measure_from_json_file(const std::string& path);

}  // namespace spikelab

#endif
