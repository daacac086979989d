#ifndef SPIKELAB_RMT_HPP
#define SPIKELAB_RMT_HPP

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "spikelab/master_equation.hpp"
#include "spikelab/prediction.hpp"

namespace spikelab {

/// Counter-based generator: each trial derives an independent stream from
/// (master_seed, trial_index), so serial and parallel runs agree bit for bit.
/// Core mixer is SplitMix64; normals come from Box-Muller so the output does
/// not depend on any library's distribution implementation.
class TrialRng {
 public:
  TrialRng(std::uint64_t master_seed, std::uint64_t trial_index);

  std::uint64_t next_u64();
  double uniform();  // [0, 1), 53 bits
  double normal();   // standard normal
  std::complex<double> complex_normal();  // total variance 1

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct EnsembleSpec {
  enum class Kind { GOE, GUE, WishartReal, WishartComplex, FixedDiagonal };

  Kind kind;
  int n = 0;
  double sigma = 1.0;            // Wigner scale
  int m = 0;                     // Wishart sample count; c = n/m
  std::vector<double> diagonal;  // FixedDiagonal entries

  static EnsembleSpec goe(int n, double sigma = 1.0);
  static EnsembleSpec gue(int n, double sigma = 1.0);
  static EnsembleSpec wishart_real(int n, int m);
  static EnsembleSpec wishart_complex(int n, int m);
  static EnsembleSpec fixed_diagonal(std::vector<double> entries);

  bool complex_field() const {
    return kind == Kind::GUE || kind == Kind::WishartComplex;
  }
  double wishart_ratio() const { return static_cast<double>(n) / m; }
  void validate() const;
};

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Gaussian QR with the R-diagonal sign (or phase) absorbed into Q, so the
/// column span is exactly Haar distributed.
template <class Scalar>
DenseMatrix<Scalar> haar_frame(int n, int r, TrialRng& rng);

/// One sample of the ensemble. Scalar must match the ensemble's field
/// (double for GOE/Wishart_real/FixedDiagonal, complex for GUE and
/// Wishart_complex).
template <class Scalar>
DenseMatrix<Scalar> sample_ensemble(const EnsembleSpec& spec, TrialRng& rng);

template <class Scalar>
struct Deformed {
  DenseMatrix<Scalar> matrix;  // Hermitian; similarity form for mult. models
  DenseMatrix<Scalar> frame;   // the Haar frame U, n x r
};

/// Builds P = U Theta U* on a fresh Haar frame and applies it: X + P for the
/// additive model, (I+P)^{1/2} X (I+P)^{1/2} for the multiplicative and
/// similarity models (same spectrum as X(I+P), and Hermitian).
template <class Scalar>
Deformed<Scalar> deform(const DenseMatrix<Scalar>& x, const SpikeSpec& spikes,
                        PerturbationModel model, TrialRng& rng);

struct TrialRecord {
  std::uint64_t seed = 0;
  std::vector<double> top_eigenvalues;     // descending
  std::vector<double> bottom_eigenvalues;  // ascending
  // Squared projection of each spike's eigenvector onto the span of the
  // frame columns sharing its theta. The multiplicative model reports the
  // raw (X(I+P)-eigenvector) value here and the similarity-matrix value in
  // similarity_overlaps_sq; other models leave the latter empty.
  std::vector<double> overlaps_sq;
  std::vector<double> similarity_overlaps_sq;
  std::vector<double> column_overlaps_sq;  // per frame column, ungrouped
  double wallclock = 0.0;
};

/// Dense eigendecomposition of the deformed matrix; pairs spike i with the
/// i-th extreme eigenvalue (from the top for positive thetas, from the
/// bottom for negative ones).
template <class Scalar>
TrialRecord spectrum_and_overlaps(const Deformed<Scalar>& d,
                                  const SpikeSpec& spikes,
                                  PerturbationModel model, int k_top,
                                  int k_bottom);

/// Eigenvalues only, ascending.
template <class Scalar>
Eigen::VectorXd spectrum_only(DenseMatrix<Scalar> x);

/// Full decomposition: eigenvalues ascending, columns of vectors matching.
template <class Scalar>
struct EigenSystem {
  Eigen::VectorXd values;
  DenseMatrix<Scalar> vectors;
};
template <class Scalar>
EigenSystem<Scalar> full_spectrum(DenseMatrix<Scalar> x);

/// mu_{i,j} = sum_k conj(u_{k,i}) u_{k,j} delta_{lambda_k}, where coeffs has
/// entries u_{k,i} = <eigvec_k, frame column i> (rows indexed by k).
WeightedMeasure weighted_measure(const Eigen::MatrixXcd& coeffs,
                                 const Eigen::VectorXd& lambdas, int i, int j);

}  // namespace spikelab

#endif
