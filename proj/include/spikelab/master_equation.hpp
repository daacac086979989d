#ifndef SPIKELAB_MASTER_EQUATION_HPP
#define SPIKELAB_MASTER_EQUATION_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "spikelab/prediction.hpp"

namespace spikelab {

/// Finite-n data for the exact rank-r eigenvalue characterization:
/// z outside the spectrum of X is an eigenvalue of the deformed matrix iff
/// M(z) = I_r - U^*(zI - X)^{-1} U Theta is singular (the resolvent kernel
/// picks up a factor of X in the multiplicative model).
class MasterEquationSystem {
 public:
  MasterEquationSystem(Eigen::VectorXd lambdas, Eigen::MatrixXcd frame,
                       Eigen::VectorXd thetas, PerturbationModel model);

  int n() const { return static_cast<int>(lambdas_.size()); }
  int r() const { return static_cast<int>(thetas_.size()); }
  const Eigen::VectorXd& lambdas() const { return lambdas_; }
  const Eigen::MatrixXcd& frame() const { return frame_; }
  const Eigen::VectorXd& thetas() const { return thetas_; }
  PerturbationModel model() const { return model_; }

  /// Resolvent kernel at eigenvalue lambda: 1/(z-lambda), or
  /// lambda/(z-lambda) in the multiplicative model.
  std::complex<double> kernel(std::complex<double> z, double lambda) const;

 private:
  Eigen::VectorXd lambdas_;  // descending
  Eigen::MatrixXcd frame_;   // n x r, orthonormal columns
  Eigen::VectorXd thetas_;   // r, nonzero
  PerturbationModel model_;
};

/// The r x r matrix M(z); refuses evaluation within 1e-14 of a pole.
Eigen::MatrixXcd eval_M(const MasterEquationSystem& sys,
                        std::complex<double> z);

std::complex<double> det_M(const MasterEquationSystem& sys,
                           std::complex<double> z);

/// All z in (lo, hi) with det M(z) = 0, ascending. Found by sign-change
/// scanning on a 2048-cell grid plus bisection, with an argument-principle
/// count on cells where |det| dips without a sign change. Exactly duplicated
/// thetas are perturbed internally by 1e-9 * max|theta| before root-finding.
std::vector<double> isolated_eigenvalues(const MasterEquationSystem& sys,
                                         double lo, double hi);

/// Unit eigenvector of the deformed matrix for an isolated eigenvalue z,
/// reconstructed from the kernel of M(z). Throws when the kernel dimension
/// is not 1.
Eigen::VectorXcd reconstruct_eigenvector(const MasterEquationSystem& sys,
                                         double z);

/// Squared moduli of the frame projections of the reconstructed eigenvector.
Eigen::VectorXd exact_overlaps(const MasterEquationSystem& sys, double z);

/// Rank-1 secular equation: solves sum_k w_k k(z, lambda_k) = 1/theta on the
/// branch above the spectrum (theta > 0) or below it (theta < 0).
double secular_rank_one(const std::vector<double>& lambdas,
                        const std::vector<double>& weights_sq, double theta,
                        PerturbationModel model);

/// Rank-1 squared overlap at a secular root z.
double secular_rank_one_overlap(const std::vector<double>& lambdas,
                                const std::vector<double>& weights_sq,
                                double theta, PerturbationModel model,
                                double z);

/// Frame-weighted spectral measure mu_{i,j} = sum_k conj(u_{k,i}) u_{k,j}
/// delta_{lambda_k}.
struct WeightedMeasure {
  Eigen::VectorXd atoms;
  Eigen::VectorXcd weights;

  double total_variation() const { return weights.cwiseAbs().sum(); }
  std::complex<double> moment(int k) const;
};

}  // namespace spikelab

#endif
