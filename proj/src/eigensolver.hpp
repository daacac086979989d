#ifndef SPIKELAB_EIGENSOLVER_HPP
#define SPIKELAB_EIGENSOLVER_HPP

#include <lapacke.h>

#include <Eigen/Dense>
#include <stdexcept>

namespace spikelab {

// Eigendecomposition of a self-adjoint matrix via LAPACK's divide-and-conquer
// driver. Eigenvalues come back ascending; columns of the (overwritten) input
// are the eigenvectors when want_vectors is set.
inline Eigen::VectorXd selfadjoint_eigs(Eigen::MatrixXd& a, bool want_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  const lapack_int info =
      LAPACKE_dsyevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
                     a.data(), n, w.data());
  if (info != 0) throw std::runtime_error("dsyevd failed");
  return w;
}

inline Eigen::VectorXd selfadjoint_eigs(Eigen::MatrixXcd& a,
                                        bool want_vectors) {
  const lapack_int n = static_cast<lapack_int>(a.rows());
  Eigen::VectorXd w(n);
  const lapack_int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0) throw std::runtime_error("zheevd failed");
  return w;
}

}  // namespace spikelab

#endif
