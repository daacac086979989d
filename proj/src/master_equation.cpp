#include "spikelab/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace spikelab {

namespace {
using cd = std::complex<double>;
constexpr int kScanCells = 2048;
constexpr int kContourNodes = 512;
constexpr double kPoleTol = 1e-14;
constexpr double kDegenerateTol = 1e-8;
}  // namespace

MasterEquationSystem::MasterEquationSystem(Eigen::VectorXd lambdas,
                                           Eigen::MatrixXcd frame,
                                           Eigen::VectorXd thetas,
                                           PerturbationModel model)
    : lambdas_(std::move(lambdas)),
      frame_(std::move(frame)),
      thetas_(std::move(thetas)),
      model_(model) {
  if (model_ == PerturbationModel::Similarity)
    throw std::invalid_argument(
        "master equation: use Multiplicative (shared spectrum)");
  const int nn = n(), rr = r();
  if (nn < 1 || rr < 1 || frame_.rows() != nn || frame_.cols() != rr)
    throw std::invalid_argument("master equation: dimension mismatch");
  for (int i = 1; i < nn; ++i)
    if (lambdas_[i] > lambdas_[i - 1])
      throw std::invalid_argument("master equation: lambdas not descending");
  for (int j = 0; j < rr; ++j)
    if (thetas_[j] == 0.0)
      throw std::invalid_argument("master equation: zero theta");
  if (model_ == PerturbationModel::Multiplicative && lambdas_[nn - 1] < 0.0)
    throw std::invalid_argument(
        "master equation: multiplicative model needs lambdas >= 0");
  const Eigen::MatrixXcd gram = frame_.adjoint() * frame_;
  if ((gram - Eigen::MatrixXcd::Identity(rr, rr)).cwiseAbs().maxCoeff() >
      1e-10)
    throw std::invalid_argument("master equation: frame not orthonormal");
}

cd MasterEquationSystem::kernel(cd z, double lambda) const {
  const cd d = z - lambda;
  return model_ == PerturbationModel::Additive ? 1.0 / d : lambda / d;
}

namespace {

Eigen::MatrixXcd eval_M_with(const MasterEquationSystem& sys, cd z,
                             const Eigen::VectorXd& thetas) {
  if (z.imag() == 0.0) {
    for (int k = 0; k < sys.n(); ++k)
      if (std::abs(z.real() - sys.lambdas()[k]) < kPoleTol)
        throw std::domain_error("eval_M: z at a pole of the resolvent");
  }
  const int r = sys.r();
  Eigen::VectorXcd res(sys.n());
  for (int k = 0; k < sys.n(); ++k) res[k] = sys.kernel(z, sys.lambdas()[k]);
  const Eigen::MatrixXcd A =
      sys.frame().adjoint() * res.asDiagonal() * sys.frame();
  return Eigen::MatrixXcd::Identity(r, r) -
         A * thetas.asDiagonal().toDenseMatrix().cast<cd>();
}

}  // namespace

Eigen::MatrixXcd eval_M(const MasterEquationSystem& sys, cd z) {
  return eval_M_with(sys, z, sys.thetas());
}

cd det_M(const MasterEquationSystem& sys, cd z) {
  return eval_M(sys, z).determinant();
}

namespace {

double real_det(const MasterEquationSystem& sys, double z,
                const Eigen::VectorXd& thetas) {
  return eval_M_with(sys, cd(z, 0.0), thetas).determinant().real();
}

double bisect_det_root(const MasterEquationSystem& sys,
                       const Eigen::VectorXd& thetas, double lo, double hi,
                       double flo) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = real_det(sys, mid, thetas);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Zero count inside the circle with diameter (lo, hi), from the winding
// number of det M along the contour.
int contour_zero_count(const MasterEquationSystem& sys,
                       const Eigen::VectorXd& thetas, double lo, double hi) {
  const double cx = 0.5 * (lo + hi), rad = 0.5 * (hi - lo);
  double winding = 0.0;
  cd prev = eval_M_with(sys, cx + rad, thetas).determinant();
  for (int i = 1; i <= kContourNodes; ++i) {
    const double phi = 2.0 * M_PI * i / kContourNodes;
    const cd z = cd(cx + rad * std::cos(phi), rad * std::sin(phi));
    const cd cur = eval_M_with(sys, z, thetas).determinant();
    winding += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(winding / (2.0 * M_PI)));
}

double min_abs_det_search(const MasterEquationSystem& sys,
                          const Eigen::VectorXd& thetas, double lo,
                          double hi) {
  auto f = [&](double z) { return std::abs(real_det(sys, z, thetas)); };
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (m1 >= m2) break;
    if (f(m1) < f(m2))
      hi = m2;
    else
      lo = m1;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> isolated_eigenvalues(const MasterEquationSystem& sys,
                                         double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("empty search interval");
  const auto& lam = sys.lambdas();
  for (int k = 0; k < sys.n(); ++k)
    if (lam[k] > lo && lam[k] < hi)
      throw std::domain_error("search interval touches the spectrum");
  const double scale = lam[0] - lam[sys.n() - 1] + 1.0;
  // Keep the scan clear of poles at the interval ends.
  double lo2 = lo, hi2 = hi;
  for (int k = 0; k < sys.n(); ++k) {
    if (lam[k] <= lo) lo2 = std::max(lo2, lam[k] + 1e-9 * scale);
    if (lam[k] >= hi) hi2 = std::min(hi2, lam[k] - 1e-9 * scale);
  }
  if (!(lo2 < hi2)) return {};

  // Exact duplicates make the kernel rank drop by more than one; perturb
  // them internally and report every root found.
  Eigen::VectorXd thetas = sys.thetas();
  bool perturbed = false;
  {
    const double eps = 1e-9 * thetas.cwiseAbs().maxCoeff();
    std::set<double> seen;
    for (int j = 0; j < thetas.size(); ++j) {
      while (seen.count(thetas[j])) {
        thetas[j] += eps;
        perturbed = true;
      }
      seen.insert(thetas[j]);
    }
  }

  std::vector<double> grid(kScanCells + 1), dets(kScanCells + 1);
  for (int i = 0; i <= kScanCells; ++i) {
    grid[i] = lo2 + (hi2 - lo2) * i / kScanCells;
    dets[i] = real_det(sys, grid[i], thetas);
  }
  std::vector<double> roots;
  for (int i = 0; i < kScanCells; ++i) {
    if (dets[i] == 0.0) {
      roots.push_back(grid[i]);
      continue;
    }
    if ((dets[i] > 0.0) != (dets[i + 1] > 0.0)) {
      roots.push_back(
          bisect_det_root(sys, thetas, grid[i], grid[i + 1], dets[i]));
    } else if (std::min(std::abs(dets[i]), std::abs(dets[i + 1])) < 1e-6) {
      const int count =
          contour_zero_count(sys, thetas, grid[i], grid[i + 1]);
      if (count > 0) {
        const double z = min_abs_det_search(sys, thetas, grid[i], grid[i + 1]);
        for (int c = 0; c < count; ++c) roots.push_back(z);
      }
    }
  }
  std::sort(roots.begin(), roots.end());

  // The duplicate-theta perturbation shifts every root by roughly the
  // perturbation size. Simple roots of the exact determinant still produce a
  // sign change in a small neighbourhood, so polish each detected root
  // against the unperturbed system; exactly multiple roots (no sign change)
  // keep their perturbed estimates, which straddle the true location.
  if (perturbed) {
    const Eigen::VectorXd& exact = sys.thetas();
    for (std::size_t i = 0; i < roots.size(); ++i) {
      double cap = std::min(roots[i] - lo2, hi2 - roots[i]);
      if (i > 0) cap = std::min(cap, 0.5 * (roots[i] - roots[i - 1]));
      if (i + 1 < roots.size())
        cap = std::min(cap, 0.5 * (roots[i + 1] - roots[i]));
      for (double w = 1e-12 * scale; w <= cap; w *= 4.0) {
        const double a = roots[i] - w, b = roots[i] + w;
        const double fa = real_det(sys, a, exact);
        const double fb = real_det(sys, b, exact);
        if ((fa > 0.0) != (fb > 0.0)) {
          roots[i] = bisect_det_root(sys, exact, a, b, fa);
          break;
        }
      }
    }
    std::sort(roots.begin(), roots.end());
  }
  return roots;
}

Eigen::VectorXcd reconstruct_eigenvector(const MasterEquationSystem& sys,
                                         double z) {
  const int r = sys.r();
  const Eigen::MatrixXcd M = eval_M(sys, cd(z, 0.0));
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (r >= 2 && sv[r - 2] < kDegenerateTol)
    throw std::runtime_error("reconstruct_eigenvector: degenerate eigenvalue");
  const Eigen::VectorXcd w = svd.matrixV().col(r - 1);
  const Eigen::VectorXcd rhs =
      sys.frame() * sys.thetas().asDiagonal().toDenseMatrix().cast<cd>() * w;
  Eigen::VectorXcd x(sys.n());
  for (int k = 0; k < sys.n(); ++k)
    x[k] = sys.kernel(cd(z, 0.0), sys.lambdas()[k]) * rhs[k];
  return x / x.norm();
}

Eigen::VectorXd exact_overlaps(const MasterEquationSystem& sys, double z) {
  const Eigen::VectorXcd x = reconstruct_eigenvector(sys, z);
  return (sys.frame().adjoint() * x).cwiseAbs2();
}

namespace {

double secular_sum(const std::vector<double>& lambdas,
                   const std::vector<double>& weights_sq,
                   PerturbationModel model, double z, int power) {
  double s = 0.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    // A zero weight contributes nothing even at its own pole, where the
    // product would otherwise evaluate to 0 * inf.
    if (weights_sq[k] == 0.0) continue;
    const double d = z - lambdas[k];
    double num = model == PerturbationModel::Additive ? 1.0 : lambdas[k];
    if (power == 2) num *= num;
    s += weights_sq[k] * num / std::pow(d, power);
  }
  return s;
}

}  // namespace

double secular_rank_one(const std::vector<double>& lambdas,
                        const std::vector<double>& weights_sq, double theta,
                        PerturbationModel model) {
  if (theta == 0.0) throw std::invalid_argument("secular: theta == 0");
  if (lambdas.empty() || lambdas.size() != weights_sq.size())
    throw std::invalid_argument("secular: bad inputs");
  double wsum = 0.0;
  for (double w : weights_sq) {
    if (w < 0.0) throw std::invalid_argument("secular: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-8)
    throw std::invalid_argument("secular: weights must sum to 1");
  if (model == PerturbationModel::Similarity)
    model = PerturbationModel::Multiplicative;

  const auto [mn_it, mx_it] = std::minmax_element(lambdas.begin(),
                                                  lambdas.end());
  const double lam_min = *mn_it, lam_max = *mx_it;
  const double scale = lam_max - lam_min + 1.0;
  const double target = 1.0 / theta;
  auto f = [&](double z) {
    return secular_sum(lambdas, weights_sq, model, z, 1) - target;
  };

  double lo, hi;
  if (theta > 0.0) {
    double off = 1e-9 * scale;
    while (f(lam_max + off) <= 0.0) {
      off *= 0.5;
      if (off < 1e-18 * scale)
        throw std::out_of_range("secular: no root on the branch");
    }
    double grow = off;
    while (f(lam_max + grow) > 0.0) {
      grow *= 2.0;
      if (grow > 1e12 * scale)
        throw std::out_of_range("secular: no root on the branch");
    }
    lo = lam_max + off;
    hi = lam_max + grow;
  } else {
    double off = 1e-9 * scale;
    while (f(lam_min - off) >= 0.0) {
      off *= 0.5;
      if (off < 1e-18 * scale)
        throw std::out_of_range("secular: no root on the branch");
    }
    double grow = off;
    while (f(lam_min - grow) < 0.0) {
      grow *= 2.0;
      if (grow > 1e12 * scale)
        throw std::out_of_range("secular: no root on the branch");
    }
    lo = lam_min - grow;
    hi = lam_min - off;
  }
  // f is strictly decreasing on the branch: f(lo) > 0 > f(hi).
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double secular_rank_one_overlap(const std::vector<double>& lambdas,
                                const std::vector<double>& weights_sq,
                                double theta, PerturbationModel model,
                                double z) {
  if (model == PerturbationModel::Similarity)
    model = PerturbationModel::Multiplicative;
  const double denom = secular_sum(lambdas, weights_sq, model, z, 2);
  return 1.0 / (theta * theta * denom);
}

std::complex<double> WeightedMeasure::moment(int k) const {
  cd s = 0.0;
  for (Eigen::Index i = 0; i < atoms.size(); ++i)
    s += weights[i] * std::pow(atoms[i], k);
  return s;
}

}  // namespace spikelab
