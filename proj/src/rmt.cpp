#include "spikelab/rmt.hpp"

#include <cmath>
#include <stdexcept>

#include "eigensolver.hpp"

namespace spikelab {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace

TrialRng::TrialRng(std::uint64_t master_seed, std::uint64_t trial_index) {
  const std::uint64_t a = mix64(master_seed + 0x9E3779B97F4A7C15ull);
  const std::uint64_t b = mix64(trial_index + 0xD1B54A32D192ED03ull);
  state_ = mix64(a ^ (b * 0x9E3779B97F4A7C15ull));
}

std::uint64_t TrialRng::next_u64() {
  state_ += 0x9E3779B97F4A7C15ull;
  return mix64(state_);
}

double TrialRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double TrialRng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 shifted into (0,1] so the log is finite.
  const double u1 =
      (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * M_PI * u2;
  spare_ = rad * std::sin(ang);
  have_spare_ = true;
  return rad * std::cos(ang);
}

std::complex<double> TrialRng::complex_normal() {
  return {normal() * M_SQRT1_2, normal() * M_SQRT1_2};
}

EnsembleSpec EnsembleSpec::goe(int n, double sigma) {
  EnsembleSpec s;
  s.kind = Kind::GOE;
  s.n = n;
  s.sigma = sigma;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::gue(int n, double sigma) {
  EnsembleSpec s;
  s.kind = Kind::GUE;
  s.n = n;
  s.sigma = sigma;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::wishart_real(int n, int m) {
  EnsembleSpec s;
  s.kind = Kind::WishartReal;
  s.n = n;
  s.m = m;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::wishart_complex(int n, int m) {
  EnsembleSpec s;
  s.kind = Kind::WishartComplex;
  s.n = n;
  s.m = m;
  s.validate();
  return s;
}

EnsembleSpec EnsembleSpec::fixed_diagonal(std::vector<double> entries) {
  EnsembleSpec s;
  s.kind = Kind::FixedDiagonal;
  s.n = static_cast<int>(entries.size());
  s.diagonal = std::move(entries);
  s.validate();
  return s;
}

void EnsembleSpec::validate() const {
  if (n < 1) throw std::invalid_argument("ensemble: n must be positive");
  switch (kind) {
    case Kind::GOE:
    case Kind::GUE:
      if (!(sigma > 0.0))
        throw std::invalid_argument("ensemble: sigma must be positive");
      break;
    case Kind::WishartReal:
    case Kind::WishartComplex:
      if (m < 1) throw std::invalid_argument("ensemble: m must be positive");
      break;
    case Kind::FixedDiagonal:
      if (static_cast<int>(diagonal.size()) != n)
        throw std::invalid_argument("ensemble: diagonal length mismatch");
      break;
  }
}

namespace {

double draw(TrialRng& rng, double*) { return rng.normal(); }
std::complex<double> draw(TrialRng& rng, std::complex<double>*) {
  return rng.complex_normal();
}

double unit_phase(double x) { return x >= 0.0 ? 1.0 : -1.0; }
std::complex<double> unit_phase(std::complex<double> x) {
  const double a = std::abs(x);
  return a == 0.0 ? 1.0 : x / a;
}

}  // namespace

template <class Scalar>
DenseMatrix<Scalar> haar_frame(int n, int r, TrialRng& rng) {
  if (r < 1 || r > n) throw std::domain_error("haar_frame: need 1 <= r <= n");
  DenseMatrix<Scalar> g(n, r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = draw(rng, (Scalar*)nullptr);
  Eigen::HouseholderQR<DenseMatrix<Scalar>> qr(g);
  DenseMatrix<Scalar> q =
      qr.householderQ() * DenseMatrix<Scalar>::Identity(n, r);
  const DenseMatrix<Scalar> rr =
      qr.matrixQR().template triangularView<Eigen::Upper>();
  // Absorbing the R-diagonal phase into Q makes the factorization unique and
  // the distribution exactly Haar.
  for (int j = 0; j < r; ++j) q.col(j) *= unit_phase(rr(j, j));
  return q;
}

template <class Scalar>
DenseMatrix<Scalar> sample_ensemble(const EnsembleSpec& spec, TrialRng& rng) {
  spec.validate();
  constexpr bool is_complex = !std::is_same_v<Scalar, double>;
  if (spec.complex_field() != is_complex)
    throw std::invalid_argument("sample_ensemble: scalar/field mismatch");
  const int n = spec.n;
  DenseMatrix<Scalar> x(n, n);
  switch (spec.kind) {
    case EnsembleSpec::Kind::GOE: {
      // Scaled so the spectral measure converges to Semicircle(sigma) on
      // [-2 sigma, 2 sigma]: off-diagonal variance sigma^2/n, diagonal twice
      // that.
      const double sd_diag = spec.sigma * std::sqrt(2.0 / n);
      const double sd_off = spec.sigma / std::sqrt(static_cast<double>(n));
      for (int j = 0; j < n; ++j) {
        x(j, j) = Scalar(sd_diag * rng.normal());
        for (int i = j + 1; i < n; ++i) {
          x(i, j) = Scalar(sd_off * rng.normal());
          x(j, i) = x(i, j);
        }
      }
      return x;
    }
    case EnsembleSpec::Kind::GUE: {
      if constexpr (is_complex) {
        // Hermitian analogue: real diagonal with variance sigma^2/n,
        // off-diagonal complex with total variance sigma^2/n.
        const double sd_diag = spec.sigma / std::sqrt(static_cast<double>(n));
        const double sd_off = spec.sigma / std::sqrt(2.0 * n);
        for (int j = 0; j < n; ++j) {
          x(j, j) = Scalar(sd_diag * rng.normal());
          for (int i = j + 1; i < n; ++i) {
            x(i, j) = sd_off * Scalar(rng.normal(), rng.normal());
            x(j, i) = std::conj(x(i, j));
          }
        }
      }
      return x;
    }
    case EnsembleSpec::Kind::WishartReal:
    case EnsembleSpec::Kind::WishartComplex: {
      DenseMatrix<Scalar> g(n, spec.m);
      for (int j = 0; j < spec.m; ++j)
        for (int i = 0; i < n; ++i) g(i, j) = draw(rng, (Scalar*)nullptr);
      x.setZero();
      x.template selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / spec.m);
      x = x.template selfadjointView<Eigen::Lower>();
      return x;
    }
    case EnsembleSpec::Kind::FixedDiagonal: {
      x.setZero();
      for (int i = 0; i < n; ++i) x(i, i) = Scalar(spec.diagonal[i]);
      return x;
    }
  }
  throw std::logic_error("unreachable");
}

template <class Scalar>
Deformed<Scalar> deform(const DenseMatrix<Scalar>& x, const SpikeSpec& spikes,
                        PerturbationModel model, TrialRng& rng) {
  const int n = static_cast<int>(x.rows());
  const int r = static_cast<int>(spikes.thetas.size());
  Deformed<Scalar> out;
  out.frame = haar_frame<Scalar>(n, r, rng);
  const Eigen::Map<const Eigen::VectorXd> th(spikes.thetas.data(), r);

  if (model == PerturbationModel::Additive) {
    out.matrix = x;
    out.matrix.noalias() +=
        out.frame * th.asDiagonal() * out.frame.adjoint();
    return out;
  }
  for (double t : spikes.thetas)
    if (1.0 + t <= 0.0)
      throw std::domain_error("multiplicative spike needs 1 + theta > 0");
  if (x.diagonal().real().minCoeff() < -1e-9)
    throw std::domain_error("multiplicative model needs X >= 0");
  // (I+P)^{1/2} = I + U diag(sqrt(1+theta)-1) U*; the symmetric product
  // (I+P)^{1/2} X (I+P)^{1/2} shares its spectrum with X(I+P).
  Eigen::VectorXd d(r);
  for (int j = 0; j < r; ++j) d[j] = std::sqrt(1.0 + th[j]) - 1.0;
  const DenseMatrix<Scalar> w = x * out.frame;                  // n x r
  const DenseMatrix<Scalar> m1 = out.frame * d.asDiagonal();    // U C
  const DenseMatrix<Scalar> b = out.frame.adjoint() * w;        // U* X U
  out.matrix = x;
  out.matrix.noalias() += m1 * w.adjoint();
  out.matrix.noalias() += w * m1.adjoint();
  out.matrix.noalias() += m1 * b * m1.adjoint();
  return out;
}

template <class Scalar>
Eigen::VectorXd spectrum_only(DenseMatrix<Scalar> x) {
  return selfadjoint_eigs(x, false);
}

template <class Scalar>
EigenSystem<Scalar> full_spectrum(DenseMatrix<Scalar> x) {
  EigenSystem<Scalar> out;
  out.values = selfadjoint_eigs(x, true);
  out.vectors = std::move(x);
  return out;
}

namespace {

// Squared norm of the projection of v onto the span of the frame columns in
// the same exact-theta group as column `spike`.
template <class Scalar>
double group_overlap(const DenseMatrix<Scalar>& frame,
                     const std::vector<double>& thetas, int spike,
                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& v) {
  double s = 0.0;
  for (int j = 0; j < static_cast<int>(thetas.size()); ++j)
    if (thetas[j] == thetas[spike])
      s += std::norm(std::complex<double>(frame.col(j).dot(v)));
  return s;
}

}  // namespace

template <class Scalar>
TrialRecord spectrum_and_overlaps(const Deformed<Scalar>& d,
                                  const SpikeSpec& spikes,
                                  PerturbationModel model, int k_top,
                                  int k_bottom) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const int n = static_cast<int>(d.matrix.rows());
  const int r = static_cast<int>(spikes.thetas.size());
  const EigenSystem<Scalar> es = full_spectrum<Scalar>(d.matrix);

  TrialRecord rec;
  k_top = std::min(k_top, n);
  k_bottom = std::min(k_bottom, n);
  for (int i = 0; i < k_top; ++i)
    rec.top_eigenvalues.push_back(es.values[n - 1 - i]);
  for (int i = 0; i < k_bottom; ++i)
    rec.bottom_eigenvalues.push_back(es.values[i]);

  const bool multiplicative = model == PerturbationModel::Multiplicative;
  Eigen::VectorXd dinv(r);
  if (multiplicative)
    for (int j = 0; j < r; ++j)
      dinv[j] = 1.0 / std::sqrt(1.0 + spikes.thetas[j]) - 1.0;

  for (int i = 0; i < r; ++i) {
    // Spike i pairs with the i-th eigenvalue from the top when theta_i > 0,
    // and with the (r-1-i)-th from the bottom when theta_i < 0.
    const int idx = spikes.thetas[i] > 0.0 ? n - 1 - i : r - 1 - i;
    Vec v = es.vectors.col(idx);
    double sim = 0.0;
    if (multiplicative) {
      sim = group_overlap(d.frame, spikes.thetas, i, v);
      // Eigenvector of X(I+P) itself: w = (I+P)^{-1/2} v, renormalized.
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> proj =
          d.frame.adjoint() * v;
      v += d.frame * (dinv.asDiagonal() * proj);
      v /= v.norm();
    }
    const double primary = group_overlap(d.frame, spikes.thetas, i, v);
    rec.overlaps_sq.push_back(primary);
    if (multiplicative) rec.similarity_overlaps_sq.push_back(sim);
    rec.column_overlaps_sq.push_back(
        std::norm(std::complex<double>(d.frame.col(i).dot(v))));
  }
  return rec;
}

WeightedMeasure weighted_measure(const Eigen::MatrixXcd& coeffs,
                                 const Eigen::VectorXd& lambdas, int i,
                                 int j) {
  if (i < 0 || j < 0 || i >= coeffs.cols() || j >= coeffs.cols())
    throw std::out_of_range("weighted_measure: column index");
  if (coeffs.rows() != lambdas.size())
    throw std::invalid_argument("weighted_measure: size mismatch");
  WeightedMeasure out;
  out.atoms = lambdas;
  out.weights = coeffs.col(i).conjugate().cwiseProduct(coeffs.col(j));
  return out;
}

template Eigen::MatrixXd haar_frame<double>(int, int, TrialRng&);
template Eigen::MatrixXcd haar_frame<std::complex<double>>(int, int,
                                                           TrialRng&);
template Eigen::MatrixXd sample_ensemble<double>(const EnsembleSpec&,
                                                 TrialRng&);
template Eigen::MatrixXcd sample_ensemble<std::complex<double>>(
    const EnsembleSpec&, TrialRng&);
template Deformed<double> deform<double>(const Eigen::MatrixXd&,
                                         const SpikeSpec&, PerturbationModel,
                                         TrialRng&);
template Deformed<std::complex<double>> deform<std::complex<double>>(
    const Eigen::MatrixXcd&, const SpikeSpec&, PerturbationModel, TrialRng&);
template Eigen::VectorXd spectrum_only<double>(Eigen::MatrixXd);
template Eigen::VectorXd spectrum_only<std::complex<double>>(Eigen::MatrixXcd);
template EigenSystem<double> full_spectrum<double>(Eigen::MatrixXd);
template EigenSystem<std::complex<double>> full_spectrum<std::complex<double>>(
    Eigen::MatrixXcd);
template TrialRecord spectrum_and_overlaps<double>(const Deformed<double>&,
                                                   const SpikeSpec&,
                                                   PerturbationModel, int,
                                                   int);
template TrialRecord spectrum_and_overlaps<std::complex<double>>(
    const Deformed<std::complex<double>>&, const SpikeSpec&,
    PerturbationModel, int, int);

}  // namespace spikelab
