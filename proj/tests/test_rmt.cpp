#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "spikelab/master_equation.hpp"
#include "spikelab/prediction.hpp"
#include "spikelab/rmt.hpp"

using namespace spikelab;
using cd = std::complex<double>;

TEST_CASE("trial rng streams") {
  TrialRng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());        // same stream reproduces
    CHECK(x != c.next_u64());        // other trial differs
    CHECK(x != d.next_u64());        // other seed differs
  }
  TrialRng r(1, 2);
  double mean = 0.0, m2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double g = r.normal();
    mean += g / n;
    m2 += g * g / n;
  }
  CHECK(std::abs(mean) < 0.03);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.05));
  // complex_normal has total variance 1 split across parts.
  double v = 0.0;
  for (int i = 0; i < n; ++i) v += std::norm(r.complex_normal()) / n;
  CHECK(v == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("haar frames are orthonormal and uniform") {
  TrialRng rng(7, 0);
  const auto q = haar_frame<double>(24, 6, rng);
  CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(6, 6))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  const auto qc = haar_frame<cd>(24, 6, rng);
  CHECK((qc.adjoint() * qc - Eigen::MatrixXcd::Identity(6, 6))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // Each entry satisfies E[n |u|^2] = 1; average over entries and trials.
  const int n = 16, r = 4, trials = 200;
  double s2 = 0.0, s4 = 0.0;
  for (int t = 0; t < trials; ++t) {
    TrialRng g(100, t);
    const auto u = haar_frame<double>(n, r, g);
    for (int i = 0; i < r; ++i)
      for (int k = 0; k < n; ++k) {
        const double w = n * u(k, i) * u(k, i);
        s2 += w / (n * r * trials);
        s4 += w * w / (n * r * trials);
      }
  }
  CHECK(s2 == doctest::Approx(1.0).epsilon(0.05));

  // Fourth moment against the normalized-Gaussian-vector oracle
  // (E[(n u1^2)^2] = 3n/(n+2) on the sphere).
  double o4 = 0.0;
  {
    TrialRng g(101, 0);
    const int m = 20000;
    for (int t = 0; t < m; ++t) {
      Eigen::VectorXd v(n);
      for (int k = 0; k < n; ++k) v[k] = g.normal();
      v.normalize();
      const double w = n * v[0] * v[0];
      o4 += w * w / m;
    }
  }
  CHECK(o4 == doctest::Approx(3.0 * n / (n + 2.0)).epsilon(0.1));
  CHECK(s4 == doctest::Approx(o4).epsilon(0.1));
}

TEST_CASE("ensemble spectra land on their limiting edges") {
  // Wigner: top eigenvalue near 2 sigma.
  {
    const int trials = 20;
    double mean_top = 0.0;
    for (int t = 0; t < trials; ++t) {
      TrialRng rng(2100, t);
      const auto x = sample_ensemble<double>(EnsembleSpec::goe(800, 1.0), rng);
      const Eigen::VectorXd ev = spectrum_only<double>(x);
      const double top = ev[ev.size() - 1];
      CHECK(top > 1.9);
      CHECK(top < 2.1);
      CHECK(ev[0] > -2.1);
      CHECK(ev[0] < -1.9);
      mean_top += top / trials;
    }
    CHECK(mean_top > 1.95);
    CHECK(mean_top < 2.02);
  }
  // GUE, complex field.
  {
    TrialRng rng(2200, 0);
    const auto x = sample_ensemble<cd>(EnsembleSpec::gue(500, 1.0), rng);
    CHECK((x - x.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::VectorXd ev = spectrum_only<cd>(x);
    CHECK(ev[ev.size() - 1] == doctest::Approx(2.0).epsilon(0.06));
  }
  // Wishart, c = 1/4: support [0.25, 2.25].
  {
    const int trials = 8;
    for (int t = 0; t < trials; ++t) {
      TrialRng rng(2300, t);
      const auto x =
          sample_ensemble<double>(EnsembleSpec::wishart_real(400, 1600), rng);
      const Eigen::VectorXd ev = spectrum_only<double>(x);
      CHECK(ev[ev.size() - 1] > 2.1);
      CHECK(ev[ev.size() - 1] < 2.32);
      CHECK(ev[0] > 0.18);
      CHECK(ev[0] < 0.35);
    }
  }
  // Scaled Wigner.
  {
    TrialRng rng(2400, 0);
    const auto x = sample_ensemble<double>(EnsembleSpec::goe(800, 2.0), rng);
    const Eigen::VectorXd ev = spectrum_only<double>(x);
    CHECK(ev[ev.size() - 1] == doctest::Approx(4.0).epsilon(0.05));
  }
  // Fixed diagonal is exact.
  {
    TrialRng rng(2500, 0);
    const auto x = sample_ensemble<double>(
        EnsembleSpec::fixed_diagonal({0.0, 0.0, 2.0, 2.0}), rng);
    CHECK(x.rows() == 4);
    CHECK(x(2, 2) == 2.0);
    CHECK(x(0, 1) == 0.0);
    CHECK(x(0, 0) == 0.0);
  }
  CHECK_THROWS(EnsembleSpec::goe(0, 1.0).validate());
  CHECK_THROWS(EnsembleSpec::wishart_real(10, 0).validate());
}

TEST_CASE("deformation on reference matrices") {
  const SpikeSpec one({5.0});

  // X = 0: additive deformation is exactly P with eigenvalues {5, 0, ...}.
  {
    TrialRng rng(31, 0);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(12, 12);
    const auto d = deform<double>(x, one, PerturbationModel::Additive, rng);
    const auto rec = spectrum_and_overlaps<double>(
        d, one, PerturbationModel::Additive, 1, 1);
    CHECK(rec.top_eigenvalues[0] == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(rec.bottom_eigenvalues[0] == doctest::Approx(0.0));
    CHECK(rec.overlaps_sq[0] == doctest::Approx(1.0).epsilon(1e-10));
  }
  // Additive deformation differs from X by a rank-r matrix with eigenvalues
  // exactly the thetas.
  {
    TrialRng rng(32, 0);
    const auto x = sample_ensemble<double>(EnsembleSpec::goe(30, 1.0), rng);
    const SpikeSpec spikes({2.0, 1.0, -1.5});
    const auto d = deform<double>(x, spikes, PerturbationModel::Additive, rng);
    const Eigen::VectorXd pev = spectrum_only<double>(d.matrix - x);
    CHECK(pev[29] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(pev[28] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pev[0] == doctest::Approx(-1.5).epsilon(1e-10));
    CHECK(std::abs(pev[1]) < 1e-10);
    CHECK(d.frame.cols() == 3);
  }
  // X = m I multiplicative: similarity form has eigenvalues m(1+theta).
  {
    TrialRng rng(33, 0);
    Eigen::MatrixXd x = 1.5 * Eigen::MatrixXd::Identity(10, 10);
    const SpikeSpec spikes({0.5});
    const auto d =
        deform<double>(x, spikes, PerturbationModel::Multiplicative, rng);
    const auto rec = spectrum_and_overlaps<double>(
        d, spikes, PerturbationModel::Multiplicative, 1, 1);
    CHECK(rec.top_eigenvalues[0] == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(rec.overlaps_sq[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rec.similarity_overlaps_sq[0] == doctest::Approx(1.0).epsilon(1e-10));
  }
  // Similarity model on the identity: spectrum of I + P.
  {
    TrialRng rng(34, 0);
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(10, 10);
    const SpikeSpec spikes({0.5});
    const auto d =
        deform<double>(x, spikes, PerturbationModel::Similarity, rng);
    const Eigen::VectorXd ev = spectrum_only<double>(d.matrix);
    CHECK(ev[9] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(ev[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("finite-n trial agrees with the exact characterization") {
  const int n = 64;
  const SpikeSpec spikes({3.0, -2.5});
  for (int t = 0; t < 5; ++t) {
    TrialRng rng(4100, t);
    const auto x = sample_ensemble<double>(EnsembleSpec::goe(n, 1.0), rng);
    const auto d = deform<double>(x, spikes, PerturbationModel::Additive, rng);
    const auto rec = spectrum_and_overlaps<double>(
        d, spikes, PerturbationModel::Additive, 1, 1);

    // Master-equation view in the eigenbasis of X.
    auto es = full_spectrum<double>(x);
    Eigen::VectorXd lam(n);
    Eigen::MatrixXd v(n, n);
    for (int i = 0; i < n; ++i) {
      lam[i] = es.values[n - 1 - i];
      v.col(i) = es.vectors.col(n - 1 - i);
    }
    const Eigen::MatrixXcd u = (v.transpose() * d.frame).cast<cd>();
    Eigen::VectorXd th(2);
    th << 3.0, -2.5;
    const MasterEquationSystem sys(lam, u, th, PerturbationModel::Additive);

    const auto top = isolated_eigenvalues(sys, lam[0], lam[0] + 10.0);
    REQUIRE(top.size() == 1);
    CHECK(top[0] == doctest::Approx(rec.top_eigenvalues[0]).epsilon(1e-9));
    const auto bot = isolated_eigenvalues(sys, lam[n - 1] - 10.0, lam[n - 1]);
    REQUIRE(bot.size() == 1);
    CHECK(bot[0] == doctest::Approx(rec.bottom_eigenvalues[0]).epsilon(1e-9));

    const Eigen::VectorXd ov_top = exact_overlaps(sys, top[0]);
    CHECK(ov_top[0] == doctest::Approx(rec.column_overlaps_sq[0]).epsilon(1e-7));
    const Eigen::VectorXd ov_bot = exact_overlaps(sys, bot[0]);
    CHECK(ov_bot[1] == doctest::Approx(rec.column_overlaps_sq[1]).epsilon(1e-7));
  }
}

TEST_CASE("one large wigner trial sits near the predicted outlier") {
  TrialRng rng(5100, 0);
  const auto x = sample_ensemble<double>(EnsembleSpec::goe(1000, 1.0), rng);
  const SpikeSpec spikes({2.0});
  const auto d = deform<double>(x, spikes, PerturbationModel::Additive, rng);
  const auto rec = spectrum_and_overlaps<double>(
      d, spikes, PerturbationModel::Additive, 1, 1);
  CHECK(rec.top_eigenvalues[0] == doctest::Approx(2.5).epsilon(0.06));
  CHECK(rec.overlaps_sq[0] == doctest::Approx(0.75).epsilon(0.15));
}

TEST_CASE("group overlaps pool repeated thetas") {
  // Two spikes with the same theta: the reported overlap is the projection
  // onto the whole two-dimensional frame block, which for X = 0 is exactly 1
  // for both top eigenvectors.
  TrialRng rng(6100, 0);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(16, 16);
  const SpikeSpec spikes({4.0, 4.0});
  const auto d = deform<double>(x, spikes, PerturbationModel::Additive, rng);
  const auto rec = spectrum_and_overlaps<double>(
      d, spikes, PerturbationModel::Additive, 2, 0);
  CHECK(rec.top_eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rec.top_eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rec.overlaps_sq[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(rec.overlaps_sq[1] == doctest::Approx(1.0).epsilon(1e-10));
  // Per-column overlaps pair column j with spike j's eigenvector; inside a
  // degenerate block they are arbitrary rotations, but stay probabilities.
  for (double o : rec.column_overlaps_sq) {
    CHECK(o >= 0.0);
    CHECK(o <= 1.0 + 1e-12);
  }
}

TEST_CASE("weighted measures from eigenvector coefficients") {
  TrialRng rng(7100, 0);
  const auto x = sample_ensemble<double>(EnsembleSpec::goe(40, 1.0), rng);
  auto es = full_spectrum<double>(x);
  const auto u = haar_frame<double>(40, 2, rng);
  const Eigen::MatrixXcd coeffs = (es.vectors.transpose() * u).cast<cd>();

  const auto diag = weighted_measure(coeffs, es.values, 0, 0);
  CHECK(diag.moment(0).real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(diag.moment(0).imag() == doctest::Approx(0.0));
  // First moment of mu_{0,0} is <u_0, X u_0>.
  const double quad = u.col(0).transpose() * x * u.col(0);
  CHECK(diag.moment(1).real() == doctest::Approx(quad).epsilon(1e-10));

  // Off-diagonal: zeroth moment is <u_0, u_1> = 0, total variation <= 1.
  const auto off = weighted_measure(coeffs, es.values, 0, 1);
  CHECK(std::abs(off.moment(0)) < 1e-10);
  CHECK(off.total_variation() <= 1.0 + 1e-10);
  CHECK(std::abs(off.moment(1)) <=
        off.total_variation() * es.values.cwiseAbs().maxCoeff() + 1e-12);
}

TEST_CASE("trials are bit-reproducible") {
  const SpikeSpec spikes({2.0});
  auto run = [&](std::uint64_t seed, std::uint64_t trial) {
    TrialRng rng(seed, trial);
    const auto x = sample_ensemble<double>(EnsembleSpec::goe(60, 1.0), rng);
    const auto d = deform<double>(x, spikes, PerturbationModel::Additive, rng);
    return spectrum_and_overlaps<double>(d, spikes,
                                         PerturbationModel::Additive, 2, 2);
  };
  const auto a = run(9000, 3), b = run(9000, 3), c = run(9000, 4);
  CHECK(a.top_eigenvalues == b.top_eigenvalues);
  CHECK(a.overlaps_sq == b.overlaps_sq);
  CHECK(a.bottom_eigenvalues == b.bottom_eigenvalues);
  CHECK(a.top_eigenvalues != c.top_eigenvalues);
}
