#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "spikelab/measure.hpp"
#include "spikelab/transforms.hpp"

using namespace spikelab;

namespace {

SpectralMeasure semicircle_grid(int samples = 200001) {
  std::vector<double> vals(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = -2.0 + 4.0 * i / (samples - 1);
    const double d = 4.0 - x * x;
    vals[i] = d <= 0.0 ? 0.0 : std::sqrt(d) / (2.0 * M_PI);
  }
  return SpectralMeasure::density_grid(-2.0, 2.0, vals, 0.5, 0.5);
}

// Independent Riemann-sum oracle for G of a sampled density.
double riemann_cauchy(double z, int cells = 1'000'000) {
  double s = 0.0;
  const double h = 4.0 / cells;
  for (int i = 0; i < cells; ++i) {
    const double x = -2.0 + (i + 0.5) * h;
    s += std::sqrt(4.0 - x * x) / (2.0 * M_PI) / (z - x);
  }
  return s * h;
}

}  // namespace

TEST_CASE("cauchy transform values") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  CHECK(cauchy_transform_real(sc, 2.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cauchy_transform_real(sc, -2.5) ==
        doctest::Approx(-0.5).epsilon(1e-12));

  const auto atom = SpectralMeasure::atomic({1.5}, {1.0});
  for (double z : {3.0, -1.0, 10.0})
    CHECK(cauchy_transform_real(atom, z) ==
          doctest::Approx(1.0 / (z - 1.5)).epsilon(1e-14));

  const auto grid = semicircle_grid();
  CHECK(cauchy_transform_real(grid, 3.0) ==
        doctest::Approx(cauchy_transform_real(sc, 3.0)).epsilon(1e-6));
  CHECK(cauchy_transform_real(grid, 3.0) ==
        doctest::Approx(riemann_cauchy(3.0)).epsilon(1e-6));

  // Inside the support is refused.
  CHECK_THROWS_AS(cauchy_transform_real(sc, 1.0), std::domain_error);
  CHECK_THROWS_AS(cauchy_transform(atom, {1.5, 0.0}), std::domain_error);

  // Complex evaluation agrees with the Stieltjes integral of the atom.
  const std::complex<double> z(0.5, 1.0);
  const auto g = cauchy_transform(atom, z);
  const auto expect = 1.0 / (z - 1.5);
  CHECK(std::abs(g - expect) < 1e-12);
}

TEST_CASE("t transform values") {
  const auto mp = SpectralMeasure::marchenko_pastur(0.25);
  CHECK(t_transform_real(mp, 2.5) == doctest::Approx(1.0).epsilon(1e-12));

  const auto atom = SpectralMeasure::atomic({1.0}, {1.0});
  for (double z : {3.0, 10.0})
    CHECK(t_transform_real(atom, z) ==
          doctest::Approx(1.0 / (z - 1.0)).epsilon(1e-14));

  // Negative support is rejected.
  CHECK_THROWS_AS(t_transform_real(SpectralMeasure::semicircle(1.0), 3.0),
                  std::domain_error);
}

TEST_CASE("identity T = zG - 1") {
  std::vector<SpectralMeasure> measures = {
      SpectralMeasure::marchenko_pastur(0.25),
      SpectralMeasure::marchenko_pastur(4.0),
      SpectralMeasure::atomic({0.5, 1.0, 3.0}, {0.25, 0.5, 0.25}),
      SpectralMeasure::smooth_density(
          1.0, 2.0, [](double x) { return 6.0 * (x - 1.0) * (2.0 - x); }, 1.0,
          1.0),
  };
  for (const auto& mu : measures) {
    const double b = mu.support_bounds().second;
    for (int i = 0; i < 20; ++i) {
      const double z = b + 0.1 + 0.3 * i;
      CHECK(t_transform_real(mu, z) ==
            doctest::Approx(z * cauchy_transform_real(mu, z) - 1.0)
                .epsilon(1e-10));
    }
  }
}

TEST_CASE("edge limits") {
  const auto& sc = edge_limits(SpectralMeasure::semicircle(1.0));
  CHECK(sc.g_at_b_plus == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sc.g_at_a_minus == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(std::isinf(sc.g_prime_at_b_plus));
  CHECK(sc.g_prime_at_b_plus < 0.0);

  const auto& mp = edge_limits(SpectralMeasure::marchenko_pastur(0.25));
  CHECK(mp.t_at_b_plus.has_value());
  CHECK(*mp.t_at_b_plus == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(mp.g_at_b_plus ==
        doctest::Approx(1.0 / (0.5 * 1.5)).epsilon(1e-8));  // 1/(sqrt(c)(1+sqrt(c)))

  const auto& at =
      edge_limits(SpectralMeasure::atomic({0.0, 2.0}, {0.5, 0.5}));
  CHECK(std::isinf(at.g_at_b_plus));
  CHECK(std::isinf(at.g_at_a_minus));
  CHECK(std::isinf(*at.t_at_b_plus));
}

TEST_CASE("invert transform") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  CHECK(invert_transform(sc, 0.5, TransformKind::Cauchy,
                         BranchSide::above_b()) ==
        doctest::Approx(2.5).epsilon(1e-10));
  CHECK(invert_transform(sc, -0.5, TransformKind::Cauchy,
                         BranchSide::below_a()) ==
        doctest::Approx(-2.5).epsilon(1e-10));

  const auto mp = SpectralMeasure::marchenko_pastur(0.25);
  CHECK(invert_transform(mp, 1.0, TransformKind::T, BranchSide::above_b()) ==
        doctest::Approx(2.5).epsilon(1e-10));

  const auto at = SpectralMeasure::atomic({0.0, 2.0}, {0.5, 0.5});
  CHECK(invert_transform(at, 1.0, TransformKind::Cauchy,
                         BranchSide::gap(0.0, 2.0)) ==
        doctest::Approx((3.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-10));

  // w outside the branch image is an out_of_range, not a numerical failure.
  CHECK_THROWS_AS(
      invert_transform(sc, 1.5, TransformKind::Cauchy, BranchSide::above_b()),
      std::out_of_range);
  // A "gap" overlapping the support is a domain error.
  CHECK_THROWS_AS(invert_transform(sc, 0.5, TransformKind::Cauchy,
                                   BranchSide::gap(0.0, 3.0)),
                  std::domain_error);
}

TEST_CASE("r and s transforms") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  CHECK(r_transform(sc, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
  for (int i = 1; i <= 9; ++i) {
    const double w = 0.1 * i;
    CHECK(r_transform(sc, w) == doctest::Approx(w).epsilon(1e-9));
  }

  const auto atom = SpectralMeasure::atomic({1.5}, {1.0});
  for (double w : {0.2, 1.0, 5.0})
    CHECK(r_transform(atom, w) == doctest::Approx(1.5).epsilon(1e-9));

  const auto one = SpectralMeasure::atomic({1.0}, {1.0});
  CHECK(s_transform(one, 0.5) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("classify edge") {
  CHECK_THROWS_AS(classify_edge(-1.0), std::domain_error);
  const struct {
    double alpha;
    bool finite, dinf;
  } cases[] = {{-0.5, false, true},
               {0.25, true, true},
               {0.5, true, true},
               {1.0, true, true},
               {2.0, true, false}};
  for (const auto& c : cases) {
    const EdgeClassification e = classify_edge(c.alpha);
    CHECK(e.threshold_finite == c.finite);
    CHECK(e.derivative_infinite == c.dinf);
  }
}

TEST_CASE("monotonicity on the outer branch") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  const auto mp = SpectralMeasure::marchenko_pastur(0.25);
  double prev_g = cauchy_transform_real(sc, 2.0001);
  double prev_t = t_transform_real(mp, 2.2501);
  for (int i = 1; i <= 100; ++i) {
    const double gz = cauchy_transform_real(sc, 2.0001 + 0.05 * i);
    const double tz = t_transform_real(mp, 2.2501 + 0.05 * i);
    CHECK(gz < prev_g);
    CHECK(tz < prev_t);
    prev_g = gz;
    prev_t = tz;
  }
}

TEST_CASE("inversion round trip") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  const auto mp = SpectralMeasure::marchenko_pastur(0.25);
  const auto grid = semicircle_grid();

  auto check_roundtrip = [](const SpectralMeasure& mu, TransformKind kind) {
    const auto& prof = edge_limits(mu);
    const double top = kind == TransformKind::Cauchy ? prof.g_at_b_plus
                                                     : *prof.t_at_b_plus;
    for (int i = 0; i < 50; ++i) {
      // Log grid inside (0, limit).
      const double w = top * std::pow(10.0, -3.0 + 2.95 * i / 49.0);
      const double z = invert_transform(mu, w, kind, BranchSide::above_b());
      const double back = kind == TransformKind::Cauchy
                              ? cauchy_transform_real(mu, z)
                              : t_transform_real(mu, z);
      CHECK(std::abs(back - w) < 1e-10);
    }
  };
  check_roundtrip(sc, TransformKind::Cauchy);
  check_roundtrip(mp, TransformKind::Cauchy);
  check_roundtrip(mp, TransformKind::T);
  check_roundtrip(grid, TransformKind::Cauchy);
}

TEST_CASE("derivatives match finite differences") {
  const auto measures = {SpectralMeasure::semicircle(1.0),
                         SpectralMeasure::marchenko_pastur(0.25),
                         SpectralMeasure::marchenko_pastur(4.0)};
  for (const auto& mu : measures) {
    const double z = mu.support_bounds().second + 0.5;
    const double h = 1e-5;
    {
      const double fd = (cauchy_transform_real(mu, z + h) -
                         cauchy_transform_real(mu, z - h)) /
                        (2.0 * h);
      const double d = cauchy_transform_real(mu, z, 1);
      CHECK(std::abs(d - fd) < 1e-6 * std::abs(d));
    }
    if (mu.nonnegative_support()) {
      const double fd =
          (t_transform_real(mu, z + h) - t_transform_real(mu, z - h)) /
          (2.0 * h);
      const double d = t_transform_real(mu, z, 1);
      CHECK(std::abs(d - fd) < 1e-6 * std::abs(d));
    }
  }
}

TEST_CASE("reality and closed-form vs quadrature branch") {
  const auto sc = SpectralMeasure::semicircle(1.0);
  const auto mp4 = SpectralMeasure::marchenko_pastur(4.0);
  CHECK(cauchy_transform(sc, {3.0, 0.0}).imag() == 0.0);
  CHECK(cauchy_transform(mp4, {10.0, 0.0}).imag() == 0.0);

  // The closed form for Marchenko-Pastur must include the atom at zero for
  // c > 1: compare against direct quadrature plus the atom term.
  for (double z : {10.0, -1.0, 0.5}) {
    const double direct =
        0.75 / z + mp4.integrate_density([&](double t) { return 1.0 / (z - t); });
    CHECK(cauchy_transform_real(mp4, z) ==
          doctest::Approx(direct).epsilon(1e-9));
  }
  // T(0-) for c > 1: the atom contributes nothing to T.
  CHECK(t_transform_real(mp4, 0.5) ==
        doctest::Approx(0.5 * cauchy_transform_real(mp4, 0.5) - 1.0)
            .epsilon(1e-10));
}
