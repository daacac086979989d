#include "spikelab/transforms.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spikelab {

namespace {

using cd = std::complex<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();

// sqrt(z^2 - q) with the branch that behaves like z at infinity; the branch
// cut is exactly the real segment [-sqrt(q), sqrt(q)].
cd edge_sqrt(cd z, double q) { return z * std::sqrt(1.0 - q / (z * z)); }

cd sc_G(double sigma, cd z, int order) {
  const double s2 = sigma * sigma;
  const cd s = edge_sqrt(z, 4.0 * s2);
  if (order == 0) return (z - s) / (2.0 * s2);
  return (1.0 - z / s) / (2.0 * s2);
}

cd mp_G(double c, cd z, int order) {
  const cd w = z - (1.0 + c);
  const cd s = edge_sqrt(w, 4.0 * c);
  if (order == 0) return (z + c - 1.0 - s) / (2.0 * c * z);
  return ((1.0 - w / s) * z - (z + c - 1.0 - s)) / (2.0 * c * z * z);
}

cd mp_T(double c, cd z, int order) {
  const cd w = z - (1.0 + c);
  const cd s = edge_sqrt(w, 4.0 * c);
  if (order == 0) return (z - c - 1.0 - s) / (2.0 * c);
  return (1.0 - w / s) / (2.0 * c);
}

void check_domain(const SpectralMeasure& mu, cd z) {
  if (z.imag() == 0.0) {
    if (mu.in_support(z.real())) throw std::domain_error("z inside support");
    return;
  }
  for (double a : mu.atoms())
    if (std::abs(z - cd(a, 0.0)) < 1e-12)
      throw std::domain_error("z too close to an atom");
}

// Generic evaluation by atom sums plus quadrature over the density part.
// tkernel selects t/(z-t) in place of 1/(z-t).
cd generic_transform(const SpectralMeasure& mu, cd z, int order,
                     bool tkernel) {
  auto kernel = [&](double t) -> cd {
    const cd d = z - t;
    cd k = (order == 0) ? 1.0 / d : -1.0 / (d * d);
    return tkernel ? t * k : k;
  };
  cd total = 0.0;
  const auto& atoms = mu.atoms();
  const auto& weights = mu.atom_weights();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    total += weights[i] * kernel(atoms[i]);
  if (mu.atom_at_zero_weight() > 0.0 && !tkernel)
    total += mu.atom_at_zero_weight() * kernel(0.0);
  if (mu.has_density()) {
    const double re = mu.integrate_density(
        [&](double t) { return kernel(t).real(); });
    double im = 0.0;
    if (z.imag() != 0.0)
      im = mu.integrate_density([&](double t) { return kernel(t).imag(); });
    total += cd(re, im);
  }
  return total;
}

bool is_delta_zero(const SpectralMeasure& mu) {
  return mu.kind() == MeasureKind::Atomic && mu.atoms().size() == 1 &&
         mu.atoms()[0] == 0.0;
}

}  // namespace

std::complex<double> cauchy_transform(const SpectralMeasure& mu, cd z,
                                      int order) {
  if (order != 0 && order != 1)
    throw std::invalid_argument("order must be 0 or 1");
  check_domain(mu, z);
  switch (mu.kind()) {
    case MeasureKind::Semicircle:
      return sc_G(mu.family_param(), z, order);
    case MeasureKind::MarchenkoPastur:
      return mp_G(mu.family_param(), z, order);
    default:
      return generic_transform(mu, z, order, false);
  }
}

std::complex<double> t_transform(const SpectralMeasure& mu, cd z, int order) {
  if (order != 0 && order != 1)
    throw std::invalid_argument("order must be 0 or 1");
  if (!mu.nonnegative_support())
    throw std::domain_error("T-transform requires support in [0, inf)");
  if (is_delta_zero(mu))
    throw std::domain_error("T-transform undefined for delta_0");
  check_domain(mu, z);
  if (mu.kind() == MeasureKind::MarchenkoPastur)
    return mp_T(mu.family_param(), z, order);
  return generic_transform(mu, z, order, true);
}

double cauchy_transform_real(const SpectralMeasure& mu, double z, int order) {
  return cauchy_transform(mu, cd(z, 0.0), order).real();
}

double t_transform_real(const SpectralMeasure& mu, double z, int order) {
  return t_transform(mu, cd(z, 0.0), order).real();
}

namespace {

struct EdgeInfo {
  double position;
  bool has_atom;        // an atom sits exactly at the edge
  bool density_touches; // the density support reaches the edge
  double alpha;         // edge exponent (valid when density_touches)
};

EdgeInfo edge_info(const SpectralMeasure& mu, bool upper) {
  const auto [a, b] = mu.support_bounds();
  EdgeInfo e{};
  e.position = upper ? b : a;
  const auto& atoms = mu.atoms();
  e.has_atom = (!atoms.empty() &&
                (upper ? atoms.back() : atoms.front()) == e.position) ||
               (mu.atom_at_zero_weight() > 0.0 && e.position == 0.0);
  if (mu.has_density()) {
    const auto [dlo, dhi] = mu.density_bounds();
    e.density_touches = upper ? (dhi == e.position) : (dlo == e.position);
    e.alpha = upper ? mu.edge_exponent_hi() : mu.edge_exponent_lo();
  }
  return e;
}

// Finite edge value of G or G' computed with the singularity-absorbing
// substitution at the relevant edge.
double finite_edge_integral(const SpectralMeasure& mu, double z, bool upper,
                            int order, bool tkernel, double extra) {
  auto kern = [&](double t, double zmt) {
    const double k = (order == 0) ? 1.0 / zmt : -1.0 / (zmt * zmt);
    return tkernel ? t * k : k;
  };
  double total = 0.0;
  const auto& atoms = mu.atoms();
  const auto& weights = mu.atom_weights();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    total += weights[i] * kern(atoms[i], z - atoms[i]);
  // The t-kernel vanishes at t = 0 for both orders, so the atom at zero only
  // contributes to the plain kernel.
  if (mu.atom_at_zero_weight() > 0.0 && !tkernel)
    total += mu.atom_at_zero_weight() * kern(0.0, z);
  if (mu.has_density()) {
    const auto [dlo, dhi] = mu.density_bounds();
    total += mu.integrate_density_edge(
        [&, dlo = dlo, dhi = dhi](double t, double da, double db) {
          // z - t taken from the exact edge distance when z sits at a
          // density edge; the direct difference loses all digits there.
          double zmt;
          if (z == dhi)
            zmt = db;
          else if (z == dlo)
            zmt = -da;
          else
            zmt = z - t;
          return kern(t, zmt);
        },
        upper ? 0.0 : extra, upper ? extra : 0.0);
  }
  return total;
}

TransformProfile compute_profile(const SpectralMeasure& mu) {
  TransformProfile p{};
  const EdgeInfo lo = edge_info(mu, false);
  const EdgeInfo hi = edge_info(mu, true);

  // Cauchy transform limits. An atom at the edge or a non-positive edge
  // exponent makes the limit infinite; the classification comes from the
  // declared exponent, never from numerical extrapolation.
  if (hi.has_atom || (hi.density_touches && hi.alpha <= 0.0))
    p.g_at_b_plus = kInf;
  else
    p.g_at_b_plus =
        finite_edge_integral(mu, hi.position, true, 0, false, -1.0);
  if (lo.has_atom || (lo.density_touches && lo.alpha <= 0.0))
    p.g_at_a_minus = -kInf;
  else
    p.g_at_a_minus =
        finite_edge_integral(mu, lo.position, false, 0, false, -1.0);

  if (hi.has_atom || (hi.density_touches && hi.alpha <= 1.0))
    p.g_prime_at_b_plus = -kInf;
  else
    p.g_prime_at_b_plus =
        finite_edge_integral(mu, hi.position, true, 1, false, -2.0);
  if (lo.has_atom || (lo.density_touches && lo.alpha <= 1.0))
    p.g_prime_at_a_minus = -kInf;
  else
    p.g_prime_at_a_minus =
        finite_edge_integral(mu, lo.position, false, 1, false, -2.0);

  if (!mu.nonnegative_support() || is_delta_zero(mu)) return p;

  // T-transform limits. The kernel t/(z-t) is regular at an edge sitting at
  // zero (the numerator cancels one power), so the zero edge needs its own
  // rules: the value is always finite there and the derivative is finite
  // unless the density touches zero with exponent <= 0.
  if (hi.has_atom || (hi.density_touches && hi.alpha <= 0.0))
    p.t_at_b_plus = kInf;
  else
    p.t_at_b_plus = finite_edge_integral(mu, hi.position, true, 0, true, -1.0);
  if (hi.has_atom || (hi.density_touches && hi.alpha <= 1.0))
    p.t_prime_at_b_plus = -kInf;
  else
    p.t_prime_at_b_plus =
        finite_edge_integral(mu, hi.position, true, 1, true, -2.0);

  if (lo.position == 0.0) {
    p.t_at_a_minus = finite_edge_integral(mu, 0.0, false, 0, true, 0.0);
    if (lo.density_touches && lo.alpha <= 0.0)
      p.t_prime_at_a_minus = -kInf;
    else
      p.t_prime_at_a_minus =
          finite_edge_integral(mu, 0.0, false, 1, true,
                               lo.density_touches ? -1.0 : 0.0);
  } else {
    if (lo.has_atom || (lo.density_touches && lo.alpha <= 0.0))
      p.t_at_a_minus = -kInf;
    else
      p.t_at_a_minus =
          finite_edge_integral(mu, lo.position, false, 0, true, -1.0);
    if (lo.has_atom || (lo.density_touches && lo.alpha <= 1.0))
      p.t_prime_at_a_minus = -kInf;
    else
      p.t_prime_at_a_minus =
          finite_edge_integral(mu, lo.position, false, 1, true, -2.0);
  }
  return p;
}

}  // namespace

const TransformProfile& edge_limits(const SpectralMeasure& mu) {
  auto& slot = mu.cache_slot();
  std::call_once(slot.once, [&] {
    slot.value = std::make_shared<TransformProfile>(compute_profile(mu));
  });
  return *static_cast<const TransformProfile*>(slot.value.get());
}

namespace {

double eval_real(const SpectralMeasure& mu, TransformKind which, double z) {
  return which == TransformKind::Cauchy ? cauchy_transform_real(mu, z)
                                        : t_transform_real(mu, z);
}

// Bisection on a strictly decreasing function: f(zlo) > w > f(zhi).
double bisect_decreasing(const SpectralMeasure& mu, TransformKind which,
                         double w, double zlo, double zhi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (zlo + zhi);
    if (mid == zlo || mid == zhi) break;
    if (eval_real(mu, which, mid) > w)
      zlo = mid;
    else
      zhi = mid;
  }
  return 0.5 * (zlo + zhi);
}

}  // namespace

double invert_transform(const SpectralMeasure& mu, double w,
                        TransformKind which, BranchSide side) {
  const auto [a, b] = mu.support_bounds();
  const double scale = b - a + 1.0;
  const TransformProfile& prof = edge_limits(mu);

  if (which == TransformKind::T && !prof.t_at_b_plus.has_value())
    throw std::domain_error("T-transform undefined for this measure");

  if (side.kind == BranchSide::AboveB) {
    const double limit = which == TransformKind::Cauchy
                             ? prof.g_at_b_plus
                             : prof.t_at_b_plus.value();
    if (!(w > 0.0 && w < limit))
      throw std::out_of_range("w outside branch image (0, transform(b+))");
    double off = 1e-9 * scale;
    while (eval_real(mu, which, b + off) <= w) {
      off *= 0.5;
      // w numerically at or beyond the edge limit (an exactly-critical
      // spike): stop before z enters the support tolerance zone.
      if (off < 1e-11 * scale)
        throw std::out_of_range("w numerically outside branch image");
    }
    double grow = off;
    while (eval_real(mu, which, b + grow) > w) {
      grow *= 2.0;
      if (grow > 1e12 * scale)
        throw std::runtime_error("failed to bracket inverse at infinity");
    }
    return bisect_decreasing(mu, which, w, b + off, b + grow);
  }

  if (side.kind == BranchSide::BelowA) {
    const double limit = which == TransformKind::Cauchy
                             ? prof.g_at_a_minus
                             : prof.t_at_a_minus.value();
    if (!(w < 0.0 && w > limit))
      throw std::out_of_range("w outside branch image (transform(a-), 0)");
    double off = 1e-9 * scale;
    while (eval_real(mu, which, a - off) >= w) {
      off *= 0.5;
      if (off < 1e-11 * scale)
        throw std::out_of_range("w numerically outside branch image");
    }
    double grow = off;
    while (eval_real(mu, which, a - grow) < w) {
      grow *= 2.0;
      if (grow > 1e12 * scale)
        throw std::runtime_error("failed to bracket inverse at infinity");
    }
    return bisect_decreasing(mu, which, w, a - grow, a - off);
  }

  // Gap branch.
  const double c = side.gap_lo, d = side.gap_hi;
  if (!(c < d)) throw std::domain_error("gap: need c < d");
  // The gap is the open interval (c, d): its endpoints may sit on the
  // support.
  for (double atom : mu.atoms())
    if (atom > c && atom < d)
      throw std::domain_error("gap intersects support");
  if (mu.atom_at_zero_weight() > 0.0 && c < 0.0 && 0.0 < d)
    throw std::domain_error("gap intersects support");
  if (mu.has_density()) {
    const auto [dlo, dhi] = mu.density_bounds();
    if (std::max(c, dlo) < std::min(d, dhi))
      throw std::domain_error("gap intersects support");
  }
  const double width = d - c;
  double off = 1e-9 * width;
  while (eval_real(mu, which, c + off) <= w) {
    off *= 0.5;
    // Stop before z enters the support tolerance zone at the endpoint.
    if (off < 1e-11 * width)
      throw std::out_of_range("w outside gap branch image");
  }
  double off2 = 1e-9 * width;
  while (eval_real(mu, which, d - off2) >= w) {
    off2 *= 0.5;
    if (off2 < 1e-11 * width)
      throw std::out_of_range("w outside gap branch image");
  }
  return bisect_decreasing(mu, which, w, c + off, d - off2);
}

double r_transform(const SpectralMeasure& mu, double w) {
  if (w == 0.0) throw std::domain_error("R-transform: w must be nonzero");
  const BranchSide side =
      w > 0.0 ? BranchSide::above_b() : BranchSide::below_a();
  return invert_transform(mu, w, TransformKind::Cauchy, side) - 1.0 / w;
}

double s_transform(const SpectralMeasure& mu, double w) {
  if (w == 0.0) throw std::domain_error("S-transform: w must be nonzero");
  const BranchSide side =
      w > 0.0 ? BranchSide::above_b() : BranchSide::below_a();
  const double tinv = invert_transform(mu, w, TransformKind::T, side);
  return (1.0 + w) / (w * tinv);
}

EdgeClassification classify_edge(double alpha) {
  if (alpha <= -1.0)
    throw std::domain_error("edge exponent must exceed -1");
  return {alpha > 0.0, alpha <= 1.0};
}

}  // namespace spikelab
