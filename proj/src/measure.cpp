#include "spikelab/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "quadrature.hpp"

namespace spikelab {

namespace {
constexpr int kCdfCells = 4096;
constexpr double kMassTol = 1e-10;
}  // namespace

struct SpectralMeasure::Impl {
  MeasureKind kind;

  // Atomic part (ascending locations).
  std::vector<double> atoms;
  std::vector<double> weights;

  // Density part.
  bool has_density = false;
  std::function<double(double)> density;
  // Optional cancellation-free form f(t, t - dlo, dhi - t) used by the
  // edge-adapted quadrature, where closed-form families can exploit the
  // exactly known edge distances.
  std::function<double(double, double, double)> density_edge;
  double density_scale = 1.0;
  double dlo = 0.0, dhi = 0.0;
  double alpha_lo = 0.0, alpha_hi = 0.0;
  double w0 = 0.0;  // atom at zero carried next to a density

  double sigma = 0.0;  // semicircle
  double c = 0.0;      // marchenko-pastur

  mutable std::once_flag cdf_once;
  mutable std::vector<double> cdf_cum;  // kCdfCells + 1 entries
  mutable CacheSlot slot;

  double f(double t) const { return density_scale * density(t); }

  // Density evaluated with explicit edge distances da = t - dlo and
  // db = dhi - t; falls back to the plain form when no cancellation-free
  // variant was provided.
  double f_edge(double t, double da, double db) const {
    return density_edge ? density_scale * density_edge(t, da, db)
                        : density_scale * density(t);
  }

  double integrate_density_edge(
      const std::function<double(double, double, double)>& g, double extra_lo,
      double extra_hi) const {
    if (!has_density) return 0.0;
    const double mid = 0.5 * (dlo + dhi);
    auto h = [&](double t, double da, double db) {
      return g(t, da, db) * f_edge(t, da, db);
    };
    // Substitution |t - edge| = u^q with q = 2/(1+e) turns an integrand that
    // behaves like (t-edge)^e into one vanishing linearly in u at the edge,
    // with C^1 smoothness; plain quadrature would stall on the power law.
    // The distance |t - edge| = u^q is kept exact so integrands singular at
    // the edge do not lose it to cancellation in t - edge.
    auto edge_half = [&](double edge, double far, double e, bool lower) {
      if (e <= -1.0) throw std::domain_error("divergent edge integral");
      const double q = 2.0 / (1.0 + e);
      if (q == 1.0) {
        auto ht = [&](double t) { return h(t, t - dlo, dhi - t); };
        return edge < far ? quad::adaptive(ht, edge, far)
                          : quad::adaptive(ht, far, edge);
      }
      const double sgn = edge < far ? 1.0 : -1.0;
      const double umax = std::pow(std::abs(far - edge), 1.0 / q);
      auto hu = [&](double u) {
        const double d = std::pow(u, q);  // exact distance from the edge
        if (d == 0.0) return 0.0;  // transformed integrand vanishes there
        const double t = edge + sgn * d;
        const double da = lower ? d : t - dlo;
        const double db = lower ? dhi - t : d;
        return q * std::pow(u, q - 1.0) * h(t, da, db);
      };
      return quad::adaptive(hu, 0.0, umax);
    };
    return edge_half(dlo, mid, alpha_lo + extra_lo, true) +
           edge_half(dhi, mid, alpha_hi + extra_hi, false);
  }

  double integrate_density(const std::function<double(double)>& g,
                           double extra_lo, double extra_hi) const {
    return integrate_density_edge(
        [&](double t, double, double) { return g(t); }, extra_lo, extra_hi);
  }

  const std::vector<double>& cdf_grid() const {
    std::call_once(cdf_once, [this] {
      cdf_cum.assign(kCdfCells + 1, 0.0);
      if (!has_density) return;
      const double h = (dhi - dlo) / kCdfCells;
      auto fd = [this](double t) { return f(t); };
      for (int i = 0; i < kCdfCells; ++i) {
        const double x0 = dlo + i * h, x1 = dlo + (i + 1) * h;
        double cell;
        if (i == 0 && alpha_lo < 0.0) {
          const double q = 2.0 / (1.0 + alpha_lo);
          const double umax = std::pow(h, 1.0 / q);
          cell = quad::gl15(
              [&](double u) {
                return q * std::pow(u, q - 1.0) * f(dlo + std::pow(u, q));
              },
              0.0, umax);
        } else if (i == kCdfCells - 1 && alpha_hi < 0.0) {
          const double q = 2.0 / (1.0 + alpha_hi);
          const double umax = std::pow(h, 1.0 / q);
          cell = quad::gl15(
              [&](double u) {
                return q * std::pow(u, q - 1.0) * f(dhi - std::pow(u, q));
              },
              0.0, umax);
        } else {
          cell = quad::gl15(fd, x0, x1);
        }
        cdf_cum[i + 1] = cdf_cum[i] + cell;
      }
    });
    return cdf_cum;
  }
};

SpectralMeasure::SpectralMeasure(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

SpectralMeasure SpectralMeasure::atomic(std::vector<double> atoms,
                                        std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size())
    throw std::invalid_argument("atomic measure: bad atom/weight lists");
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return atoms[i] < atoms[j]; });
  auto impl = std::make_shared<Impl>();
  impl->kind = MeasureKind::Atomic;
  double mass = 0.0;
  for (std::size_t i : order) {
    if (weights[i] < 0.0)
      throw std::invalid_argument("atomic measure: negative weight");
    impl->atoms.push_back(atoms[i]);
    impl->weights.push_back(weights[i]);
    mass += weights[i];
  }
  if (std::abs(mass - 1.0) > kMassTol)
    throw std::invalid_argument("atomic measure: weights must sum to 1");
  return SpectralMeasure(impl);
}

SpectralMeasure SpectralMeasure::semicircle(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("semicircle: sigma <= 0");
  auto impl = std::make_shared<Impl>();
  impl->kind = MeasureKind::Semicircle;
  impl->sigma = sigma;
  impl->has_density = true;
  impl->dlo = -2.0 * sigma;
  impl->dhi = 2.0 * sigma;
  impl->alpha_lo = impl->alpha_hi = 0.5;
  const double s2 = sigma * sigma;
  impl->density = [s2](double x) {
    const double d = 4.0 * s2 - x * x;
    return d <= 0.0 ? 0.0 : std::sqrt(d) / (2.0 * M_PI * s2);
  };
  // 4s^2 - x^2 = (x + 2s)(2s - x) = da * db, cancellation-free at the edges.
  impl->density_edge = [s2](double, double da, double db) {
    const double d = da * db;
    return d <= 0.0 ? 0.0 : std::sqrt(d) / (2.0 * M_PI * s2);
  };
  return SpectralMeasure(impl);
}

SpectralMeasure SpectralMeasure::marchenko_pastur(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("marchenko_pastur: c <= 0");
  auto impl = std::make_shared<Impl>();
  impl->kind = MeasureKind::MarchenkoPastur;
  impl->c = c;
  impl->has_density = true;
  const double sc = std::sqrt(c);
  impl->dlo = (1.0 - sc) * (1.0 - sc);
  impl->dhi = (1.0 + sc) * (1.0 + sc);
  impl->alpha_lo = (c == 1.0) ? -0.5 : 0.5;
  impl->alpha_hi = 0.5;
  impl->w0 = std::max(0.0, 1.0 - 1.0 / c);
  const double a = impl->dlo, b = impl->dhi;
  impl->density = [a, b, c](double x) {
    const double d = (b - x) * (x - a);
    return (d <= 0.0 || x <= 0.0) ? 0.0 : std::sqrt(d) / (2.0 * M_PI * c * x);
  };
  // (b - x)(x - a) = db * da, cancellation-free at the edges.
  impl->density_edge = [c](double x, double da, double db) {
    const double d = da * db;
    return (d <= 0.0 || x <= 0.0) ? 0.0 : std::sqrt(d) / (2.0 * M_PI * c * x);
  };
  return SpectralMeasure(impl);
}

SpectralMeasure SpectralMeasure::smooth_density(
    double a, double b, std::function<double(double)> density, double alpha_lo,
    double alpha_hi, double atom_at_zero_weight) {
  if (!(a < b)) throw std::invalid_argument("smooth_density: a >= b");
  if (alpha_lo <= -1.0 || alpha_hi <= -1.0)
    throw std::invalid_argument("smooth_density: edge exponent <= -1");
  if (atom_at_zero_weight < 0.0 || atom_at_zero_weight >= 1.0)
    throw std::invalid_argument("smooth_density: atom weight outside [0,1)");
  auto impl = std::make_shared<Impl>();
  impl->kind = MeasureKind::SmoothDensity;
  impl->has_density = true;
  impl->dlo = a;
  impl->dhi = b;
  impl->alpha_lo = alpha_lo;
  impl->alpha_hi = alpha_hi;
  impl->w0 = atom_at_zero_weight;
  impl->density = std::move(density);
  // Normalize the continuous part so total mass is exactly 1; reject inputs
  // that are not close to a probability density to begin with.
  const double mass =
      impl->integrate_density([](double) { return 1.0; }, 0.0, 0.0);
  if (!(mass > 0.0) || std::abs(mass + impl->w0 - 1.0) > 1e-3)
    throw std::invalid_argument("density measure: mass too far from 1");
  impl->density_scale = (1.0 - impl->w0) / mass;
  return SpectralMeasure(impl);
}

SpectralMeasure SpectralMeasure::density_grid(double a, double b,
                                              std::vector<double> samples,
                                              double alpha_lo, double alpha_hi,
                                              double atom_at_zero_weight) {
  if (samples.size() < 2)
    throw std::invalid_argument("density_grid: need at least two samples");
  const double h = (b - a) / static_cast<double>(samples.size() - 1);
  auto grid = std::make_shared<std::vector<double>>(std::move(samples));
  auto f = [a, h, grid](double x) {
    const double s = (x - a) / h;
    const auto n = grid->size();
    if (s <= 0.0) return grid->front();
    if (s >= static_cast<double>(n - 1)) return grid->back();
    const auto i = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(i);
    return (1.0 - frac) * (*grid)[i] + frac * (*grid)[i + 1];
  };
  return smooth_density(a, b, f, alpha_lo, alpha_hi, atom_at_zero_weight);
}

MeasureKind SpectralMeasure::kind() const { return impl_->kind; }

std::pair<double, double> SpectralMeasure::support_bounds() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  if (!impl_->atoms.empty()) {
    lo = std::min(lo, impl_->atoms.front());
    hi = std::max(hi, impl_->atoms.back());
  }
  if (impl_->has_density) {
    lo = std::min(lo, impl_->dlo);
    hi = std::max(hi, impl_->dhi);
  }
  if (impl_->w0 > 0.0) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  return {lo, hi};
}

std::pair<double, double> SpectralMeasure::density_bounds() const {
  if (!impl_->has_density)
    throw std::domain_error("measure has no density part");
  return {impl_->dlo, impl_->dhi};
}

double SpectralMeasure::family_param() const {
  if (impl_->kind == MeasureKind::Semicircle) return impl_->sigma;
  if (impl_->kind == MeasureKind::MarchenkoPastur) return impl_->c;
  throw std::domain_error("family_param: not a named family");
}

bool SpectralMeasure::has_density() const { return impl_->has_density; }

double SpectralMeasure::density_at(double t) const {
  return impl_->has_density ? impl_->f(t) : 0.0;
}

double SpectralMeasure::atom_at_zero_weight() const { return impl_->w0; }
double SpectralMeasure::edge_exponent_lo() const { return impl_->alpha_lo; }
double SpectralMeasure::edge_exponent_hi() const { return impl_->alpha_hi; }
const std::vector<double>& SpectralMeasure::atoms() const {
  return impl_->atoms;
}
const std::vector<double>& SpectralMeasure::atom_weights() const {
  return impl_->weights;
}

bool SpectralMeasure::nonnegative_support() const {
  return support_bounds().first >= 0.0;
}

bool SpectralMeasure::in_support(double x, double tol) const {
  for (double a : impl_->atoms)
    if (std::abs(x - a) < tol) return true;
  if (impl_->w0 > 0.0 && std::abs(x) < tol) return true;
  if (impl_->has_density && x >= impl_->dlo - tol && x <= impl_->dhi + tol)
    return true;
  return false;
}

double SpectralMeasure::integrate(const std::function<double(double)>& g,
                                  double extra_pow_lo,
                                  double extra_pow_hi) const {
  double total = 0.0;
  for (std::size_t i = 0; i < impl_->atoms.size(); ++i)
    total += impl_->weights[i] * g(impl_->atoms[i]);
  if (impl_->w0 > 0.0) total += impl_->w0 * g(0.0);
  total += impl_->integrate_density(g, extra_pow_lo, extra_pow_hi);
  return total;
}

double SpectralMeasure::integrate_density(
    const std::function<double(double)>& g, double extra_pow_lo,
    double extra_pow_hi) const {
  return impl_->integrate_density(g, extra_pow_lo, extra_pow_hi);
}

double SpectralMeasure::integrate_density_edge(
    const std::function<double(double, double, double)>& g,
    double extra_pow_lo, double extra_pow_hi) const {
  return impl_->integrate_density_edge(g, extra_pow_lo, extra_pow_hi);
}

double SpectralMeasure::moment(int k) const {
  if (k < 0 || k > 8)
    throw std::invalid_argument("moment: k must be in [0, 8]");
  return integrate([k](double t) { return std::pow(t, k); });
}

double SpectralMeasure::cdf(double x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < impl_->atoms.size(); ++i)
    if (impl_->atoms[i] <= x) total += impl_->weights[i];
  if (impl_->w0 > 0.0 && x >= 0.0) total += impl_->w0;
  if (impl_->has_density) {
    const auto& cum = impl_->cdf_grid();
    if (x >= impl_->dhi) {
      total += cum.back();
    } else if (x > impl_->dlo) {
      const double s =
          (x - impl_->dlo) / (impl_->dhi - impl_->dlo) * kCdfCells;
      const auto i = static_cast<std::size_t>(s);
      const double frac = s - static_cast<double>(i);
      total += (1.0 - frac) * cum[i] + frac * cum[i + 1];
    }
  }
  return std::min(total, 1.0);
}

double SpectralMeasure::cdf_left(double x) const {
  double total = 0.0;
  for (std::size_t i = 0; i < impl_->atoms.size(); ++i)
    if (impl_->atoms[i] < x) total += impl_->weights[i];
  if (impl_->w0 > 0.0 && x > 0.0) total += impl_->w0;
  if (impl_->has_density) {  // continuous part, no jump
    const auto& cum = impl_->cdf_grid();
    if (x >= impl_->dhi) {
      total += cum.back();
    } else if (x > impl_->dlo) {
      const double s =
          (x - impl_->dlo) / (impl_->dhi - impl_->dlo) * kCdfCells;
      const auto i = static_cast<std::size_t>(s);
      const double frac = s - static_cast<double>(i);
      total += (1.0 - frac) * cum[i] + frac * cum[i + 1];
    }
  }
  return std::min(total, 1.0);
}

double SpectralMeasure::quantile(double p) const {
  p = std::clamp(p, 0.0, 1.0);
  auto [a, b] = support_bounds();
  double lo = a - 1.0, hi = b + 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) >= p)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

SpectralMeasure::CacheSlot& SpectralMeasure::cache_slot() const {
  return impl_->slot;
}

EmpiricalSpectrum::EmpiricalSpectrum(std::vector<double> v)
    : values(std::move(v)) {
  if (values.empty()) throw std::invalid_argument("empty spectrum");
  if (!std::is_sorted(values.begin(), values.end(), std::greater<double>()))
    throw std::invalid_argument("spectrum must be sorted descending");
}

double ks_distance(const EmpiricalSpectrum& empirical,
                   const SpectralMeasure& measure) {
  std::vector<double> xs(empirical.values.rbegin(), empirical.values.rend());
  const double n = static_cast<double>(xs.size());
  std::vector<double> candidates = xs;
  for (double a : measure.atoms()) candidates.push_back(a);
  if (measure.atom_at_zero_weight() > 0.0) candidates.push_back(0.0);
  auto ecdf = [&](double x) {
    return static_cast<double>(
               std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) /
           n;
  };
  auto ecdf_left = [&](double x) {
    return static_cast<double>(
               std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()) /
           n;
  };
  double d = 0.0;
  for (double x : candidates) {
    d = std::max(d, std::abs(ecdf(x) - measure.cdf(x)));
    d = std::max(d, std::abs(ecdf_left(x) - measure.cdf_left(x)));
  }
  return std::min(d, 1.0);
}

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument("measure file: unknown key '" + it.key() +
                                  "'");
  }
}

}  // namespace

SpectralMeasure measure_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_object() || !j.contains("kind"))
    throw std::invalid_argument("measure file: missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "semicircle") {
    check_keys(j, {"kind", "sigma"});
    return SpectralMeasure::semicircle(j.at("sigma").get<double>());
  }
  if (kind == "marchenko_pastur") {
    check_keys(j, {"kind", "c"});
    return SpectralMeasure::marchenko_pastur(j.at("c").get<double>());
  }
  if (kind == "atomic") {
    check_keys(j, {"kind", "atoms", "weights"});
    return SpectralMeasure::atomic(
        j.at("atoms").get<std::vector<double>>(),
        j.at("weights").get<std::vector<double>>());
  }
  if (kind == "density_grid") {
    check_keys(j, {"kind", "support", "values", "edge_exponent_lo",
                   "edge_exponent_hi", "atom_at_zero"});
    const auto support = j.at("support").get<std::vector<double>>();
    if (support.size() != 2)
      throw std::invalid_argument("measure file: support must be [a, b]");
    return SpectralMeasure::density_grid(
        support[0], support[1], j.at("values").get<std::vector<double>>(),
        j.at("edge_exponent_lo").get<double>(),
        j.at("edge_exponent_hi").get<double>(),
        j.value("atom_at_zero", 0.0));
  }
  throw std::invalid_argument("measure file: unknown kind '" + kind + "'");
}

SpectralMeasure measure_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open measure file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return measure_from_json_text(ss.str());
}

}  // namespace spikelab
