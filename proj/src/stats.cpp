#include "kode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kode/errors.hpp"
#include "kode/rng.hpp"

namespace kode {

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile_linear: empty sample");
  if (p < 0.0 || p > 1.0) throw ParameterError("quantile_linear: p outside [0,1]");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<long>(values.size());
  const double h = static_cast<double>(n - 1) * p;
  const long lo = static_cast<long>(std::floor(h));
  const long hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BoxplotStats boxplot_stats(const std::vector<double>& samples) {
  if (samples.empty()) throw InputError("boxplot_stats: empty sample");
  BoxplotStats s;
  s.median = quantile_linear(samples, 0.5);
  s.q1 = quantile_linear(samples, 0.25);
  s.q3 = quantile_linear(samples, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = std::numeric_limits<double>::infinity();
  s.whisker_high = -std::numeric_limits<double>::infinity();
  for (double v : samples) {
    if (v < lo_fence || v > hi_fence) {
      ++s.outliers;
      continue;
    }
    s.whisker_low = std::min(s.whisker_low, v);
    s.whisker_high = std::max(s.whisker_high, v);
  }
  if (s.outliers == static_cast<long>(samples.size())) {
    // Degenerate only if every sample is an outlier, which cannot happen
    // (q1 and q3 always lie inside the fences), but keep the fields sane.
    s.whisker_low = s.q1;
    s.whisker_high = s.q3;
  }
  return s;
}

namespace {

// Continued fraction for the incomplete beta function, modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr int max_iter = 300;
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

double pearson_r_only(const std::vector<double>& x,
                      const std::vector<double>& y) {
  const auto m = static_cast<long>(x.size());
  double mx = 0, my = 0;
  for (long i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0, syy = 0, sxy = 0;
  for (long i = 0; i < m; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw InputError("pearson_r: zero variance, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw ParameterError("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

PearsonResult pearson_r(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("pearson_r: length mismatch");
  if (x.size() < 3) throw InputError("pearson_r: need at least 3 samples");
  PearsonResult out;
  out.m = static_cast<long>(x.size());
  out.r = pearson_r_only(x, y);
  const double df = static_cast<double>(out.m - 2);
  if (std::abs(out.r) >= 1.0) {
    out.p_value = 0.0;
  } else {
    const double t2 = out.r * out.r * df / (1.0 - out.r * out.r);
    out.p_value = incomplete_beta(0.5 * df, 0.5, df / (df + t2));
  }
  return out;
}

PearsonResult pearson_r_permutation(const std::vector<double>& x,
                                    const std::vector<double>& y,
                                    long permutations, std::uint64_t seed) {
  if (x.size() != y.size()) throw DimensionError("pearson_r: length mismatch");
  if (x.size() < 3) throw InputError("pearson_r: need at least 3 samples");
  if (permutations < 1) throw ParameterError("pearson_r: permutations < 1");
  PearsonResult out;
  out.m = static_cast<long>(x.size());
  out.r = pearson_r_only(x, y);
  Rng rng(mix_seed({seed, stream::permutation}));
  std::vector<double> shuffled = y;
  long hits = 0;
  for (long p = 0; p < permutations; ++p) {
    for (long i = static_cast<long>(shuffled.size()) - 1; i > 0; --i) {
      const int j = rng.next_index(static_cast<int>(i + 1));
      std::swap(shuffled[i], shuffled[j]);
    }
    if (std::abs(pearson_r_only(x, shuffled)) >= std::abs(out.r)) ++hits;
  }
  out.p_value = static_cast<double>(hits + 1) /
                static_cast<double>(permutations + 1);
  return out;
}

}  // namespace kode
