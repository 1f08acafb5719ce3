#include "convergelab/stats.hpp"

#include <cmath>
#include <limits>

namespace convergelab {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz method.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3.0e-16;
  constexpr double kFpMin = 1.0e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw StatsError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw StatsError("beta parameters must be positive");
  if (x < 0.0 || x > 1.0) throw StatsError("beta argument outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log1p(-x);
  double bt = std::exp(ln_bt);
  // symmetry switch keeps the continued fraction in its fast-converging zone
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return bt * betacf(a, b, x) / a;
  }
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw StatsError("degrees of freedom must be positive");
  if (std::isnan(t)) throw StatsError("t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  double x = df / (df + t * t);
  return regularized_incomplete_beta(df / 2.0, 0.5, x);
}

PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("paired samples differ in length");
  std::size_t n = a.size();
  if (n < 2) throw StatsError("paired t test needs at least 2 pairs");

  double mean_a = 0.0, mean_b = 0.0, mean_d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_a += a[i];
    mean_b += b[i];
    mean_d += a[i] - b[i];
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  mean_d /= static_cast<double>(n);

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = (a[i] - b[i]) - mean_d;
    ss += d * d;
  }
  double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedTestResult r;
  r.n = n;
  r.mean_a = mean_a;
  r.mean_b = mean_b;
  r.df = n - 1;
  if (sd == 0.0) {
    // zero variance in the differences: identical samples test as t=0, p=1,
    // a constant shift as an unambiguous effect
    r.t_stat = mean_d == 0.0 ? 0.0
                             : (mean_d > 0.0 ? 1.0 : -1.0) *
                                   std::numeric_limits<double>::infinity();
    r.p_value = mean_d == 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.t_stat = mean_d / (sd / std::sqrt(static_cast<double>(n)));
  r.p_value = student_t_two_sided_p(r.t_stat, static_cast<double>(r.df));
  return r;
}

CorrelationResult size_correlation(std::span<const std::pair<double, double>> points) {
  std::size_t n = points.size();
  if (n < 3) throw StatsError("size correlation needs at least 3 points");

  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    double dx = x - mx;
    double dy = y - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw StatsError("size correlation undefined for a constant sample");
  }

  CorrelationResult r;
  r.n = n;
  r.rho = sxy / std::sqrt(sxx * syy);
  double r2 = r.rho * r.rho;
  if (r2 >= 1.0) {
    r.p_value = 0.0;
  } else {
    double df = static_cast<double>(n - 2);
    double t = r.rho * std::sqrt(df / (1.0 - r2));
    r.p_value = student_t_two_sided_p(t, df);
  }
  return r;
}

}  // namespace convergelab
