// stats.hpp -- paired t-test and Pearson correlation with p-values from the
// Student t distribution, evaluated via the regularized incomplete beta
// function.

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace convergelab {

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// I_x(a, b), continued-fraction evaluation. Accurate to ~1e-14 relative.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees
// of freedom: I_{df/(df+t^2)}(df/2, 1/2).
double student_t_two_sided_p(double t, double df);

struct PairedTestResult {
  std::size_t n = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t_stat = 0.0;
  std::size_t df = 0;  // n - 1
  double p_value = 1.0;
};

// Paired t-test on aligned samples. d_i = a_i - b_i, t = mean(d)/(sd(d)/sqrt(n))
// with the n-1 sample standard deviation. All-zero differences give t = 0,
// p = 1. Mismatched lengths or n < 2 raise StatsError.
PairedTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct CorrelationResult {
  std::string metric;
  std::string dataset;
  std::string training;  // "PT" / "IT"
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Pearson correlation of (param_count, score) points with the two-sided p
// from t = rho * sqrt((n-2)/(1-rho^2)), df = n-2. Needs >= 3 points and
// nonzero variance in both coordinates.
CorrelationResult size_correlation(std::span<const std::pair<double, double>> points);

}  // namespace convergelab
