#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace cexlab {

// Compensated accumulator for long alternating sums.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0, c_ = 0.0;
};

// Root of a continuous sign-changing function on [lo, hi] by bisection.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double tol, int max_iter = 200);

// Maximum of a unimodal function on [lo, hi] by golden-section search.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol, int max_iter = 300);

// Adaptive Simpson quadrature with absolute tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth = 40);

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation (average ranks on ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// All randomized probes draw from this fixed-algorithm generator so a seed
// pins every byte of downstream output.
using Rng = std::mt19937_64;

}  // namespace cexlab
