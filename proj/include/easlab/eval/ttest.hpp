#pragma once

#include <vector>

namespace easlab::eval {

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // one-tailed, H1: b > a
  double mean_difference = 0.0;
  int n = 0;
};

// Dependent (matched-pair) one-tailed test on d = b - a.
TTestResult paired_t_test_one_tailed(const std::vector<double>& a, const std::vector<double>& b);

// P(T > t) for Student's t with df degrees of freedom.
double student_t_upper_tail(double t, double df);

}  // namespace easlab::eval
