#include "easlab/eval/ttest.hpp"

#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "easlab/error.hpp"

namespace easlab::eval {

double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("degrees of freedom must be positive");
  if (std::isnan(t)) throw InvalidArgument("t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2); written with ibeta/ibetac to
  // keep precision on both sides of zero.
  const double x = df / (df + t * t);
  const double two_tail = boost::math::ibeta(0.5 * df, 0.5, x);
  return t >= 0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
}

TTestResult paired_t_test_one_tailed(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidArgument("paired samples differ in length");
  if (a.size() < 2) throw InvalidArgument("paired t-test needs at least two pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += b[i] - a[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = b[i] - a[i] - mean;
    ss += d * d;
  }
  if (!std::isfinite(ss) || !std::isfinite(mean)) throw InvalidArgument("non-finite score");
  if (ss == 0.0) throw InvalidArgument("differences have zero variance");
  const double sd = std::sqrt(ss / (n - 1.0));
  TTestResult r;
  r.n = static_cast<int>(a.size());
  r.degrees_of_freedom = r.n - 1;
  r.mean_difference = mean;
  r.t_statistic = mean / (sd / std::sqrt(n));
  r.p_value = student_t_upper_tail(r.t_statistic, r.degrees_of_freedom);
  return r;
}

}  // namespace easlab::eval
