#include "cuped/stats.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "cuped/errors.hpp"

namespace cuped {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("mean of an empty series");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("sample variance needs at least 2 values");
  const double m = mean(values);
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - m;
    sq[i] = d * d;
  }
  return pairwise_sum(sq) / static_cast<double>(values.size() - 1);
}

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("pearson: series must have equal length >= 2");
  }
  const Eigen::VectorXd xc = x.array() - x.mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return xc.dot(yc) / std::sqrt(sxx * syy);
}

double normal_critical_value(double confidence_level) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw InvalidArgument("confidence level must lie in (0, 1)");
  }
  const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 + confidence_level / 2.0);
}

JackknifeEstimate jackknife_variance_ratio(std::span<const double> numerator,
                                           std::span<const double> denominator) {
  const std::size_t n = numerator.size();
  if (n != denominator.size()) throw InvalidArgument("jackknife: series lengths differ");
  if (n < 3) throw InvalidArgument("jackknife: needs at least 3 replications");

  // Center once so the leave-one-out moment updates stay well conditioned.
  const double ma = mean(numerator);
  const double mb = mean(denominator);
  std::vector<double> a(n), b(n), a2(n), b2(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = numerator[i] - ma;
    b[i] = denominator[i] - mb;
    a2[i] = a[i] * a[i];
    b2[i] = b[i] * b[i];
  }
  const double sa = pairwise_sum(a), sb = pairwise_sum(b);
  const double ssa = pairwise_sum(a2), ssb = pairwise_sum(b2);
  const double nd = static_cast<double>(n);

  const double full = (ssa - sa * sa / nd) / (ssb - sb * sb / nd);
  if (!std::isfinite(full)) throw DegenerateStructure("jackknife: denominator series is constant");

  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ra = sa - a[i], rb = sb - b[i];
    const double va = ssa - a2[i] - ra * ra / (nd - 1.0);
    const double vb = ssb - b2[i] - rb * rb / (nd - 1.0);
    loo[i] = va / vb;
  }
  const double loo_mean = mean(loo);
  for (auto& v : loo) v = (v - loo_mean) * (v - loo_mean);
  const double se = std::sqrt((nd - 1.0) / nd * pairwise_sum(loo));
  return {full, se};
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cuped
