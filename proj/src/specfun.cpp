#include "betasched/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "betasched/errors.hpp"

namespace betasched {

namespace {

constexpr int kMaxContinuedFractionTerms = 1000;
constexpr int kMaxInverseIterations = 200;
constexpr double kTiny = 1e-300;

// Bernoulli-number coefficients B_2k / (2k (2k - 1)) of the Stirling series.
constexpr std::array<long double, 8> kStirling = {
    1.0L / 12.0L,       -1.0L / 360.0L,     1.0L / 1260.0L,
    -1.0L / 1680.0L,    1.0L / 1188.0L,     -691.0L / 360360.0L,
    1.0L / 156.0L,      -3617.0L / 122400.0L};

long double stirling_ln_gamma(long double z) {
  const long double half_ln_two_pi =
      0.918938533204672741780329736405617639861L;
  const long double inv = 1.0L / z;
  const long double inv2 = inv * inv;
  long double series = 0.0L;
  long double power = inv;
  for (long double c : kStirling) {
    series += c * power;
    power *= inv2;
  }
  return (z - 0.5L) * std::log(z) - z + half_ln_two_pi + series;
}

std::string describe(const BetaParams &p) {
  return "Beta(" + std::to_string(p.alpha()) + ", " + std::to_string(p.beta()) +
         ")";
}

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double incomplete_beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxContinuedFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) <= std::numeric_limits<double>::epsilon()) {
      return h;
    }
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge");
}

// Initial guess for the quantile: a Cornish-Fisher style normal
// approximation when both shapes are >= 1, otherwise the leading term of the
// tail expansion on whichever side holds the requested mass.
double initial_quantile_guess(double prob, double a, double b) {
  double x;
  if (a >= 1.0 && b >= 1.0) {
    const double pp = prob < 0.5 ? prob : 1.0 - prob;
    const double t = std::sqrt(-2.0 * std::log(pp));
    double z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
    if (prob < 0.5) z = -z;
    const double al = (z * z - 3.0) / 6.0;
    const double h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
    const double w = z * std::sqrt(al + h) / h -
                     (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) *
                         (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
    x = a / (a + b * std::exp(2.0 * w));
  } else {
    const double lna = std::log(a / (a + b));
    const double lnb = std::log(b / (a + b));
    const double t = std::exp(a * lna) / a;
    const double u = std::exp(b * lnb) / b;
    const double w = t + u;
    if (prob < t / w) {
      x = std::pow(a * w * prob, 1.0 / a);
    } else {
      x = 1.0 - std::pow(b * w * (1.0 - prob), 1.0 / b);
    }
  }
  if (!(x > 0.0 && x < 1.0)) x = 0.5;
  return x;
}

// Bisection point inside (lo, hi). Brackets spanning several orders of
// magnitude next to an endpoint are split geometrically so that quantiles
// far out in a tail are reached in a bounded number of steps.
double split_bracket(double lo, double hi) {
  double mid;
  if (lo == 0.0) {
    mid = hi < 0.5 ? hi * hi : 0.5 * hi;
    if (!(mid > 0.0)) mid = 0.5 * hi;
  } else if (hi == 1.0) {
    const double d = 1.0 - lo;
    mid = d < 0.5 ? 1.0 - d * d : 1.0 - 0.5 * d;
  } else if (hi < 0.5 && hi > 8.0 * lo) {
    mid = std::sqrt(lo) * std::sqrt(hi);
  } else if (lo > 0.5 && (1.0 - lo) > 8.0 * (1.0 - hi)) {
    mid = 1.0 - std::sqrt(1.0 - lo) * std::sqrt(1.0 - hi);
  } else {
    mid = lo + 0.5 * (hi - lo);
  }
  if (!(mid > lo && mid < hi)) mid = lo + 0.5 * (hi - lo);
  return mid;
}

} // namespace

BetaParams::BetaParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!(std::isfinite(alpha) && alpha > 0.0) ||
      !(std::isfinite(beta) && beta > 0.0)) {
    throw DomainError("Beta shape parameters must be positive and finite, got (" +
                      std::to_string(alpha) + ", " + std::to_string(beta) + ")");
  }
}

double ln_gamma(double x) {
  if (!(std::isfinite(x) && x > 0.0)) {
    throw DomainError("ln_gamma requires a positive finite argument");
  }
  // Shift up with the recurrence until Stirling's series is accurate to
  // extended precision, then undo the shift.
  long double z = x;
  long double product = 1.0L;
  while (z < 10.0L) {
    product *= z;
    z += 1.0L;
  }
  return static_cast<double>(stirling_ln_gamma(z) - std::log(product));
}

double ln_beta(double a, double b) {
  return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
}

double beta_pdf(double x, const BetaParams &p) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("beta_pdf requires x in [0, 1]");
  }
  const double a = p.alpha();
  const double b = p.beta();
  if (x == 0.0) {
    if (a < 1.0) return std::numeric_limits<double>::infinity();
    if (a > 1.0) return 0.0;
    return std::exp(-ln_beta(a, b));
  }
  if (x == 1.0) {
    if (b < 1.0) return std::numeric_limits<double>::infinity();
    if (b > 1.0) return 0.0;
    return std::exp(-ln_beta(a, b));
  }
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
                  ln_beta(a, b));
}

double beta_cdf(double x, const BetaParams &p) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("beta_cdf requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = p.alpha();
  const double b = p.beta();
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - ln_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::clamp(front * incomplete_beta_fraction(a, b, x) / a, 0.0, 1.0);
  }
  return std::clamp(1.0 - front * incomplete_beta_fraction(b, a, 1.0 - x) / b,
                    0.0, 1.0);
}

double beta_inv_cdf(double prob, const BetaParams &p) {
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw DomainError("beta_inv_cdf requires a probability in [0, 1]");
  }
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return 1.0;

  const double a = p.alpha();
  const double b = p.beta();
  if (a == 1.0 && b == 1.0) return prob;
  if (a == 1.0) return -std::expm1(std::log1p(-prob) / b);
  if (b == 1.0) return std::exp(std::log(prob) / a);
  if (a == b && prob == 0.5) return 0.5;

  constexpr double kResidualTarget = 1e-14;
  constexpr double kResidualContract = 1e-10;
  const double eps = std::numeric_limits<double>::epsilon();

  double lo = 0.0;
  double hi = 1.0;
  double x = initial_quantile_guess(prob, a, b);
  double prev_residual = std::numeric_limits<double>::infinity();
  double best_x = x;
  double best_residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < kMaxInverseIterations; ++iter) {
    const double f = beta_cdf(x, p) - prob;
    const double residual = std::fabs(f);
    if (residual < best_residual) {
      best_residual = residual;
      best_x = x;
    }
    if (residual <= kResidualTarget) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }

    double next = std::numeric_limits<double>::quiet_NaN();
    const double density = beta_pdf(x, p);
    if (std::isfinite(density) && density > 0.0 && residual < prev_residual) {
      next = x - f / density;
    }
    if (!(next > lo && next < hi)) next = split_bracket(lo, hi);
    prev_residual = residual;

    // A vanishing Newton correction far from the target only means the
    // density is huge here; keep shrinking the bracket instead.
    if (std::fabs(next - x) <= 2.0 * eps * x && residual > kResidualContract) {
      next = split_bracket(lo, hi);
    }
    if (std::fabs(next - x) <= 2.0 * eps * x && best_residual <= kResidualContract) {
      return best_x;
    }

    // lo and hi are adjacent doubles: the quantile is not representable, so
    // return whichever neighbour is closer in probability.
    if (!(next > lo && next < hi)) {
      const double r_lo = std::fabs(beta_cdf(lo, p) - prob);
      const double r_hi = std::fabs(beta_cdf(hi, p) - prob);
      double pick = r_lo <= r_hi ? lo : hi;
      if (best_residual < std::min(r_lo, r_hi)) pick = best_x;
      return pick;
    }
    x = next;
  }
  throw ConvergenceError("beta_inv_cdf did not converge for " + describe(p));
}

} // namespace betasched
