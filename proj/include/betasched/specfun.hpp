#pragma once

// Special functions behind the Beta distribution: log-gamma, the regularized
// incomplete beta function I_x(a, b) and its inverse in x.
//
// Accuracy is specified for shape parameters in [0.05, 50]. All functions are
// pure and thread-safe.

namespace betasched {

/// Shape parameters of a Beta distribution. Both must be positive and finite.
class BetaParams {
public:
  BetaParams(double alpha, double beta);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  bool operator==(const BetaParams &) const = default;

private:
  double alpha_;
  double beta_;
};

/// ln Gamma(x) for x > 0. Absolute error <= 1e-12 on [1e-3, 1e3].
double ln_gamma(double x);

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
double ln_beta(double a, double b);

/// Density of Beta(alpha, beta) at x in [0, 1]. Infinite at an endpoint when
/// the matching shape parameter is below one.
double beta_pdf(double x, const BetaParams &p);

/// Regularized incomplete beta function I_x(alpha, beta), i.e. the Beta CDF.
///
/// Evaluated with the Lentz continued fraction, switching to the complement
/// I_{1-x}(beta, alpha) when x > (alpha + 1) / (alpha + beta + 2) so the
/// fraction always converges quickly. Throws DomainError for x outside [0, 1]
/// and ConvergenceError if the fraction does not settle.
double beta_cdf(double x, const BetaParams &p);

/// Quantile function: returns x with |beta_cdf(x) - prob| <= 1e-10.
///
/// prob = 0 and prob = 1 map to exactly 0 and 1. Closed forms are used when
/// one shape parameter equals one, and for the median of a symmetric
/// distribution. Otherwise Newton's method runs inside a shrinking bracket,
/// falling back to (geometric) bisection whenever a Newton step leaves the
/// bracket or stalls.
///
/// For very small shapes the exact quantile can fall between two adjacent
/// doubles, typically between 1 - 2^-53 and 1. The bracket then collapses and
/// the neighbour closer in probability is returned, so the result is
/// correctly rounded in x even though the 1e-10 residual is out of reach.
/// Throws ConvergenceError after 200 iterations.
double beta_inv_cdf(double prob, const BetaParams &p);

} // namespace betasched
