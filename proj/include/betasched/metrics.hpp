#pragma once

// Sample-quality metrics. Every distance here is a *squared* 2-Wasserstein
// quantity; no square roots are taken anywhere.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace betasched {

/// Non-empty set of equal-length finite vectors, stored row-major.
class SampleSet {
public:
  SampleSet(std::size_t dim, std::vector<double> data);
  static SampleSet from_rows(const std::vector<std::vector<double>> &rows);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return data_.size() / dim_; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  const std::vector<double> &data() const noexcept { return data_; }

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> matrix() const {
    return {data_.data(), static_cast<Eigen::Index>(size()),
            static_cast<Eigen::Index>(dim_)};
  }

private:
  std::size_t dim_;
  std::vector<double> data_;
};

/// Squared W2 between two equal-size empirical distributions on the line:
/// the mean squared difference of order statistics.
double wasserstein_1d(std::span<const double> a, std::span<const double> b);

/// Random unit directions for slicing, drawn from a stream derived from
/// `seed`. Reusing one instance across comparisons keeps the projections
/// identical, which is what makes orderings between schedules stable.
class SlicedWasserstein {
public:
  SlicedWasserstein(std::size_t dim, std::size_t n_projections, std::uint64_t seed);

  /// Column j holds the sorted projections of all samples onto direction j.
  Eigen::MatrixXd project_sorted(const SampleSet &s) const;

  /// Mean over directions of the squared 1D distance between sorted columns.
  double distance(const Eigen::MatrixXd &sorted_a,
                  const Eigen::MatrixXd &sorted_b) const;

  double operator()(const SampleSet &a, const SampleSet &b) const;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(directions_.cols()); }
  std::size_t n_projections() const noexcept {
    return static_cast<std::size_t>(directions_.rows());
  }

private:
  Eigen::MatrixXd directions_; // n_projections x dim, unit rows
};

double sliced_wasserstein(const SampleSet &a, const SampleSet &b,
                          std::size_t n_projections, std::uint64_t seed);

/// Squared W2 between N(mu1, s1^2 I) and N(mu2, s2^2 I).
double gaussian_w2(std::span<const double> mu1, double s1,
                   std::span<const double> mu2, double s2);

/// Mean vector and pooled per-coordinate standard deviation of a sample set.
struct IsotropicFit {
  std::vector<double> mean;
  double sigma;
};
IsotropicFit fit_isotropic(const SampleSet &s);

struct ReportRow {
  std::string schedule;
  std::string provenance;
  std::int64_t n_steps;
  std::string metric;
  double value;
  std::uint64_t seed;
};

/// `schedule,provenance,n_steps,metric,value,seed`
void write_report_csv(std::ostream &out, std::span<const ReportRow> rows);

} // namespace betasched
