#include "betasched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "betasched/errors.hpp"
#include "betasched/rng.hpp"

namespace betasched {

SampleSet::SampleSet(std::size_t dim, std::vector<double> data)
    : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0) throw DimensionError("sample dimension must be positive");
  if (data_.empty()) throw DomainError("sample set is empty");
  if (data_.size() % dim_ != 0) {
    throw DimensionError("sample buffer is not a whole number of rows");
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvariantError("sample set has non-finite entries");
  }
}

SampleSet SampleSet::from_rows(const std::vector<std::vector<double>> &rows) {
  if (rows.empty()) throw DomainError("sample set is empty");
  const std::size_t dim = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * dim);
  for (const auto &r : rows) {
    if (r.size() != dim) throw DimensionError("samples differ in dimension");
    data.insert(data.end(), r.begin(), r.end());
  }
  return SampleSet(dim, std::move(data));
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("1D Wasserstein needs equal sample counts");
  }
  if (a.empty()) throw DomainError("1D Wasserstein of empty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(sa.size());
}

SlicedWasserstein::SlicedWasserstein(std::size_t dim, std::size_t n_projections,
                                     std::uint64_t seed) {
  if (dim == 0) throw DimensionError("projection dimension must be positive");
  if (n_projections == 0) throw DomainError("need at least one projection");
  auto rng = make_stream(seed, Stream::kProjections);
  std::normal_distribution<double> normal(0.0, 1.0);
  directions_.resize(static_cast<Eigen::Index>(n_projections),
                     static_cast<Eigen::Index>(dim));
  for (Eigen::Index p = 0; p < directions_.rows(); ++p) {
    for (Eigen::Index i = 0; i < directions_.cols(); ++i) {
      directions_(p, i) = normal(rng);
    }
    directions_.row(p) /= directions_.row(p).norm();
  }
}

Eigen::MatrixXd SlicedWasserstein::project_sorted(const SampleSet &s) const {
  if (s.dim() != dim()) {
    throw DimensionError("sample dimension does not match the projections");
  }
  Eigen::MatrixXd proj = s.matrix() * directions_.transpose();
  for (Eigen::Index j = 0; j < proj.cols(); ++j) {
    auto col = proj.col(j);
    std::sort(col.begin(), col.end());
  }
  return proj;
}

double SlicedWasserstein::distance(const Eigen::MatrixXd &sorted_a,
                                   const Eigen::MatrixXd &sorted_b) const {
  if (sorted_a.rows() != sorted_b.rows() || sorted_a.cols() != sorted_b.cols()) {
    throw DimensionError("sliced Wasserstein needs equal sample counts");
  }
  const auto n = static_cast<double>(sorted_a.rows());
  double total = 0.0;
  for (Eigen::Index j = 0; j < sorted_a.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sorted_a.rows(); ++i) {
      const double d = sorted_a(i, j) - sorted_b(i, j);
      acc += d * d;
    }
    total += acc / n;
  }
  return total / static_cast<double>(sorted_a.cols());
}

double SlicedWasserstein::operator()(const SampleSet &a, const SampleSet &b) const {
  if (a.dim() != b.dim()) throw DimensionError("sample sets differ in dimension");
  if (a.size() != b.size()) {
    throw DimensionError("sliced Wasserstein needs equal sample counts");
  }
  return distance(project_sorted(a), project_sorted(b));
}

double sliced_wasserstein(const SampleSet &a, const SampleSet &b,
                          std::size_t n_projections, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw DimensionError("sample sets differ in dimension");
  return SlicedWasserstein(a.dim(), n_projections, seed)(a, b);
}

double gaussian_w2(std::span<const double> mu1, double s1,
                   std::span<const double> mu2, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) {
    throw DomainError("Gaussian standard deviations must be positive");
  }
  if (mu1.size() != mu2.size()) throw DimensionError("mean vectors differ in size");
  double shift = 0.0;
  for (std::size_t i = 0; i < mu1.size(); ++i) {
    const double d = mu1[i] - mu2[i];
    shift += d * d;
  }
  const double ds = s1 - s2;
  return shift + static_cast<double>(mu1.size()) * ds * ds;
}

IsotropicFit fit_isotropic(const SampleSet &s) {
  const std::size_t n = s.size();
  const std::size_t dim = s.dim();
  IsotropicFit fit{std::vector<double>(dim, 0.0), 0.0};
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = s.row(r);
    for (std::size_t i = 0; i < dim; ++i) fit.mean[i] += row[i];
  }
  for (double &m : fit.mean) m /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = s.row(r);
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = row[i] - fit.mean[i];
      var += d * d;
    }
  }
  fit.sigma = std::sqrt(var / static_cast<double>(n * dim));
  return fit;
}

namespace {

// RFC 4180 quoting; provenance strings such as "beta:0.5,0.5" contain commas.
std::string csv_field(const std::string &s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

} // namespace

void write_report_csv(std::ostream &out, std::span<const ReportRow> rows) {
  out.precision(17);
  out << "schedule,provenance,n_steps,metric,value,seed\n";
  for (const auto &r : rows) {
    out << csv_field(r.schedule) << ',' << csv_field(r.provenance) << ','
        << r.n_steps << ',' << csv_field(r.metric) << ',' << r.value << ','
        << r.seed << '\n';
  }
}

} // namespace betasched
