#include "betasched/spectral.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <ostream>

#include "betasched/errors.hpp"

namespace betasched {

namespace {

bool valid_side(std::size_t n) { return n >= 8 && std::has_single_bit(n); }

// In-place iterative radix-2 FFT (forward, unnormalized).
void fft_inplace(std::vector<std::complex<double>> &a,
                 const std::vector<std::complex<double>> &twiddle) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * twiddle[k * stride];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

std::vector<std::complex<double>> twiddles(std::size_t n) {
  std::vector<std::complex<double>> w(n / 2);
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(n));
  }
  return w;
}

void check_bins(std::size_t n_bins) {
  if (n_bins < 2) throw DomainError("need at least two frequency bins");
}

std::vector<double> bin_edges(std::size_t n_bins) {
  std::vector<double> edges(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    edges[b] = 0.5 * static_cast<double>(b + 1) / static_cast<double>(n_bins);
  }
  return edges;
}

} // namespace

ImageGrid::ImageGrid(std::size_t height, std::size_t width,
                     std::vector<double> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (!valid_side(height_) || !valid_side(width_)) {
    throw DimensionError("image sides must be powers of two >= 8, got " +
                         std::to_string(height_) + "x" + std::to_string(width_));
  }
  if (pixels_.size() != height_ * width_) {
    throw DimensionError("pixel count does not match image shape");
  }
  for (double v : pixels_) {
    if (!std::isfinite(v)) throw InvariantError("image contains non-finite pixels");
  }
}

ImageGrid ImageGrid::from_rgb(std::size_t height, std::size_t width,
                              std::span<const double> rgb) {
  if (rgb.size() != 3 * height * width) {
    throw DimensionError("RGB buffer must hold 3 values per pixel");
  }
  std::vector<double> luma(height * width);
  for (std::size_t i = 0; i < luma.size(); ++i) {
    luma[i] = 0.2126 * rgb[3 * i] + 0.7152 * rgb[3 * i + 1] +
              0.0722 * rgb[3 * i + 2];
  }
  return ImageGrid(height, width, std::move(luma));
}

Spectrum fft2(const ImageGrid &img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  Spectrum s{h, w, std::vector<std::complex<double>>(h * w)};

  const auto row_tw = twiddles(w);
  std::vector<std::complex<double>> line(w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) line[c] = img.at(r, c);
    fft_inplace(line, row_tw);
    std::copy(line.begin(), line.end(), s.values.begin() + r * w);
  }

  const auto col_tw = twiddles(h);
  line.resize(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) line[r] = s.values[r * w + c];
    fft_inplace(line, col_tw);
    for (std::size_t r = 0; r < h; ++r) s.values[r * w + c] = line[r];
  }
  return s;
}

double radial_frequency(std::size_t u, std::size_t v, std::size_t height,
                        std::size_t width) {
  const double fu =
      static_cast<double>(std::min(u, height - u)) / static_cast<double>(height);
  const double fv =
      static_cast<double>(std::min(v, width - v)) / static_cast<double>(width);
  return std::sqrt(fu * fu + fv * fv);
}

std::size_t frequency_bin(double f, std::size_t n_bins) {
  // Right-closed so the on-axis frequency k/H sits in bin k-1 when n_bins = H/2;
  // left-closed bins would leave bin 0 holding nothing but DC.
  const double x = std::ceil(f * 2.0 * static_cast<double>(n_bins));
  if (x <= 1.0) return 0;
  return std::min(static_cast<std::size_t>(x) - 1, n_bins - 1);
}

std::vector<std::size_t> bin_populations(std::size_t height, std::size_t width,
                                         std::size_t n_bins) {
  check_bins(n_bins);
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t u = 0; u < height; ++u) {
    for (std::size_t v = 0; v < width; ++v) {
      if (u == 0 && v == 0) continue;
      ++counts[frequency_bin(radial_frequency(u, v, height, width), n_bins)];
    }
  }
  return counts;
}

SpectralProfile rlm(const ImageGrid &img, std::size_t n_bins) {
  check_bins(n_bins);
  const auto spec = fft2(img);
  const std::size_t h = img.height();
  const std::size_t w = img.width();

  std::vector<double> sums(n_bins, 0.0);
  std::vector<std::size_t> counts(n_bins, 0);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      if (u == 0 && v == 0) continue;
      const auto b = frequency_bin(radial_frequency(u, v, h, w), n_bins);
      sums[b] += std::log(std::abs(spec.at(u, v)) + kLogFloor);
      ++counts[b];
    }
  }
  const double dc = std::log(std::abs(spec.at(0, 0)) + kLogFloor);

  SpectralProfile p{bin_edges(n_bins), std::vector<double>(n_bins)};
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (counts[b] == 0) {
      throw DomainError("frequency bin " + std::to_string(b) +
                        " is empty; use at most min(H, W) / 2 bins");
    }
    p.rlm[b] = sums[b] / static_cast<double>(counts[b]) - dc;
  }
  return p;
}

SpectralProfile average_profiles(std::span<const SpectralProfile> profiles) {
  if (profiles.empty()) throw DomainError("no profiles to average");
  SpectralProfile out{profiles.front().bin_upper_freqs,
                      std::vector<double>(profiles.front().n_bins(), 0.0)};
  for (const auto &p : profiles) {
    if (p.bin_upper_freqs != out.bin_upper_freqs) {
      throw DimensionError("profiles use different binning");
    }
    for (std::size_t b = 0; b < p.n_bins(); ++b) out.rlm[b] += p.rlm[b];
  }
  for (double &v : out.rlm) v /= static_cast<double>(profiles.size());
  return out;
}

DeltaHeatmap delta_heatmap(std::span<const TimedProfile> profiles) {
  if (profiles.size() < 2) {
    throw DomainError("delta heatmap needs at least two profiles");
  }
  DeltaHeatmap hm;
  hm.bin_upper_freqs = profiles.front().profile.bin_upper_freqs;
  for (std::size_t k = 0; k + 1 < profiles.size(); ++k) {
    const auto &earlier = profiles[k];
    const auto &later = profiles[k + 1];
    if (!(later.t < earlier.t)) {
      throw InvariantError("profiles must be ordered by strictly descending t");
    }
    if (later.profile.bin_upper_freqs != hm.bin_upper_freqs ||
        earlier.profile.bin_upper_freqs != hm.bin_upper_freqs) {
      throw DimensionError("profiles use different binning");
    }
    std::vector<double> row(hm.n_bins());
    for (std::size_t b = 0; b < row.size(); ++b) {
      row[b] = later.profile.rlm[b] - earlier.profile.rlm[b];
    }
    hm.deltas.push_back(std::move(row));
    hm.step_labels.emplace_back(earlier.t, later.t);
  }
  return hm;
}

std::vector<std::size_t> bins_in_band(std::span<const double> bin_upper_freqs,
                                      FrequencyBand band) {
  if (!(band.lo >= 0.0 && band.hi <= 0.5 && band.lo < band.hi)) {
    throw DomainError("frequency band must satisfy 0 <= lo < hi <= 0.5");
  }
  constexpr double tol = 1e-12;
  std::vector<std::size_t> bins;
  double lower = 0.0;
  for (std::size_t b = 0; b < bin_upper_freqs.size(); ++b) {
    const double upper = bin_upper_freqs[b];
    if (lower >= band.lo - tol && upper <= band.hi + tol) bins.push_back(b);
    lower = upper;
  }
  return bins;
}

BandCurves band_curves(const DeltaHeatmap &hm, FrequencyBand low_band,
                       FrequencyBand high_band) {
  const auto low_bins = bins_in_band(hm.bin_upper_freqs, low_band);
  const auto high_bins = bins_in_band(hm.bin_upper_freqs, high_band);
  if (low_bins.empty() || high_bins.empty()) {
    throw DomainError("frequency band covers no whole bin");
  }
  auto mean_over = [](const std::vector<double> &row,
                      const std::vector<std::size_t> &bins) {
    double s = 0.0;
    for (auto b : bins) s += row[b];
    return s / static_cast<double>(bins.size());
  };
  BandCurves c;
  for (const auto &row : hm.deltas) {
    c.low.push_back(mean_over(row, low_bins));
    c.high.push_back(mean_over(row, high_bins));
  }
  return c;
}

void write_profile_csv(std::ostream &out, std::span<const TimedProfile> profiles) {
  out.precision(17);
  out << "t,bin_upper_freq,rlm\n";
  for (const auto &tp : profiles) {
    for (std::size_t b = 0; b < tp.profile.n_bins(); ++b) {
      out << tp.t << ',' << tp.profile.bin_upper_freqs[b] << ','
          << tp.profile.rlm[b] << '\n';
    }
  }
}

void write_heatmap_csv(std::ostream &out, const DeltaHeatmap &hm) {
  out.precision(17);
  out << "t_from,t_to,bin_upper_freq,delta\n";
  for (std::size_t k = 0; k < hm.n_transitions(); ++k) {
    for (std::size_t b = 0; b < hm.n_bins(); ++b) {
      out << hm.step_labels[k].first << ',' << hm.step_labels[k].second << ','
          << hm.bin_upper_freqs[b] << ',' << hm.deltas[k][b] << '\n';
    }
  }
}

void write_band_csv(std::ostream &out, const DeltaHeatmap &hm,
                    const BandCurves &curves) {
  out.precision(17);
  out << "t_from,t_to,low,high\n";
  for (std::size_t k = 0; k < hm.n_transitions(); ++k) {
    out << hm.step_labels[k].first << ',' << hm.step_labels[k].second << ','
        << curves.low[k] << ',' << curves.high[k] << '\n';
  }
}

void write_heatmap_svg(std::ostream &out, const DeltaHeatmap &hm) {
  constexpr int cell_w = 12;
  const int rows = static_cast<int>(hm.n_transitions());
  const int cols = static_cast<int>(hm.n_bins());
  // Tall trajectories get thin rows so the image stays a sensible size.
  const double cell_h = rows > 200 ? 600.0 / rows : 3.0;
  double scale = 0.0;
  for (const auto &row : hm.deltas) {
    for (double v : row) scale = std::max(scale, std::fabs(v));
  }
  if (scale == 0.0) scale = 1.0;

  const double height = cell_h * rows;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cols * cell_w
      << "\" height=\"" << height << "\" shape-rendering=\"crispEdges\">\n";
  for (int k = 0; k < rows; ++k) {
    for (int b = 0; b < cols; ++b) {
      const double v = std::clamp(hm.deltas[k][b] / scale, -1.0, 1.0);
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::fabs(v))));
      const int r = v >= 0.0 ? 255 : fade;
      const int bl = v >= 0.0 ? fade : 255;
      out << "<rect x=\"" << b * cell_w << "\" y=\"" << k * cell_h
          << "\" width=\"" << cell_w << "\" height=\"" << cell_h
          << "\" fill=\"rgb(" << r << ',' << fade << ',' << bl << ")\"/>\n";
    }
  }
  out << "</svg>\n";
}

} // namespace betasched
