#pragma once

// Frequency analysis of denoising trajectories.
//
// Each state is a single-channel image. Its 2D spectrum is reduced to a radial
// profile of log magnitudes referenced to the DC term (the "relative log
// magnitude"), and consecutive profiles along a trajectory are differenced to
// show which frequency bands change at which step.

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace betasched {

/// Row-major single-channel image whose sides are powers of two >= 8.
class ImageGrid {
public:
  ImageGrid(std::size_t height, std::size_t width, std::vector<double> pixels);

  /// Reduces interleaved RGB (3 values per pixel) to Rec. 709 luminance.
  static ImageGrid from_rgb(std::size_t height, std::size_t width,
                            std::span<const double> rgb);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  const std::vector<double> &pixels() const noexcept { return pixels_; }
  double at(std::size_t row, std::size_t col) const {
    return pixels_[row * width_ + col];
  }

private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> pixels_;
};

/// Row-major complex spectrum, same shape as the source image.
struct Spectrum {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::complex<double>> values;

  const std::complex<double> &at(std::size_t u, std::size_t v) const {
    return values[u * width + v];
  }
};

/// Unnormalized forward DFT, X[u,v] = sum x[m,n] exp(-2 pi i (um/H + vn/W)),
/// computed row-then-column with an iterative radix-2 FFT.
Spectrum fft2(const ImageGrid &img);

/// Radial profile: rlm[b] is the mean of ln(|X| + eps) over the non-DC
/// frequencies in bin b, minus ln(|X[0,0]| + eps).
struct SpectralProfile {
  std::vector<double> bin_upper_freqs;
  std::vector<double> rlm;

  std::size_t n_bins() const noexcept { return rlm.size(); }
};

inline constexpr double kLogFloor = 1e-12;
inline constexpr std::size_t kDefaultBins = 32;

/// Normalized radial frequency of DFT index (u, v), in [0, sqrt(0.5)].
double radial_frequency(std::size_t u, std::size_t v, std::size_t height,
                        std::size_t width);

/// Bin index for a radial frequency. Bins split [0, 0.5] evenly and are
/// closed on the right, so bin b is (b/2n, (b+1)/2n] and bin 0 also takes 0.
/// Anything above 0.5 (the corners of the spectrum) lands in the last bin.
std::size_t frequency_bin(double f, std::size_t n_bins);

/// Number of non-DC frequencies falling in each bin.
std::vector<std::size_t> bin_populations(std::size_t height, std::size_t width,
                                         std::size_t n_bins);

SpectralProfile rlm(const ImageGrid &img, std::size_t n_bins = kDefaultBins);

/// Mean of several profiles on the same binning.
SpectralProfile average_profiles(std::span<const SpectralProfile> profiles);

/// Consecutive differences along a trajectory ordered by descending t.
///
/// Row k holds profile(t_{k+1}) - profile(t_k): the later state in denoising
/// order minus the earlier one. Labels record (t_from, t_to) = (t_k, t_{k+1}).
struct DeltaHeatmap {
  std::vector<double> bin_upper_freqs;
  std::vector<std::pair<std::int64_t, std::int64_t>> step_labels;
  std::vector<std::vector<double>> deltas;

  std::size_t n_transitions() const noexcept { return deltas.size(); }
  std::size_t n_bins() const noexcept { return bin_upper_freqs.size(); }
};

struct TimedProfile {
  std::int64_t t;
  SpectralProfile profile;
};

DeltaHeatmap delta_heatmap(std::span<const TimedProfile> profiles);

/// Closed frequency interval [lo, hi] within [0, 0.5].
struct FrequencyBand {
  double lo;
  double hi;
};

inline constexpr FrequencyBand kDefaultLowBand{0.0, 0.1};
inline constexpr FrequencyBand kDefaultHighBand{0.25, 0.5};

/// Bins whose whole interval lies inside the band.
std::vector<std::size_t> bins_in_band(std::span<const double> bin_upper_freqs,
                                      FrequencyBand band);

struct BandCurves {
  std::vector<double> low;
  std::vector<double> high;
};

/// Per-transition mean delta over the bins of each band.
BandCurves band_curves(const DeltaHeatmap &hm,
                       FrequencyBand low_band = kDefaultLowBand,
                       FrequencyBand high_band = kDefaultHighBand);

/// `t,bin_upper_freq,rlm`
void write_profile_csv(std::ostream &out, std::span<const TimedProfile> profiles);
/// `t_from,t_to,bin_upper_freq,delta`
void write_heatmap_csv(std::ostream &out, const DeltaHeatmap &hm);
/// `t_from,t_to,low,high`
void write_band_csv(std::ostream &out, const DeltaHeatmap &hm,
                    const BandCurves &curves);
/// Self-contained SVG; red cells mark increases, blue decreases.
void write_heatmap_svg(std::ostream &out, const DeltaHeatmap &hm);

} // namespace betasched
