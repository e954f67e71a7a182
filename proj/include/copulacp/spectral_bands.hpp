#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace copulacp {

// Samples laid out channel-major: [channel][epoch][t].
class EpochTensor {
 public:
  EpochTensor() = default;
  EpochTensor(std::size_t channels, std::size_t epochs, std::size_t samples_per_epoch,
              double sampling_rate_hz);

  std::size_t channels() const { return channels_; }
  std::size_t epochs() const { return epochs_; }
  std::size_t samples_per_epoch() const { return samples_per_epoch_; }
  double sampling_rate_hz() const { return sampling_rate_hz_; }

  std::span<const double> epoch(std::size_t channel, std::size_t r) const;
  std::span<double> epoch(std::size_t channel, std::size_t r);

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t channels_ = 0;
  std::size_t epochs_ = 0;
  std::size_t samples_per_epoch_ = 0;
  double sampling_rate_hz_ = 0.0;
  std::vector<double> data_;
};

enum class RemainderPolicy { Strict, Truncate };

struct SegmentOptions {
  RemainderPolicy remainder = RemainderPolicy::Strict;
  // Distance between consecutive epoch starts; 0 means T (disjoint epochs).
  std::size_t stride = 0;
};

// Cuts equal-length channel streams into epochs of T samples.
EpochTensor segment_epochs(const std::vector<std::vector<double>>& streams,
                           std::size_t samples_per_epoch, double sampling_rate_hz,
                           const SegmentOptions& options = {});

// |f_k| for k = 0..T/2 with f_k = T^{-1/2} sum_t x(t) exp(-i 2 pi k t / T).
std::vector<double> fourier_magnitudes(std::span<const double> epoch);

// Frequency band over the half-open interval (lo_hz, hi_hz], with single
// fundamental-frequency bins removed at each notch frequency.
struct BandSpec {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  std::vector<double> notch_hz;
};

void validate_band(const BandSpec& band);

// Delta (0,4], theta (4,8], alpha (8,12], beta (12,30], gamma (30,300].
// The 60 Hz mains bin is notched out of gamma unless notch_gamma is false.
std::vector<BandSpec> default_bands(bool notch_gamma = true);

// Indices k into the fourier_magnitudes output that fall in the band.
std::vector<std::size_t> band_bins(const BandSpec& band, std::size_t samples_per_epoch,
                                   double sampling_rate_hz);

struct BandMagnitudes {
  std::size_t channel = 0;
  std::size_t epoch = 0;
  std::string band;
  std::vector<double> freqs_hz;
  std::vector<double> values;
};

BandMagnitudes band_extract(std::span<const double> magnitudes, const BandSpec& band,
                            double sampling_rate_hz);

// Affine map of a band series onto [0, 1] using one min/max for all epochs.
struct Scaling {
  double min = 0.0;
  double max = 1.0;

  double apply(double x) const { return (x - min) / (max - min); }
  double invert(double y) const { return min + y * (max - min); }
};

struct StandardizedMagnitudes {
  std::size_t channel = 0;
  std::size_t epoch = 0;
  std::string band;
  std::vector<double> freqs_hz;
  std::vector<double> values;
  Scaling scaling;
};

Scaling global_scaling(std::span<const BandMagnitudes> series);

std::vector<StandardizedMagnitudes> standardize(std::span<const BandMagnitudes> series);

// Band magnitudes for every epoch of one channel, for several bands at once.
// Result is indexed [band][epoch].
std::vector<std::vector<BandMagnitudes>> channel_band_series(const EpochTensor& tensor,
                                                             std::size_t channel,
                                                             std::span<const BandSpec> bands);

}  // namespace copulacp
