#include "copulacp/spectral_bands.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

namespace copulacp {

EpochTensor::EpochTensor(std::size_t channels, std::size_t epochs, std::size_t samples_per_epoch,
                         double sampling_rate_hz)
    : channels_(channels),
      epochs_(epochs),
      samples_per_epoch_(samples_per_epoch),
      sampling_rate_hz_(sampling_rate_hz),
      data_(channels * epochs * samples_per_epoch, 0.0) {
  if (channels == 0 || epochs == 0) throw std::invalid_argument("EpochTensor: empty shape");
  if (samples_per_epoch == 0 || samples_per_epoch % 2 != 0) {
    throw std::invalid_argument("EpochTensor: samples per epoch must be even and positive");
  }
  if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("EpochTensor: sampling rate must be > 0");
}

std::span<const double> EpochTensor::epoch(std::size_t channel, std::size_t r) const {
  if (channel >= channels_ || r >= epochs_) throw std::out_of_range("EpochTensor::epoch");
  return {data_.data() + (channel * epochs_ + r) * samples_per_epoch_, samples_per_epoch_};
}

std::span<double> EpochTensor::epoch(std::size_t channel, std::size_t r) {
  if (channel >= channels_ || r >= epochs_) throw std::out_of_range("EpochTensor::epoch");
  return {data_.data() + (channel * epochs_ + r) * samples_per_epoch_, samples_per_epoch_};
}

EpochTensor segment_epochs(const std::vector<std::vector<double>>& streams,
                           std::size_t samples_per_epoch, double sampling_rate_hz,
                           const SegmentOptions& options) {
  if (streams.empty()) throw std::invalid_argument("segment_epochs: no channels");
  const std::size_t length = streams.front().size();
  for (const auto& s : streams) {
    if (s.size() != length) throw std::invalid_argument("segment_epochs: channel lengths differ");
  }
  if (samples_per_epoch == 0) throw std::invalid_argument("segment_epochs: T must be positive");
  if (length < samples_per_epoch) {
    throw std::invalid_argument("segment_epochs: stream shorter than one epoch (" +
                                std::to_string(length) + " < " +
                                std::to_string(samples_per_epoch) + ")");
  }
  const std::size_t stride = options.stride == 0 ? samples_per_epoch : options.stride;
  const std::size_t epochs = (length - samples_per_epoch) / stride + 1;
  const std::size_t used = (epochs - 1) * stride + samples_per_epoch;
  if (used != length && options.remainder == RemainderPolicy::Strict) {
    throw std::invalid_argument("segment_epochs: " + std::to_string(length - used) +
                                " trailing samples do not fill an epoch");
  }

  EpochTensor tensor(streams.size(), epochs, samples_per_epoch, sampling_rate_hz);
  for (std::size_t c = 0; c < streams.size(); ++c) {
    for (std::size_t r = 0; r < epochs; ++r) {
      auto dst = tensor.epoch(c, r);
      std::copy_n(streams[c].begin() + static_cast<std::ptrdiff_t>(r * stride), samples_per_epoch,
                  dst.begin());
    }
  }
  return tensor;
}

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
// FFTW_UNALIGNED keeps the chosen codelets independent of buffer alignment so
// results do not vary between threads.
fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<double> in(n);
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw std::runtime_error("fourier_magnitudes: FFTW planning failed");
  plans.emplace(n, plan);
  return plan;
}

}  // namespace

std::vector<double> fourier_magnitudes(std::span<const double> epoch) {
  const std::size_t n = epoch.size();
  if (n == 0 || n % 2 != 0) throw std::invalid_argument("fourier_magnitudes: length must be even");
  for (const double x : epoch) {
    if (!std::isfinite(x)) throw std::invalid_argument("fourier_magnitudes: non-finite sample");
  }
  std::vector<double> in(epoch.begin(), epoch.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(r2c_plan(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()));

  // The t = 1..T indexing only rotates phases, so moduli are unaffected.
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> mags(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) mags[k] = std::abs(out[k]) * scale;
  return mags;
}

void validate_band(const BandSpec& band) {
  if (!(band.lo_hz >= 0.0) || !(band.hi_hz > band.lo_hz)) {
    throw std::invalid_argument("band '" + band.name + "': need 0 <= lo < hi");
  }
  for (const double f : band.notch_hz) {
    if (!(f > band.lo_hz && f <= band.hi_hz)) {
      throw std::invalid_argument("band '" + band.name + "': notch outside (lo, hi]");
    }
  }
}

std::vector<BandSpec> default_bands(bool notch_gamma) {
  std::vector<BandSpec> bands{
      {"delta", 0.0, 4.0, {}},
      {"theta", 4.0, 8.0, {}},
      {"alpha", 8.0, 12.0, {}},
      {"beta", 12.0, 30.0, {}},
      {"gamma", 30.0, 300.0, {}},
  };
  if (notch_gamma) bands.back().notch_hz.push_back(60.0);
  return bands;
}

std::vector<std::size_t> band_bins(const BandSpec& band, std::size_t samples_per_epoch,
                                   double sampling_rate_hz) {
  validate_band(band);
  if (samples_per_epoch == 0 || samples_per_epoch % 2 != 0) {
    throw std::invalid_argument("band_bins: T must be even and positive");
  }
  const double nyquist = sampling_rate_hz / 2.0;
  const double resolution = sampling_rate_hz / static_cast<double>(samples_per_epoch);
  const double eps = 1e-9 * resolution;
  if (band.hi_hz > nyquist + eps) {
    throw std::invalid_argument("band '" + band.name + "': upper edge above Nyquist");
  }
  std::vector<std::size_t> bins;
  for (std::size_t k = 1; k <= samples_per_epoch / 2; ++k) {
    const double f = static_cast<double>(k) * resolution;
    if (f <= band.lo_hz + eps || f > band.hi_hz + eps) continue;
    const bool notched = std::any_of(band.notch_hz.begin(), band.notch_hz.end(),
                                     [&](double n) { return std::abs(f - n) <= eps; });
    if (!notched) bins.push_back(k);
  }
  if (bins.empty()) throw std::invalid_argument("band '" + band.name + "': no frequencies retained");
  return bins;
}

BandMagnitudes band_extract(std::span<const double> magnitudes, const BandSpec& band,
                            double sampling_rate_hz) {
  if (magnitudes.size() < 2) throw std::invalid_argument("band_extract: spectrum too short");
  const std::size_t samples_per_epoch = 2 * (magnitudes.size() - 1);
  const double resolution = sampling_rate_hz / static_cast<double>(samples_per_epoch);
  BandMagnitudes out;
  out.band = band.name;
  for (const std::size_t k : band_bins(band, samples_per_epoch, sampling_rate_hz)) {
    out.freqs_hz.push_back(static_cast<double>(k) * resolution);
    out.values.push_back(magnitudes[k]);
  }
  return out;
}

Scaling global_scaling(std::span<const BandMagnitudes> series) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& m : series) {
    for (const double x : m.values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(hi > lo)) throw std::invalid_argument("standardize: degenerate range (max == min)");
  return {lo, hi};
}

std::vector<StandardizedMagnitudes> standardize(std::span<const BandMagnitudes> series) {
  if (series.size() < 2) throw std::invalid_argument("standardize: need at least two epochs");
  const Scaling scaling = global_scaling(series);
  std::vector<StandardizedMagnitudes> out;
  out.reserve(series.size());
  for (const auto& m : series) {
    StandardizedMagnitudes s{m.channel, m.epoch, m.band, m.freqs_hz, {}, scaling};
    s.values.reserve(m.values.size());
    for (const double x : m.values) s.values.push_back(scaling.apply(x));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::vector<BandMagnitudes>> channel_band_series(const EpochTensor& tensor,
                                                             std::size_t channel,
                                                             std::span<const BandSpec> bands) {
  std::vector<std::vector<BandMagnitudes>> out(bands.size());
  for (std::size_t r = 0; r < tensor.epochs(); ++r) {
    const auto mags = fourier_magnitudes(tensor.epoch(channel, r));
    for (std::size_t b = 0; b < bands.size(); ++b) {
      auto bm = band_extract(mags, bands[b], tensor.sampling_rate_hz());
      bm.channel = channel;
      bm.epoch = r;
      out[b].push_back(std::move(bm));
    }
  }
  return out;
}

}  // namespace copulacp
