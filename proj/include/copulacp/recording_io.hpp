#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "copulacp/spectral_bands.hpp"

namespace copulacp {

enum class RecordingFormat { Csv, Binary };

std::string to_string(RecordingFormat format);
RecordingFormat recording_format_from_string(const std::string& name);

// Guesses the format from the extension: .csv is CSV, .bin or .f64 binary.
RecordingFormat recording_format_from_path(const std::string& path);

// Continuous per-channel streams.
struct Recording {
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> streams;
  double sampling_rate_hz = 1000.0;

  std::size_t channels() const { return streams.size(); }
};

// CSV: one header row of channel names, then one row per sample with one
// column per channel. The sampling rate is not stored in the file.
Recording read_csv(const std::string& path, double sampling_rate_hz);
void write_csv(const std::string& path, const Recording& rec);

// Binary: little-endian IEEE-754 doubles, channel-major, with a JSON sidecar
// at <path>.json holding d, T, R, sampling_rate_hz, layout and channel names.
struct BinaryHeader {
  std::size_t channels = 0;           // d
  std::size_t samples_per_epoch = 0;  // T
  std::size_t epochs = 0;             // R
  double sampling_rate_hz = 1000.0;
  std::vector<std::string> channel_names;
};

std::string sidecar_path(const std::string& binary_path);
BinaryHeader read_sidecar(const std::string& path);
EpochTensor read_binary(const std::string& path, BinaryHeader* header = nullptr);
void write_binary(const std::string& path, const EpochTensor& tensor,
                  const std::vector<std::string>& channel_names);

// Epoch tensor plus channel names from either format. CSV streams are cut
// into epochs of samples_per_epoch; binary files carry their own shape and
// must agree with samples_per_epoch when it is nonzero.
struct LoadedRecording {
  EpochTensor tensor;
  std::vector<std::string> channel_names;
};

LoadedRecording load_recording(const std::string& path, RecordingFormat format,
                               std::size_t samples_per_epoch, double sampling_rate_hz,
                               RemainderPolicy remainder = RemainderPolicy::Strict);

// Flattens an epoch tensor back into continuous streams.
Recording tensor_to_recording(const EpochTensor& tensor,
                              const std::vector<std::string>& channel_names);

std::vector<std::string> default_channel_names(std::size_t channels);

}  // namespace copulacp
