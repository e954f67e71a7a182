#include "copulacp/recording_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace copulacp {

std::string to_string(RecordingFormat format) {
  return format == RecordingFormat::Csv ? "csv" : "binary";
}

RecordingFormat recording_format_from_string(const std::string& name) {
  if (name == "csv") return RecordingFormat::Csv;
  if (name == "binary" || name == "bin") return RecordingFormat::Binary;
  throw std::invalid_argument("unknown recording format '" + name + "'");
}

RecordingFormat recording_format_from_path(const std::string& path) {
  auto ends_with = [&](const std::string& ext) {
    return path.size() >= ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0;
  };
  if (ends_with(".csv")) return RecordingFormat::Csv;
  if (ends_with(".bin") || ends_with(".f64")) return RecordingFormat::Binary;
  throw std::invalid_argument("cannot infer recording format from '" + path +
                              "'; expected .csv, .bin or .f64");
}

std::vector<std::string> default_channel_names(std::size_t channels) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < channels; ++c) names.push_back("ch" + std::to_string(c + 1));
  return names;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = 0;
    while (start < cell.size() && cell[start] == ' ') ++start;
    out.push_back(cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error(where + ": cannot parse '" + text + "' as a number");
  }
  return value;
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), ptr);
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void put_le(std::ostream& out, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  std::array<char, 8> bytes{};
  for (auto& b : bytes) {
    b = static_cast<char>(bits & 0xFFu);
    bits >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

}  // namespace

Recording read_csv(const std::string& path, double sampling_rate_hz) {
  if (!(sampling_rate_hz > 0.0)) throw std::invalid_argument("read_csv: sampling rate must be > 0");
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  Recording rec;
  rec.sampling_rate_hz = sampling_rate_hz;
  rec.channel_names = split_csv_line(line);
  if (rec.channel_names.empty()) throw std::runtime_error(path + ": header has no columns");
  rec.streams.resize(rec.channel_names.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != rec.channel_names.size()) {
      throw std::runtime_error(path + ":" + std::to_string(row) + ": expected " +
                               std::to_string(rec.channel_names.size()) + " columns, found " +
                               std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double x = parse_double(cells[c], path + ":" + std::to_string(row));
      if (!std::isfinite(x)) {
        throw std::runtime_error(path + ":" + std::to_string(row) + ": non-finite sample");
      }
      rec.streams[c].push_back(x);
    }
  }
  if (rec.streams.front().empty()) throw std::runtime_error(path + ": no samples");
  return rec;
}

void write_csv(const std::string& path, const Recording& rec) {
  if (rec.streams.empty()) throw std::invalid_argument("write_csv: no channels");
  if (rec.channel_names.size() != rec.streams.size()) {
    throw std::invalid_argument("write_csv: one name per channel required");
  }
  const std::size_t n = rec.streams.front().size();
  for (const auto& s : rec.streams) {
    if (s.size() != n) throw std::invalid_argument("write_csv: channels differ in length");
  }
  std::ofstream out = open_out(path);
  for (std::size_t c = 0; c < rec.channel_names.size(); ++c) {
    if (rec.channel_names[c].find(',') != std::string::npos) {
      throw std::invalid_argument("write_csv: channel name contains a comma");
    }
    out << (c ? "," : "") << rec.channel_names[c];
  }
  out << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < rec.streams.size(); ++c) {
      out << (c ? "," : "") << format_double(rec.streams[c][i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string sidecar_path(const std::string& binary_path) { return binary_path + ".json"; }

BinaryHeader read_sidecar(const std::string& path) {
  std::ifstream in = open_in(sidecar_path(path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(sidecar_path(path) + ": " + e.what());
  }
  BinaryHeader h;
  try {
    h.channels = j.at("d").get<std::size_t>();
    h.samples_per_epoch = j.at("T").get<std::size_t>();
    h.epochs = j.at("R").get<std::size_t>();
    h.sampling_rate_hz = j.at("sampling_rate_hz").get<double>();
    const auto layout = j.value("layout", std::string("channel-major"));
    if (layout != "channel-major") {
      throw std::runtime_error("unsupported layout '" + layout + "'");
    }
    if (j.contains("channel_names")) {
      h.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(sidecar_path(path) + ": " + e.what());
  }
  if (h.channels == 0 || h.samples_per_epoch == 0 || h.epochs == 0) {
    throw std::runtime_error(sidecar_path(path) + ": d, T and R must be >= 1");
  }
  if (!(h.sampling_rate_hz > 0.0)) {
    throw std::runtime_error(sidecar_path(path) + ": sampling_rate_hz must be > 0");
  }
  if (h.channel_names.empty()) h.channel_names = default_channel_names(h.channels);
  if (h.channel_names.size() != h.channels) {
    throw std::runtime_error(sidecar_path(path) + ": channel_names length differs from d");
  }
  return h;
}

EpochTensor read_binary(const std::string& path, BinaryHeader* header) {
  const BinaryHeader h = read_sidecar(path);
  std::ifstream in = open_in(path, std::ios::binary);
  const std::size_t count = h.channels * h.epochs * h.samples_per_epoch;
  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error(path + ": expected " + std::to_string(raw.size()) +
                             " bytes from the sidecar shape, file is shorter");
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    throw std::runtime_error(path + ": file is longer than the sidecar shape");
  }
  EpochTensor tensor(h.channels, h.epochs, h.samples_per_epoch, h.sampling_rate_hz);
  std::size_t k = 0;
  for (std::size_t c = 0; c < h.channels; ++c) {
    for (std::size_t r = 0; r < h.epochs; ++r) {
      for (double& x : tensor.epoch(c, r)) {
        x = get_le(raw.data() + 8 * k++);
        if (!std::isfinite(x)) throw std::runtime_error(path + ": non-finite sample");
      }
    }
  }
  if (header) *header = h;
  return tensor;
}

void write_binary(const std::string& path, const EpochTensor& tensor,
                  const std::vector<std::string>& channel_names) {
  if (channel_names.size() != tensor.channels()) {
    throw std::invalid_argument("write_binary: one name per channel required");
  }
  std::ofstream out = open_out(path, std::ios::binary);
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t r = 0; r < tensor.epochs(); ++r) {
      for (const double x : tensor.epoch(c, r)) put_le(out, x);
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");

  nlohmann::json j;
  j["d"] = tensor.channels();
  j["T"] = tensor.samples_per_epoch();
  j["R"] = tensor.epochs();
  j["sampling_rate_hz"] = tensor.sampling_rate_hz();
  j["layout"] = "channel-major";
  j["dtype"] = "float64-le";
  j["channel_names"] = channel_names;
  std::ofstream side = open_out(sidecar_path(path));
  side << j.dump(2) << '\n';
}

Recording tensor_to_recording(const EpochTensor& tensor,
                              const std::vector<std::string>& channel_names) {
  Recording rec;
  rec.sampling_rate_hz = tensor.sampling_rate_hz();
  rec.channel_names = channel_names;
  rec.streams.resize(tensor.channels());
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (std::size_t r = 0; r < tensor.epochs(); ++r) {
      const auto ep = tensor.epoch(c, r);
      rec.streams[c].insert(rec.streams[c].end(), ep.begin(), ep.end());
    }
  }
  return rec;
}

LoadedRecording load_recording(const std::string& path, RecordingFormat format,
                               std::size_t samples_per_epoch, double sampling_rate_hz,
                               RemainderPolicy remainder) {
  LoadedRecording out;
  if (format == RecordingFormat::Csv) {
    if (samples_per_epoch == 0) throw std::invalid_argument("CSV input needs an epoch length");
    Recording rec = read_csv(path, sampling_rate_hz);
    out.channel_names = std::move(rec.channel_names);
    out.tensor = segment_epochs(rec.streams, samples_per_epoch, sampling_rate_hz, {remainder, 0});
    return out;
  }
  BinaryHeader h;
  out.tensor = read_binary(path, &h);
  if (samples_per_epoch != 0 && samples_per_epoch != h.samples_per_epoch) {
    throw std::invalid_argument(path + ": sidecar epoch length " +
                                std::to_string(h.samples_per_epoch) + " differs from requested " +
                                std::to_string(samples_per_epoch));
  }
  out.channel_names = std::move(h.channel_names);
  return out;
}

}  // namespace copulacp
