#include "cli_app.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "copulacp/calibration.hpp"
#include "copulacp/dvine_compare.hpp"
#include "copulacp/ks_change.hpp"
#include "copulacp/parallel.hpp"
#include "copulacp/recording_io.hpp"
#include "copulacp/rng.hpp"

namespace copulacp::cli {

namespace fs = std::filesystem;

namespace {

Json band_to_json(const BandSpec& b) {
  return Json{{"name", b.name}, {"lo_hz", b.lo_hz}, {"hi_hz", b.hi_hz}, {"notch_hz", b.notch_hz}};
}

BandSpec band_from_json(const Json& j) {
  BandSpec b;
  b.name = j.at("name").get<std::string>();
  b.lo_hz = j.at("lo_hz").get<double>();
  b.hi_hz = j.at("hi_hz").get<double>();
  if (j.contains("notch_hz")) b.notch_hz = j.at("notch_hz").get<std::vector<double>>();
  validate_band(b);
  return b;
}

Json dgp_json(const std::string& kind, std::size_t epochs) {
  return Json{{"kind", kind}, {"epochs", epochs}};
}

}  // namespace

Json default_config() {
  Json bands = Json::array();
  for (const auto& b : default_bands()) bands.push_back(band_to_json(b));
  Json panel = Json::array();
  for (const auto f : default_panel()) panel.push_back(to_string(f));
  return Json{
      {"seed", 0},
      {"jobs", default_jobs()},
      {"out_dir", "out"},
      {"input",
       {{"path", ""},
        {"format", "auto"},
        {"samples_per_epoch", 1000},
        {"sampling_rate_hz", 1000.0},
        {"remainder", "strict"}}},
      {"bands", bands},
      {"band_names", Json::array()},
      {"channels", Json::array()},
      {"bootstrap", {{"blocks", 20}, {"replicates", 200}}},
      {"grid", 101},
      {"panel", panel},
      {"target", "joint"},
      {"marginal", "gamma"},
      {"alpha", 0.01},
      {"thresholds", nullptr},
      {"pre", nullptr},
      {"post", nullptr},
      {"epochs", nullptr},
      {"truncation", 2},
      {"pseudo_obs", "bootstrap_gamma"},
      {"rho", 0.97},
      {"noise", "variance"},
      {"simulate",
       {{"format", "csv"},
        {"name", "simulated"},
        {"samples_per_epoch", 1000},
        {"sampling_rate_hz", 1000.0},
        {"channels", Json::array({Json{{"segments", Json::array({dgp_json("dgp1_A", 100)})}}})}}},
      {"calibrate",
       {{"dgp", "dgp1"},
        {"replicates", 5},
        {"epochs", 100},
        {"samples_per_epoch", 1000},
        {"sampling_rate_hz", 1000.0}}},
  };
}

Json merge_config(Json base, const Json& overlay) {
  if (!base.is_object() || !overlay.is_object()) return overlay;
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      base[key] = merge_config(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

namespace {

// ---- typed views of the resolved configuration ----------------------------

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config key '") + key + "': " + e.what());
  }
}

std::vector<BandSpec> selected_bands(const Json& cfg) {
  std::vector<BandSpec> all;
  for (const auto& b : cfg.at("bands")) all.push_back(band_from_json(b));
  if (all.empty()) throw UsageError("no bands configured");
  const auto names = get<std::vector<std::string>>(cfg, "band_names");
  if (names.empty()) return all;
  std::vector<BandSpec> out;
  for (const auto& n : names) {
    auto it = std::find_if(all.begin(), all.end(), [&](const BandSpec& b) { return b.name == n; });
    if (it == all.end()) throw UsageError("unknown band '" + n + "'");
    out.push_back(*it);
  }
  return out;
}

std::vector<CopulaFamily> panel_of(const Json& cfg) {
  std::vector<CopulaFamily> out;
  for (const auto& name : get<std::vector<std::string>>(cfg, "panel")) {
    out.push_back(copula_family_from_string(name));
  }
  if (out.empty()) throw UsageError("copula panel is empty");
  return out;
}

BootstrapConfig bootstrap_of(const Json& cfg) {
  BootstrapConfig b;
  b.blocks = get<std::size_t>(cfg.at("bootstrap"), "blocks");
  b.replicates = get<std::size_t>(cfg.at("bootstrap"), "replicates");
  b.seed = get<std::uint64_t>(cfg, "seed");
  if (b.blocks == 0 || b.replicates == 0) {
    throw UsageError("bootstrap blocks and replicates must be >= 1");
  }
  return b;
}

std::size_t jobs_of(const Json& cfg) {
  const auto jobs = get<std::size_t>(cfg, "jobs");
  if (jobs == 0) throw UsageError("--jobs must be >= 1");
  return jobs;
}

double alpha_of(const Json& cfg) {
  const double a = get<double>(cfg, "alpha");
  if (!(a > 0.0 && a < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  return a;
}

DetectConfig detect_config_of(const Json& cfg) {
  DetectConfig d;
  d.bootstrap = bootstrap_of(cfg);
  d.grid_size = get<std::size_t>(cfg, "grid");
  d.panel = panel_of(cfg);
  d.target = ks_target_from_string(get<std::string>(cfg, "target"));
  d.marginal = marginal_family_from_string(get<std::string>(cfg, "marginal"));
  d.jobs = jobs_of(cfg);
  if (d.grid_size < 11) throw UsageError("--grid must be >= 11");
  return d;
}

VineConfig vine_config_of(const Json& cfg) {
  VineConfig v;
  v.truncation_level = get<std::size_t>(cfg, "truncation");
  v.panel = panel_of(cfg);
  v.bootstrap = bootstrap_of(cfg);
  v.marginal = marginal_family_from_string(get<std::string>(cfg, "marginal"));
  v.pseudo_obs = pseudo_obs_mode_from_string(get<std::string>(cfg, "pseudo_obs"));
  v.jobs = jobs_of(cfg);
  if (v.truncation_level < 1) throw UsageError("--truncation must be >= 1");
  return v;
}

// 1-based inclusive [a, b] from "a:b" or [a, b].
EpochRange range_of(const Json& j, const std::string& what) {
  std::size_t a = 0, b = 0;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError(what + " must look like FIRST:LAST");
    try {
      a = std::stoul(s.substr(0, colon));
      b = std::stoul(s.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError(what + " '" + s + "' is not a FIRST:LAST epoch range");
    }
  } else if (j.is_array() && j.size() == 2) {
    a = j[0].get<std::size_t>();
    b = j[1].get<std::size_t>();
  } else {
    throw UsageError(what + " must be \"FIRST:LAST\" or [FIRST, LAST]");
  }
  if (a < 1 || b < a) throw UsageError(what + " must satisfy 1 <= FIRST <= LAST");
  return {a - 1, b};
}

std::vector<std::size_t> channels_of(const Json& cfg, std::size_t available) {
  std::vector<std::size_t> out;
  for (const auto c : get<std::vector<std::size_t>>(cfg, "channels")) {
    if (c < 1 || c > available) {
      throw UsageError("channel " + std::to_string(c) + " out of range 1.." +
                       std::to_string(available));
    }
    out.push_back(c - 1);
  }
  if (out.empty()) {
    for (std::size_t c = 0; c < available; ++c) out.push_back(c);
  }
  return out;
}

LoadedRecording load_input(const Json& cfg) {
  const Json& in = cfg.at("input");
  const auto path = get<std::string>(in, "path");
  if (path.empty()) throw UsageError("no input recording given (--input)");
  if (!fs::exists(path)) throw UsageError("input file not found: " + path);
  const auto fmt_name = get<std::string>(in, "format");
  const RecordingFormat fmt =
      fmt_name == "auto" ? recording_format_from_path(path) : recording_format_from_string(fmt_name);
  if (fmt == RecordingFormat::Binary && !fs::exists(sidecar_path(path))) {
    throw UsageError("binary input needs its sidecar: " + sidecar_path(path));
  }
  const auto remainder = get<std::string>(in, "remainder");
  if (remainder != "strict" && remainder != "truncate") {
    throw UsageError("input.remainder must be 'strict' or 'truncate'");
  }
  return load_recording(path, fmt, get<std::size_t>(in, "samples_per_epoch"),
                        get<double>(in, "sampling_rate_hz"),
                        remainder == "strict" ? RemainderPolicy::Strict : RemainderPolicy::Truncate);
}

ThresholdTable thresholds_of(const Json& cfg) {
  const Json& t = cfg.at("thresholds");
  if (t.is_null()) return reference_thresholds_dgp2();
  if (t.is_string()) {
    const auto path = t.get<std::string>();
    if (!fs::exists(path)) throw UsageError("threshold file not found: " + path);
    try {
      return read_threshold_table(path);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
  }
  try {
    return threshold_table_from_json(t);
  } catch (const std::exception& e) {
    throw UsageError(std::string("inline thresholds: ") + e.what());
  }
}

fs::path prepare_out_dir(const Json& cfg) {
  const fs::path dir = get<std::string>(cfg, "out_dir");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
  return dir;
}

// Wraps a payload with provenance.
Json envelope(const std::string& command, const Json& cfg, const Json& payload) {
  return Json{{"tool", "copulacp"},
              {"tool_version", tool_version()},
              {"command", command},
              {"seed", cfg.at("seed")},
              {"config", cfg},
              {"result", payload}};
}

// ---- simulate ---------------------------------------------------------------

DgpSpec dgp_spec_of(const Json& j, const Json& cfg, std::size_t samples, double fs,
                    std::uint64_t seed) {
  DgpSpec s;
  const auto kind = get<std::string>(j, "kind");
  if (kind == "dgp1_A") {
    s.kind = DgpKind::Dgp1A;
  } else if (kind == "dgp1_B") {
    s.kind = DgpKind::Dgp1B;
  } else if (kind == "dgp2") {
    s.kind = DgpKind::Dgp2;
  } else {
    throw UsageError("unknown DGP kind '" + kind + "' (dgp1_A, dgp1_B, dgp2, gate)");
  }
  s.latent = j.value("latent", 1);
  s.epochs = j.value("epochs", std::size_t{100});
  s.samples_per_epoch = samples;
  s.sampling_rate_hz = fs;
  s.rho = j.value("rho", get<double>(cfg, "rho"));
  s.noise = noise_convention_from_string(j.value("noise", get<std::string>(cfg, "noise")));
  s.seed = seed;
  try {
    validate_dgp(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return s;
}

int cmd_simulate(const Json& cfg) {
  const Json& sim = cfg.at("simulate");
  const auto samples = get<std::size_t>(sim, "samples_per_epoch");
  const auto fs_hz = get<double>(sim, "sampling_rate_hz");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const auto format = recording_format_from_string(get<std::string>(sim, "format"));
  const auto name = get<std::string>(sim, "name");
  if (samples == 0 || samples % 2 != 0) throw UsageError("samples per epoch must be even and > 0");
  if (!(fs_hz > 0.0)) throw UsageError("sampling rate must be > 0");
  const Json& channels = sim.at("channels");
  if (!channels.is_array() || channels.empty()) throw UsageError("simulate.channels is empty");

  // Validate everything first, then simulate.
  struct Planned {
    std::vector<DgpSpec> segments;
    std::optional<GateSpec> gate;
  };
  std::vector<Planned> plan;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const Json& ch = channels[c];
    Planned p;
    if (ch.contains("kind") && ch.at("kind") == "gate") {
      GateSpec g;
      g.epochs = ch.value("epochs", std::size_t{200});
      g.switch_epoch = ch.value("switch_epoch", g.epochs / 2 + 1);
      g.samples_per_epoch = samples;
      g.sampling_rate_hz = fs_hz;
      g.seed = derive_seed(seed, {c});
      if (g.switch_epoch < 1 || g.switch_epoch > g.epochs) {
        throw UsageError("gate switch_epoch must lie in 1..epochs");
      }
      p.gate = g;
    } else {
      const Json segs = ch.contains("segments") ? ch.at("segments") : Json::array({ch});
      for (std::size_t s = 0; s < segs.size(); ++s) {
        p.segments.push_back(dgp_spec_of(segs[s], cfg, samples, fs_hz, derive_seed(seed, {c, s})));
      }
      if (p.segments.empty()) throw UsageError("channel " + std::to_string(c + 1) + " has no segments");
    }
    plan.push_back(std::move(p));
  }

  std::vector<std::vector<double>> streams;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < plan.size(); ++c) {
    if (plan[c].gate) {
      const EpochTensor t = simulate_logistic_gate(*plan[c].gate);
      const Recording rec = tensor_to_recording(t, {"x", "y"});
      for (std::size_t k = 0; k < 2; ++k) {
        streams.push_back(rec.streams[k]);
        names.push_back("ch" + std::to_string(names.size() + 1));
      }
      continue;
    }
    std::vector<double> stream;
    for (const auto& seg : plan[c].segments) {
      for (const auto& ep : simulate(seg)) stream.insert(stream.end(), ep.begin(), ep.end());
    }
    streams.push_back(std::move(stream));
    names.push_back("ch" + std::to_string(names.size() + 1));
  }
  for (const auto& s : streams) {
    if (s.size() != streams.front().size()) {
      throw UsageError("simulated channels differ in total epoch count");
    }
  }

  const fs::path dir = prepare_out_dir(cfg);
  const EpochTensor tensor = segment_epochs(streams, samples, fs_hz);
  fs::path data_path;
  if (format == RecordingFormat::Csv) {
    data_path = dir / (name + ".csv");
    write_csv(data_path.string(), tensor_to_recording(tensor, names));
  } else {
    data_path = dir / (name + ".bin");
    write_binary(data_path.string(), tensor, names);
  }
  const Json payload{{"path", data_path.string()},
                     {"format", to_string(format)},
                     {"d", tensor.channels()},
                     {"T", tensor.samples_per_epoch()},
                     {"R", tensor.epochs()},
                     {"sampling_rate_hz", tensor.sampling_rate_hz()},
                     {"channel_names", names}};
  write_text_file((dir / (name + "_report.json")).string(),
                  canonical_dump(envelope("simulate", cfg, payload)));
  std::cout << "wrote " << data_path.string() << " (d=" << tensor.channels()
            << ", R=" << tensor.epochs() << ", T=" << tensor.samples_per_epoch() << ")\n";
  return kExitOk;
}

// ---- calibrate --------------------------------------------------------------

int cmd_calibrate(const Json& cfg) {
  const Json& cal = cfg.at("calibrate");
  const auto dgp = get<std::string>(cal, "dgp");
  const auto replicates = get<std::size_t>(cal, "replicates");
  if (replicates == 0) throw UsageError("--replicates must be >= 1");
  if (dgp != "dgp1" && dgp != "dgp2") throw UsageError("--dgp must be dgp1 or dgp2");
  const double alpha = alpha_of(cfg);
  const auto bands = selected_bands(cfg);
  DetectConfig dc = detect_config_of(cfg);
  const auto seed = get<std::uint64_t>(cfg, "seed");
  dc.bootstrap.seed = derive_seed(seed, {1});

  DgpSpec base;
  base.kind = dgp == "dgp1" ? DgpKind::Dgp1A : DgpKind::Dgp2;
  base.epochs = get<std::size_t>(cal, "epochs");
  base.samples_per_epoch = get<std::size_t>(cal, "samples_per_epoch");
  base.sampling_rate_hz = get<double>(cal, "sampling_rate_hz");
  base.rho = get<double>(cfg, "rho");
  base.noise = noise_convention_from_string(get<std::string>(cfg, "noise"));
  base.seed = derive_seed(seed, {0});
  if (base.epochs < 3) throw UsageError("need at least 3 epochs per replicate");
  try {
    validate_dgp(base);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const std::size_t per_band = replicates * (base.epochs - 2) * (dgp == "dgp2" ? 6 : 1);
  if (per_band < 100) {
    throw UsageError("" + std::to_string(per_band) +
                     " null statistics per band; need at least 100 (raise --replicates)");
  }
  const fs::path dir = prepare_out_dir(cfg);

  const auto stats = dgp == "dgp1" ? null_ks_statistics(base, replicates, bands, dc)
                                   : null_ks_statistics_dgp2(base, replicates, bands, dc);
  ThresholdTable table = calibrate_thresholds(stats, alpha, dgp);
  table.seed = seed;
  table.replicates = replicates;

  std::ostringstream csv;
  csv << "band,D\n";
  for (const auto& [band, values] : stats) {
    for (const double v : values) csv << band << ',' << Json(v).dump() << '\n';
  }
  write_text_file((dir / "null_stats.csv").string(), csv.str());
  write_text_file((dir / "thresholds.json").string(),
                  canonical_dump(envelope("calibrate", cfg, to_json(table))));
  for (const auto& [band, value] : table.thresholds) {
    std::cout << band << ": " << Json(value).dump() << '\n';
  }
  return kExitOk;
}

// ---- detect -----------------------------------------------------------------

int cmd_detect(const Json& cfg) {
  const auto bands = selected_bands(cfg);
  const DetectConfig dc = detect_config_of(cfg);
  alpha_of(cfg);
  const ThresholdTable table = thresholds_of(cfg);
  for (const auto& b : bands) {
    if (!table.thresholds.count(b.name)) {
      throw UsageError("threshold table has no entry for band '" + b.name + "'");
    }
  }
  const double alpha = table.alpha;
  const LoadedRecording rec = load_input(cfg);
  const auto channels = channels_of(cfg, rec.tensor.channels());
  if (rec.tensor.epochs() < 3) throw UsageError("detect: recording has fewer than 3 epochs");
  for (const auto& b : bands) {
    try {
      band_bins(b, rec.tensor.samples_per_epoch(), rec.tensor.sampling_rate_hz());
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const fs::path dir = prepare_out_dir(cfg);

  Json summary = Json::array();
  for (const std::size_t c : channels) {
    const auto reports = detect_channel(rec.tensor, c, bands, dc, table.thresholds, alpha);
    for (const auto& rep : reports) {
      Json payload = to_json(rep);
      payload["channel_name"] = rec.channel_names[c];
      payload["threshold_source"] = table.source;
      const std::string stem = "detect_ch" + std::to_string(c + 1) + "_" + rep.band;
      write_text_file((dir / (stem + ".json")).string(),
                      canonical_dump(envelope("detect", cfg, payload)));
      write_text_file((dir / (stem + ".csv")).string(), ks_series_csv(rep.ks));
      summary.push_back(Json{{"channel", c + 1},
                             {"band", rep.band},
                             {"threshold", rep.threshold},
                             {"flagged_epochs", rep.flagged_epochs}});
      std::cout << "channel " << c + 1 << " " << rep.band << ": " << rep.flagged_epochs.size()
                << " flagged\n";
    }
  }
  Json payload{{"reports", summary}, {"thresholds", to_json(table)}};
  write_text_file((dir / "detect_summary.json").string(),
                  canonical_dump(envelope("detect", cfg, payload)));
  return kExitOk;
}

// ---- compare ----------------------------------------------------------------

void check_band_fits(const BandSpec& b, const EpochTensor& t) {
  try {
    band_bins(b, t.samples_per_epoch(), t.sampling_rate_hz());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_compare_prepost(const Json& cfg) {
  const auto bands = selected_bands(cfg);
  const VineConfig vc = vine_config_of(cfg);
  if (cfg.at("pre").is_null() || cfg.at("post").is_null()) {
    throw UsageError("compare-prepost needs --pre and --post epoch ranges");
  }
  const EpochRange pre = range_of(cfg.at("pre"), "--pre");
  const EpochRange post = range_of(cfg.at("post"), "--post");
  if (pre.first < post.last && post.first < pre.last) {
    throw UsageError("--pre and --post epoch ranges overlap");
  }
  if (pre.size() != post.size()) throw UsageError("--pre and --post must span equally many epochs");
  const LoadedRecording rec = load_input(cfg);
  if (std::max(pre.last, post.last) > rec.tensor.epochs()) {
    throw UsageError("epoch range exceeds the " + std::to_string(rec.tensor.epochs()) +
                     " epochs of the recording");
  }
  const auto channels = channels_of(cfg, rec.tensor.channels());
  for (const auto& b : bands) check_band_fits(b, rec.tensor);
  const fs::path dir = prepare_out_dir(cfg);

  std::ostringstream csv;
  csv << "channel,band,xi,n,p_value\n";
  Json summary = Json::array();
  for (const std::size_t c : channels) {
    for (const auto& b : bands) {
      const ClarkeResult r = compare_prepost(rec.tensor, c, b, pre, post, vc);
      Json payload = to_json(r, true);
      payload["channel"] = c + 1;
      payload["channel_name"] = rec.channel_names[c];
      payload["band"] = b.name;
      write_text_file((dir / ("prepost_ch" + std::to_string(c + 1) + "_" + b.name + ".json")).string(),
                      canonical_dump(envelope("compare-prepost", cfg, payload)));
      csv << c + 1 << ',' << b.name << ',' << r.xi << ',' << r.n << ',' << Json(r.p_value).dump()
          << '\n';
      summary.push_back(Json{{"channel", c + 1}, {"band", b.name}, {"xi", r.xi}, {"n", r.n},
                             {"p_value", r.p_value}});
      std::cout << "channel " << c + 1 << " " << b.name << ": xi=" << r.xi << "/" << r.n
                << " p=" << Json(r.p_value).dump() << '\n';
    }
  }
  write_text_file((dir / "prepost_summary.csv").string(), csv.str());
  write_text_file((dir / "prepost_summary.json").string(),
                  canonical_dump(envelope("compare-prepost", cfg, Json{{"results", summary}})));
  return kExitOk;
}

int cmd_compare_channels(const Json& cfg) {
  const auto bands = selected_bands(cfg);
  const VineConfig vc = vine_config_of(cfg);
  const LoadedRecording rec = load_input(cfg);
  const auto channels = channels_of(cfg, rec.tensor.channels());
  if (channels.size() < 2) throw UsageError("compare-channels needs at least 2 channels");
  EpochRange epochs{0, rec.tensor.epochs()};
  if (!cfg.at("epochs").is_null()) epochs = range_of(cfg.at("epochs"), "--epochs");
  if (epochs.last > rec.tensor.epochs()) {
    throw UsageError("epoch range exceeds the " + std::to_string(rec.tensor.epochs()) +
                     " epochs of the recording");
  }
  if (epochs.size() < 2) throw UsageError("compare-channels needs at least 2 epochs");
  for (const auto& b : bands) check_band_fits(b, rec.tensor);
  const fs::path dir = prepare_out_dir(cfg);

  for (const auto& b : bands) {
    const auto results = compare_channel_matrix(rec.tensor, channels, b, epochs, vc);
    Json pairs = Json::array();
    for (const auto& r : results) {
      Json p = to_json(r.result);
      p["channel_a"] = r.channel_a + 1;
      p["channel_b"] = r.channel_b + 1;
      pairs.push_back(p);
    }
    Json payload{{"band", b.name}, {"pairs", pairs}};
    write_text_file((dir / ("channels_" + b.name + ".json")).string(),
                    canonical_dump(envelope("compare-channels", cfg, payload)));
    write_text_file((dir / ("channels_" + b.name + ".csv")).string(), channel_matrix_csv(results));
    std::cout << b.name << ": " << results.size() << " channel pairs\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Copula-based changepoint detection and dependence comparison for LFP spectra",
               "copulacp"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string config_path, out_dir, input, format, thresholds, channels, band_names, pre, post,
      epochs, target, marginal, pseudo_obs, dgp, sim_format, name, noise;
  std::uint64_t seed = 0;
  std::size_t jobs = 0, grid = 0, blocks = 0, reps = 0, truncation = 0, latent = 0, n_epochs = 0,
              samples = 0, replicates = 0;
  double alpha = 0.0, rho = 0.0, fs_hz = 0.0;

  auto global = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--seed", seed, "Root seed");
    sub->add_option("--jobs", jobs, "Worker threads");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--grid", grid, "KS grid points per axis");
    sub->add_option("--alpha", alpha, "Significance level");
    sub->add_option("--blocks,-M", blocks, "Bootstrap blocks per epoch");
    sub->add_option("--reps,-B", reps, "Bootstrap replicates");
    sub->add_option("--truncation", truncation, "D-vine truncation level");
    sub->add_option("--rho", rho, "DGP 2 root modulus");
    sub->add_option("--noise", noise, "Reading of N(0, s): variance or stddev");
    sub->add_option("--bands", band_names, "Comma-separated band names");
    sub->add_option("--target", target, "KS target: joint or copula");
    sub->add_option("--marginal", marginal, "Marginal family: gamma or weibull");
  };
  auto input_opts = [&](CLI::App* sub) {
    sub->add_option("--input,-i", input, "Recording (.csv, or .bin with .bin.json sidecar)");
    sub->add_option("--format", format, "csv, binary or auto");
    sub->add_option("--samples", samples, "Samples per epoch (CSV input)");
    sub->add_option("--fs", fs_hz, "Sampling rate in Hz (CSV input)");
    sub->add_option("--channels", channels, "Comma-separated 1-based channels");
  };

  auto* sim = app.add_subcommand("simulate", "Write a synthetic recording");
  global(sim);
  sim->add_option("--dgp", dgp, "dgp1_A, dgp1_B, dgp1_AB, dgp2 or gate");
  sim->add_option("--latent", latent, "DGP 2 latent index 1..6");
  sim->add_option("--epochs", n_epochs, "Epochs per segment");
  sim->add_option("--samples", samples, "Samples per epoch");
  sim->add_option("--fs", fs_hz, "Sampling rate in Hz");
  sim->add_option("--format", sim_format, "csv or binary");
  sim->add_option("--name", name, "Output file stem");

  auto* cal = app.add_subcommand("calibrate", "Empirical null thresholds from simulation");
  global(cal);
  cal->add_option("--dgp", dgp, "dgp1 or dgp2");
  cal->add_option("--replicates", replicates, "Simulated recordings per DGP");
  cal->add_option("--epochs", n_epochs, "Epochs per simulated recording");
  cal->add_option("--samples", samples, "Samples per epoch");

  auto* det = app.add_subcommand("detect", "Changepoint detection per channel and band");
  global(det);
  input_opts(det);
  det->add_option("--thresholds", thresholds, "Threshold table JSON");

  auto* pp = app.add_subcommand("compare-prepost", "Clarke test of pre versus post D-vines");
  global(pp);
  input_opts(pp);
  pp->add_option("--pre", pre, "Pre epochs FIRST:LAST (1-based)");
  pp->add_option("--post", post, "Post epochs FIRST:LAST (1-based)");
  pp->add_option("--pseudo-obs", pseudo_obs, "bootstrap_gamma or ranks");

  auto* ch = app.add_subcommand("compare-channels", "Clarke tests between channel D-vines");
  global(ch);
  input_opts(ch);
  ch->add_option("--epochs", epochs, "Epochs FIRST:LAST (1-based)");
  ch->add_option("--pseudo-obs", pseudo_obs, "bootstrap_gamma or ranks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  auto given = [&](const char* flag) { return sub->get_option_no_throw(flag) && sub->count(flag) > 0; };

  try {
    Json cfg = default_config();
    if (given("--config")) {
      if (!fs::exists(config_path)) throw UsageError("config file not found: " + config_path);
      Json file;
      try {
        file = read_json_file(config_path);
      } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
      }
      // A previous report can serve as configuration.
      if (file.contains("config") && file.contains("tool_version")) file = file.at("config");
      if (!file.is_object()) throw UsageError(config_path + ": configuration must be an object");
      for (const auto& [key, value] : file.items()) {
        // "command" is recorded in reports and overridden by the subcommand.
        if (!cfg.contains(key) && key != "command") throw UsageError(config_path + ": unknown configuration key '" + key + "'");
      }
      cfg = merge_config(cfg, file);
    }

    Json f = Json::object();
    if (given("--seed")) f["seed"] = seed;
    if (given("--jobs")) f["jobs"] = jobs;
    if (given("--out-dir")) f["out_dir"] = out_dir;
    if (given("--grid")) f["grid"] = grid;
    if (given("--alpha")) f["alpha"] = alpha;
    if (given("--blocks")) f["bootstrap"]["blocks"] = blocks;
    if (given("--reps")) f["bootstrap"]["replicates"] = reps;
    if (given("--truncation")) f["truncation"] = truncation;
    if (given("--rho")) f["rho"] = rho;
    if (given("--noise")) f["noise"] = noise;
    if (given("--target")) f["target"] = target;
    if (given("--marginal")) f["marginal"] = marginal;
    if (given("--pseudo-obs")) f["pseudo_obs"] = pseudo_obs;
    if (given("--bands")) {
      Json names = Json::array();
      std::stringstream ss(band_names);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) names.push_back(item);
      }
      f["band_names"] = names;
    }
    if (given("--channels")) {
      Json list = Json::array();
      std::stringstream ss(channels);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          list.push_back(std::stoul(item));
        } catch (const std::exception&) {
          throw UsageError("--channels expects comma-separated integers, got '" + item + "'");
        }
      }
      f["channels"] = list;
    }
    if (given("--input")) f["input"]["path"] = input;
    if (given("--thresholds")) f["thresholds"] = thresholds;
    if (given("--pre")) f["pre"] = pre;
    if (given("--post")) f["post"] = post;

    if (command == "simulate") {
      if (given("--format")) f["simulate"]["format"] = sim_format;
      if (given("--name")) f["simulate"]["name"] = name;
      if (given("--samples")) f["simulate"]["samples_per_epoch"] = samples;
      if (given("--fs")) f["simulate"]["sampling_rate_hz"] = fs_hz;
      if (given("--dgp") || given("--latent") || given("--epochs")) {
        const std::string kind = given("--dgp") ? dgp : "dgp1_A";
        const std::size_t r = given("--epochs") ? n_epochs : (kind == "gate" ? 200 : 100);
        Json segs = Json::array();
        if (kind == "dgp1_AB") {
          segs = Json::array({dgp_json("dgp1_A", r), dgp_json("dgp1_B", r)});
          f["simulate"]["channels"] = Json::array({Json{{"segments", segs}}});
        } else if (kind == "gate") {
          f["simulate"]["channels"] = Json::array({Json{{"kind", "gate"}, {"epochs", r}}});
        } else {
          Json seg = dgp_json(kind, r);
          if (given("--latent")) seg["latent"] = latent;
          f["simulate"]["channels"] = Json::array({Json{{"segments", Json::array({seg})}}});
        }
      }
    } else if (command == "calibrate") {
      if (given("--dgp")) f["calibrate"]["dgp"] = dgp;
      if (given("--replicates")) f["calibrate"]["replicates"] = replicates;
      if (given("--epochs")) f["calibrate"]["epochs"] = n_epochs;
      if (given("--samples")) f["calibrate"]["samples_per_epoch"] = samples;
    } else {
      if (given("--format")) f["input"]["format"] = format;
      if (given("--samples")) f["input"]["samples_per_epoch"] = samples;
      if (given("--fs")) f["input"]["sampling_rate_hz"] = fs_hz;
      if (given("--epochs")) f["epochs"] = epochs;
    }
    cfg = merge_config(cfg, f);
    cfg["command"] = command;

    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "calibrate") return cmd_calibrate(cfg);
    if (command == "detect") return cmd_detect(cfg);
    if (command == "compare-prepost") return cmd_compare_prepost(cfg);
    return cmd_compare_channels(cfg);
  } catch (const UsageError& e) {
    std::cerr << "copulacp " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "copulacp " << command << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "copulacp " << command << ": configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "copulacp " << command << ": " << e.what() << '\n';
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"copulacp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace copulacp::cli
