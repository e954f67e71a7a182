#include "copulacp/report_json.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace copulacp {

std::string tool_version() { return COPULACP_VERSION; }

namespace {

std::string num(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf.data(), ptr);
}

}  // namespace

Json to_json(const CopulaModel& model) {
  return Json{{"family", to_string(model.family)},
              {"theta", model.theta},
              {"source", to_string(model.source)}};
}

CopulaModel copula_model_from_json(const Json& j) {
  CopulaModel m;
  m.family = copula_family_from_string(j.at("family").get<std::string>());
  m.theta = j.at("theta").get<double>();
  m.source = theta_source_from_string(j.value("source", std::string("fixed")));
  validate_copula(m);
  return m;
}

Json to_json(const MarginalFit& fit) {
  return Json{{"family", to_string(fit.family)},
              {"shape", fit.shape},
              {"rate", fit.rate},
              {"n_effective", fit.n_effective},
              {"loglik", fit.loglik}};
}

Json to_json(const ThresholdTable& table) {
  Json bands = Json::object();
  for (const auto& [band, value] : table.thresholds) {
    Json b{{"threshold", value}, {"alpha", table.alpha}, {"source", table.source}};
    auto it = table.n_null_stats.find(band);
    if (it != table.n_null_stats.end()) b["n_null_stats"] = it->second;
    bands[band] = b;
  }
  return Json{{"alpha", table.alpha},
              {"source", table.source},
              {"seed", table.seed},
              {"replicates", table.replicates},
              {"thresholds", bands}};
}

ThresholdTable threshold_table_from_json(const Json& j) {
  if (!j.is_object()) throw std::runtime_error("threshold table must be a JSON object");
  // A full calibrate report: the table lives under "result".
  if (j.contains("result") && j.contains("tool")) return threshold_table_from_json(j.at("result"));
  ThresholdTable t;
  t.source = "custom";
  const Json* bands = &j;
  if (j.contains("thresholds")) {
    bands = &j.at("thresholds");
    t.alpha = j.value("alpha", 0.01);
    t.source = j.value("source", std::string("custom"));
    t.seed = j.value("seed", std::uint64_t{0});
    t.replicates = j.value("replicates", std::size_t{0});
  }
  bool alpha_seen = j.contains("thresholds");
  for (const auto& [band, value] : bands->items()) {
    double x = 0.0;
    if (value.is_number()) {
      x = value.get<double>();
    } else if (value.is_object()) {
      x = value.at("threshold").get<double>();
      if (!alpha_seen && value.contains("alpha")) {
        t.alpha = value.at("alpha").get<double>();
        alpha_seen = true;
      }
      if (value.contains("source") && !j.contains("thresholds")) {
        t.source = value.at("source").get<std::string>();
      }
      if (value.contains("n_null_stats")) {
        t.n_null_stats[band] = value.at("n_null_stats").get<std::size_t>();
      }
    } else {
      throw std::runtime_error("threshold for band '" + band + "' must be a number or object");
    }
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::runtime_error("threshold for band '" + band + "' must lie in [0, 1]");
    }
    t.thresholds[band] = x;
  }
  if (t.thresholds.empty()) throw std::runtime_error("threshold table lists no bands");
  return t;
}

ThresholdTable read_threshold_table(const std::string& path) {
  try {
    return threshold_table_from_json(read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

Json to_json(const ClarkeResult& result, bool include_m) {
  Json j{{"xi", result.xi}, {"n", result.n}, {"p_value", result.p_value}};
  if (include_m) j["m"] = result.m;
  return j;
}

Json to_json(const ChangepointReport& report, bool include_models) {
  Json j;
  j["channel"] = report.channel + 1;
  j["band"] = report.band;
  j["threshold"] = report.threshold;
  j["alpha"] = report.alpha;
  j["flagged_epochs"] = report.flagged_epochs;
  j["ks"] = Json{{"grid_size", report.ks.grid_size},
                 {"epochs", report.ks.epochs},
                 {"stats", report.ks.stats}};
  if (include_models) {
    Json marginals = Json::array();
    for (std::size_t r = 0; r < report.marginals.size(); ++r) {
      Json m = to_json(report.marginals[r]);
      m["epoch"] = r + 1;
      m["channel"] = report.channel + 1;
      m["band"] = report.band;
      marginals.push_back(m);
    }
    Json pairs = Json::array();
    for (std::size_t r = 0; r < report.pair_copulas.size(); ++r) {
      Json p = to_json(report.pair_copulas[r]);
      p["epochs"] = {r + 1, r + 2};
      pairs.push_back(p);
    }
    j["marginals"] = marginals;
    j["pair_copulas"] = pairs;
  }
  return j;
}

std::string ks_series_csv(const KsSeries& ks) {
  std::ostringstream out;
  out << "epoch,D\n";
  for (std::size_t i = 0; i < ks.stats.size(); ++i) out << ks.epochs[i] << ',' << num(ks.stats[i]) << '\n';
  return out.str();
}

std::string channel_matrix_csv(std::span<const ChannelPairResult> results) {
  std::ostringstream out;
  out << "channel_a,channel_b,xi,n,p_value\n";
  for (const auto& r : results) {
    out << r.channel_a + 1 << ',' << r.channel_b + 1 << ',' << r.result.xi << ',' << r.result.n
        << ',' << num(r.result.p_value) << '\n';
  }
  return out.str();
}

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace copulacp
