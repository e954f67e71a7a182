#pragma once

#include <span>
#include <string>

#include "copulacp/archimedean.hpp"
#include "copulacp/calibration.hpp"
#include "copulacp/dvine_compare.hpp"
#include "copulacp/ks_change.hpp"
#include "copulacp/marginals.hpp"
#include "json.hpp"

namespace copulacp {

using Json = nlohmann::json;  // std::map backed, so keys come out sorted

std::string tool_version();

Json to_json(const CopulaModel& model);
CopulaModel copula_model_from_json(const Json& j);

// Epoch is 1-based; omitted when the fit is not tied to an epoch.
Json to_json(const MarginalFit& fit);

// {"alpha", "source", "seed", "replicates", "thresholds": {band: {threshold,
// alpha, source, n_null_stats}}}
Json to_json(const ThresholdTable& table);

// Accepts the document above or a bare {band: number | {threshold: ...}} map.
ThresholdTable threshold_table_from_json(const Json& j);
ThresholdTable read_threshold_table(const std::string& path);

Json to_json(const ClarkeResult& result, bool include_m = false);

// Channel and epochs are 1-based in the document.
Json to_json(const ChangepointReport& report, bool include_models = true);

// epoch,D rows of the KS series.
std::string ks_series_csv(const KsSeries& ks);

// channel_a,channel_b,xi,n,p_value rows (1-based channels).
std::string channel_matrix_csv(std::span<const ChannelPairResult> results);

std::string canonical_dump(const Json& j);
void write_text_file(const std::string& path, const std::string& content);
Json read_json_file(const std::string& path);

}  // namespace copulacp
