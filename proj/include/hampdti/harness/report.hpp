#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hampdti/harness/dataset.hpp"
#include "hampdti/harness/experiment.hpp"

namespace hampdti {

// Config files are JSON objects mirroring ExperimentConfig:
//   {"seed": 7, "model": {"dim": 64, ...}, "train": {...}, "pretrain": {...},
//    "split": {"kind": "cv", ...}, "no_features": false, ...}
// Every key is optional. Unknown keys are rejected so typos don't pass
// silently.
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

nlohmann::ordered_json metrics_to_json(const MetricRow& m);
nlohmann::ordered_json report_to_json(const EvalReport& rep);

// Writes report.json, report.csv, predictions.csv, metapaths.csv (when the
// model had meta-path channels) and plots/{roc,metrics,metapaths}.svg into
// `dir`. Output depends only on the report, so equal runs give equal bytes.
void write_report(const std::filesystem::path& dir, const EvalReport& rep, const Dataset& ds);

// Several reports side by side (ablation runs): comparison.csv and
// plots/comparison.svg, plus report.json holding every run.
void write_comparison(const std::filesystem::path& dir, const std::vector<EvalReport>& reps);

void write_metapaths_csv(const std::filesystem::path& path, const metapath::MetaPathScoreReport& rep);

// Minimal SVG charts.
struct Series {
  std::string label;
  std::vector<double> values;
};
std::string svg_bars(const std::string& title, const std::vector<std::string>& groups, const std::vector<Series>& series);
std::string svg_roc(const std::string& title, const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves);

}  // namespace hampdti
