#include "hampdti/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hampdti/error.hpp"
#include "hampdti/tensor/io.hpp"

namespace hampdti {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Reads the keys of one config object, rejecting anything not claimed.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Fields() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
  }

  void size(const char* key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void u64(const char* key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void real(const char* key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void flag(const char* key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(key, "true or false");
      out = v->get<bool>();
    }
  }
  void text(const char* key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void sizes(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(key, "an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned()) fail(key, "an array of integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  const json* find(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

 private:
  [[noreturn]] void fail(const char* key, const char* what) {
    throw ConfigError(where_ + "." + key + ": expected " + what);
  }
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string aggregation_name(metapath::ChannelAggregation a) {
  return a == metapath::ChannelAggregation::max ? "max" : "sum";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

// CSV field; quotes only when needed.
std::string csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string num(double v) { return tensor::format_double(v); }

std::string fixed(double v, int prec = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char c : s) {
    switch (c) {
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '&': r += "&amp;"; break;
      case '"': r += "&quot;"; break;
      default: r += c;
    }
  }
  return r;
}

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                          "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"};

const std::vector<std::string> kMetricNames = {"roc_auc", "pr_auc", "f1", "accuracy", "recall", "specificity",
                                               "precision"};

std::vector<double> metric_values(const MetricRow& m) {
  return {m.roc_auc, m.pr_auc, m.f1, m.accuracy, m.recall, m.specificity, m.precision};
}

std::string metric_cells(const MetricRow& m) {
  std::string s;
  for (double v : metric_values(m)) s += "," + num(v);
  return s;
}

}  // namespace

ordered_json config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["model"] = {{"dim", cfg.model.dim},
                {"hidden", cfg.model.hidden},
                {"channels", cfg.model.channels},
                {"length", cfg.model.length},
                {"steps", cfg.model.steps},
                {"gamma", cfg.model.gamma},
                {"selection_init", cfg.model.selection_init},
                {"use_metapaths", cfg.model.use_metapaths},
                {"use_dti_graph", cfg.model.use_dti_graph},
                {"entangled", cfg.model.entangled},
                {"seed", cfg.model.seed}};
  j["train"] = {{"epochs", cfg.train.epochs}, {"lr", cfg.train.lr}, {"patience", cfg.train.patience}};
  j["pretrain"] = {{"dim", cfg.pretrain.dim},       {"drug_hidden", cfg.pretrain.drug_hidden},
                   {"protein_hidden", cfg.pretrain.protein_hidden}, {"epochs", cfg.pretrain.epochs},
                   {"lr", cfg.pretrain.lr},         {"gamma", cfg.pretrain.gamma},
                   {"seed", cfg.pretrain.seed}};
  j["split"] = {{"kind", to_string(cfg.split.kind)},
                {"folds", cfg.split.folds},
                {"holdout_fraction", cfg.split.holdout_fraction},
                {"val_fraction", cfg.split.val_fraction},
                {"jaccard_relation", cfg.split.jaccard_relation},
                {"jaccard_threshold", cfg.split.jaccard_threshold},
                {"seed", cfg.split.seed}};
  j["no_features"] = cfg.no_features;
  j["max_folds"] = cfg.max_folds;
  j["prune_keep_mass"] = cfg.prune_keep_mass;
  j["aggregation"] = aggregation_name(cfg.aggregation);
  j["fold_threads"] = cfg.fold_threads;
  return j;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig cfg) {
  Fields top(j, "config");
  // the top-level seed goes first so section seeds can still override it
  if (const json* s = top.find("seed")) {
    if (!s->is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
    cfg.apply_seed(s->get<std::uint64_t>());
  }
  if (const json* m = top.find("model")) {
    Fields f(*m, "config.model");
    f.size("dim", cfg.model.dim);
    f.sizes("hidden", cfg.model.hidden);
    f.size("channels", cfg.model.channels);
    f.size("length", cfg.model.length);
    f.size("steps", cfg.model.steps);
    f.real("gamma", cfg.model.gamma);
    f.real("selection_init", cfg.model.selection_init);
    f.flag("use_metapaths", cfg.model.use_metapaths);
    f.flag("use_dti_graph", cfg.model.use_dti_graph);
    f.flag("entangled", cfg.model.entangled);
    f.u64("seed", cfg.model.seed);
  }
  if (const json* t = top.find("train")) {
    Fields f(*t, "config.train");
    f.size("epochs", cfg.train.epochs);
    f.real("lr", cfg.train.lr);
    f.size("patience", cfg.train.patience);
  }
  if (const json* p = top.find("pretrain")) {
    Fields f(*p, "config.pretrain");
    f.size("dim", cfg.pretrain.dim);
    f.sizes("drug_hidden", cfg.pretrain.drug_hidden);
    f.sizes("protein_hidden", cfg.pretrain.protein_hidden);
    f.size("epochs", cfg.pretrain.epochs);
    f.real("lr", cfg.pretrain.lr);
    f.real("gamma", cfg.pretrain.gamma);
    f.u64("seed", cfg.pretrain.seed);
  }
  if (const json* s = top.find("split")) {
    Fields f(*s, "config.split");
    std::string kind = to_string(cfg.split.kind);
    f.text("kind", kind);
    cfg.split.kind = parse_split_kind(kind);
    f.size("folds", cfg.split.folds);
    f.real("holdout_fraction", cfg.split.holdout_fraction);
    f.real("val_fraction", cfg.split.val_fraction);
    f.text("jaccard_relation", cfg.split.jaccard_relation);
    f.real("jaccard_threshold", cfg.split.jaccard_threshold);
    f.u64("seed", cfg.split.seed);
  }
  top.flag("no_features", cfg.no_features);
  top.size("max_folds", cfg.max_folds);
  top.real("prune_keep_mass", cfg.prune_keep_mass);
  std::string agg = aggregation_name(cfg.aggregation);
  top.text("aggregation", agg);
  if (agg == "max") {
    cfg.aggregation = metapath::ChannelAggregation::max;
  } else if (agg == "sum") {
    cfg.aggregation = metapath::ChannelAggregation::sum;
  } else {
    throw ConfigError("config.aggregation: expected \"max\" or \"sum\"");
  }
  top.size("fold_threads", cfg.fold_threads);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ordered_json metrics_to_json(const MetricRow& m) {
  ordered_json j;
  const auto v = metric_values(m);
  for (std::size_t i = 0; i < v.size(); ++i) j[kMetricNames[i]] = v[i];
  return j;
}

ordered_json report_to_json(const EvalReport& rep) {
  ordered_json j;
  j["name"] = rep.name;
  j["config"] = config_to_json(rep.config);
  ordered_json folds = ordered_json::array();
  for (const auto& f : rep.folds) {
    ordered_json fj;
    fj["fold"] = f.fold;
    fj["train_pairs"] = f.train_pairs;
    fj["val_pairs"] = f.val_pairs;
    fj["test_pairs"] = f.test_pairs;
    fj["metrics"] = metrics_to_json(f.metrics);
    if (f.pruned) fj["pruned"] = metrics_to_json(*f.pruned);
    fj["epochs_run"] = f.epochs_run;
    fj["best_epoch"] = f.best_epoch;
    fj["final_loss"] = f.final_loss;
    fj["fusion_weights"] = f.fusion_weights;
    fj["selections"] = f.selections;
    fj["fingerprint"] = hex64(f.fingerprint);
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  j["mean"] = metrics_to_json(rep.mean);
  j["stddev"] = metrics_to_json(rep.stddev);
  if (rep.pruned_mean) j["pruned_mean"] = metrics_to_json(*rep.pruned_mean);
  if (rep.metapaths) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.metapaths->rows)
      rows.push_back({{"metapath", r.description}, {"score", r.score}, {"relative_score", r.relative}});
    j["metapaths"] = std::move(rows);
  }
  return j;
}

void write_metapaths_csv(const std::filesystem::path& path, const metapath::MetaPathScoreReport& rep) {
  std::string s = "metapath,score,relative_score\n";
  for (const auto& r : rep.rows) s += csv(r.description) + "," + num(r.score) + "," + num(r.relative) + "\n";
  write_text(path, s);
}

void write_report(const std::filesystem::path& dir, const EvalReport& rep, const Dataset& ds) {
  std::filesystem::create_directories(dir / "plots");
  write_text(dir / "report.json", report_to_json(rep).dump(2) + "\n");

  std::string table = "row";
  for (const auto& n : kMetricNames) table += "," + n;
  table += "\n";
  for (const auto& f : rep.folds) table += "fold" + std::to_string(f.fold) + metric_cells(f.metrics) + "\n";
  table += "mean" + metric_cells(rep.mean) + "\n";
  table += "std" + metric_cells(rep.stddev) + "\n";
  if (rep.pruned_mean) table += "pruned_mean" + metric_cells(*rep.pruned_mean) + "\n";
  write_text(dir / "report.csv", table);

  std::string pred = "drug_id,protein_id,score,label,fold\n";
  for (const auto& f : rep.folds)
    for (const auto& p : f.predictions)
      pred += csv(ds.ids[0].at(p.drug)) + "," + csv(ds.ids[1].at(p.protein)) + "," + num(p.score) + "," +
              std::to_string(static_cast<int>(p.label)) + "," + std::to_string(p.fold) + "\n";
  write_text(dir / "predictions.csv", pred);

  std::vector<std::pair<std::string, std::vector<RocPoint>>> curves;
  for (const auto& f : rep.folds) {
    std::vector<double> s, y;
    for (const auto& p : f.predictions) {
      s.push_back(p.score);
      y.push_back(p.label);
    }
    curves.emplace_back("fold " + std::to_string(f.fold) + " (AUC " + fixed(f.metrics.roc_auc, 3) + ")",
                        roc_curve(s, y));
  }
  write_text(dir / "plots" / "roc.svg", svg_roc(rep.name + ": ROC per fold", curves));

  std::vector<Series> bars = {{"mean", metric_values(rep.mean)}};
  if (rep.pruned_mean) bars.push_back({"pruned", metric_values(*rep.pruned_mean)});
  write_text(dir / "plots" / "metrics.svg", svg_bars(rep.name + ": mean test metrics", kMetricNames, bars));

  if (rep.metapaths) {
    write_metapaths_csv(dir / "metapaths.csv", *rep.metapaths);
    std::vector<std::string> names;
    Series rel{"relative score", {}};
    for (const auto& r : rep.metapaths->rows) {
      names.push_back(r.description);
      rel.values.push_back(r.relative);
    }
    write_text(dir / "plots" / "metapaths.svg", svg_bars(rep.name + ": relative meta-path scores", names, {rel}));
  }
}

void write_comparison(const std::filesystem::path& dir, const std::vector<EvalReport>& reps) {
  std::filesystem::create_directories(dir / "plots");
  ordered_json all = ordered_json::array();
  std::string table = "variant";
  for (const auto& n : kMetricNames) table += "," + n + "," + n + "_std";
  table += "\n";
  std::vector<Series> bars;
  for (const auto& r : reps) {
    all.push_back(report_to_json(r));
    table += csv(r.name);
    const auto m = metric_values(r.mean), s = metric_values(r.stddev);
    for (std::size_t i = 0; i < m.size(); ++i) table += "," + num(m[i]) + "," + num(s[i]);
    table += "\n";
    bars.push_back({r.name, m});
  }
  write_text(dir / "report.json", all.dump(2) + "\n");
  write_text(dir / "comparison.csv", table);
  write_text(dir / "plots" / "comparison.svg", svg_bars("mean test metrics by variant", kMetricNames, bars));
}

namespace {

constexpr double kW = 720, kH = 420, kLeft = 60, kRight = 180, kTop = 40, kBottom = 120;

std::string svg_open(const std::string& title) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
    << kW << " " << kH << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
    << "</text>\n";
  return o.str();
}

// y axis from 0 to ymax with five ticks
std::string y_axis(double ymax) {
  std::ostringstream o;
  const double h = kH - kTop - kBottom;
  for (int i = 0; i <= 5; ++i) {
    const double v = ymax * i / 5.0, y = kH - kBottom - h * i / 5.0;
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kW - kRight << "\" y1=\"" << fixed(y) << "\" y2=\"" << fixed(y)
      << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">" << fixed(v) << "</text>\n";
  }
  o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft << "\" y1=\"" << kTop << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << kLeft << "\" x2=\"" << kW - kRight << "\" y1=\"" << kH - kBottom << "\" y2=\"" << kH - kBottom
    << "\" stroke=\"black\"/>\n";
  return o.str();
}

std::string legend(const std::vector<std::string>& labels) {
  std::ostringstream o;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kTop + 16.0 * static_cast<double>(i);
    o << "<rect x=\"" << kW - kRight + 12 << "\" y=\"" << fixed(y) << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % 10] << "\"/>\n";
    o << "<text x=\"" << kW - kRight + 26 << "\" y=\"" << fixed(y + 9) << "\">" << xml_escape(labels[i])
      << "</text>\n";
  }
  return o.str();
}

}  // namespace

std::string svg_bars(const std::string& title, const std::vector<std::string>& groups, const std::vector<Series>& series) {
  double top = 0.0;
  for (const auto& s : series)
    for (double v : s.values) top = std::max(top, v);
  const double ymax = std::max(0.1, std::ceil(top * 10.0 - 1e-9) / 10.0);
  std::string out = svg_open(title) + y_axis(ymax);
  const double w = kW - kLeft - kRight, h = kH - kTop - kBottom;
  const double gw = groups.empty() ? w : w / static_cast<double>(groups.size());
  const double bw = series.empty() ? 0.0 : gw * 0.8 / static_cast<double>(series.size());
  std::ostringstream o;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double x0 = kLeft + gw * static_cast<double>(g) + gw * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = g < series[s].values.size() ? std::max(0.0, series[s].values[g]) : 0.0;
      const double bh = h * v / ymax;
      o << "<rect x=\"" << fixed(x0 + bw * static_cast<double>(s)) << "\" y=\"" << fixed(kH - kBottom - bh)
        << "\" width=\"" << fixed(bw) << "\" height=\"" << fixed(bh) << "\" fill=\"" << kPalette[s % 10]
        << "\"><title>" << xml_escape(series[s].label + " " + groups[g] + ": " + fixed(v, 4)) << "</title></rect>\n";
    }
    const double cx = kLeft + gw * (static_cast<double>(g) + 0.5), cy = kH - kBottom + 12;
    o << "<text x=\"" << fixed(cx) << "\" y=\"" << fixed(cy) << "\" text-anchor=\"end\" transform=\"rotate(-35 "
      << fixed(cx) << " " << fixed(cy) << ")\">" << xml_escape(groups[g]) << "</text>\n";
  }
  out += o.str();
  std::vector<std::string> labels;
  for (const auto& s : series) labels.push_back(s.label);
  return out + legend(labels) + "</svg>\n";
}

std::string svg_roc(const std::string& title, const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves) {
  std::string out = svg_open(title) + y_axis(1.0);
  const double w = kW - kLeft - kRight, h = kH - kTop - kBottom;
  auto px = [&](double f) { return fixed(kLeft + w * f); };
  auto py = [&](double t) { return fixed(kH - kBottom - h * t); };
  std::ostringstream o;
  for (int i = 0; i <= 5; ++i)
    o << "<text x=\"" << px(i / 5.0) << "\" y=\"" << fixed(kH - kBottom + 14) << "\" text-anchor=\"middle\">"
      << fixed(i / 5.0) << "</text>\n";
  o << "<text x=\"" << px(0.5) << "\" y=\"" << fixed(kH - kBottom + 30)
    << "\" text-anchor=\"middle\">false positive rate</text>\n";
  o << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
    << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    o << "<polyline fill=\"none\" stroke=\"" << kPalette[c % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < curves[c].second.size(); ++i)
      o << (i ? " " : "") << px(curves[c].second[i].fpr) << "," << py(curves[c].second[i].tpr);
    o << "\"/>\n";
    labels.push_back(curves[c].first);
  }
  out += o.str();
  return out + legend(labels) + "</svg>\n";
}

}  // namespace hampdti
