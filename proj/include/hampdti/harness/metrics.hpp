#pragma once

#include <span>
#include <vector>

namespace hampdti {

struct MetricRow {
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
};

// Rank statistic with average ranks, so tied pairs count one half.
double roc_auc(std::span<const double> scores, std::span<const double> labels);
// Average precision: sum over distinct thresholds of (recall step) * precision.
double pr_auc(std::span<const double> scores, std::span<const double> labels);

// Scores min-max rescaled to [0, 1] within the evaluated set. A constant set
// maps to 0.5.
std::vector<double> rescale_min_max(std::span<const double> scores);

// All seven metrics. Labels are 0/1; thresholded metrics use rescaled score
// >= 0.5. Throws Error unless both classes are present.
MetricRow compute_metrics(std::span<const double> scores, std::span<const double> labels, double threshold = 0.5);

struct RocPoint {
  double fpr;
  double tpr;
};
// ROC curve vertices at every distinct threshold, from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const double> labels);

}  // namespace hampdti
