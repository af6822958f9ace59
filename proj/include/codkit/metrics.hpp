#pragma once

#include <optional>
#include <string>
#include <vector>

#include "codkit/tensor.hpp"

namespace codkit {

/// Mean absolute error between p in [0,1] and a binary g.
double mae(const Tensor& p, const Tensor& g);

/// Structure measure: alpha * object term + (1-alpha) * region term.
/// Degenerate conventions: all-zero g -> 1 - mean(p); all-one g -> mean(p).
double s_measure(const Tensor& p, const Tensor& g, double alpha = 0.5);

/// Mean enhanced-alignment measure: the binary E-measure averaged over 256
/// bin-centered thresholds (i + 0.5)/256, i = 0..255. Binary maps binarize
/// to themselves at every level, so perfect predictions score exactly 1.
double e_measure_mean(const Tensor& p, const Tensor& g);

/// Weighted F-measure (dependency-propagated, importance-weighted precision
/// and recall). Throws EmptyGroundTruth when g has no foreground.
double weighted_f(const Tensor& p, const Tensor& g, double beta2 = 1.0);

struct PerImageMetrics {
    std::string id;
    double s_measure = 0.0;
    double e_measure = 0.0;
    std::optional<double> weighted_f;  // empty when the ground truth had no foreground
    double mae = 0.0;
};

struct MetricReport {
    std::vector<PerImageMetrics> per_image;  // ordered by filename
    double agg_s = 0.0, agg_e = 0.0, agg_f = 0.0, agg_mae = 0.0;
    int n_images = 0;
    int n_f_scored = 0;                  // images contributing to agg_f
    std::vector<std::string> missing;    // filenames without a counterpart
    std::vector<std::string> unreadable; // files that failed to decode
};

/// Score every prediction in pred_dir against the same-named file in gt_dir.
/// Predictions are min-max normalized per image before scoring; ground truths
/// binarize at 0.5. Deterministic filename order; per-image scoring runs in
/// parallel.
MetricReport evaluate_dataset(const std::string& pred_dir, const std::string& gt_dir);

}  // namespace codkit
