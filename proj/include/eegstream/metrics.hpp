#pragma once

#include <vector>

#include "eegstream/tensor.hpp"

namespace eegstream {

struct Scored {
    double score = 0.0;
    int label = 0;  // 0 or 1
};

using ScoredSet = std::vector<Scored>;

// Mann-Whitney AUROC: P(score+ > score-) + 0.5 P(tie), exact via midranks.
// Throws undefined_metric_error unless both classes are present.
double auroc(const ScoredSet& set);

// Area under the precision-recall curve with the interpolated-precision
// convention: AUPR = sum over recall steps of (R_i - R_{i-1}) * P_env(R_i),
// where P_env(r) = max precision over thresholds with recall >= r. Ties in
// score are grouped into a single threshold.
double aupr(const ScoredSet& set);

// (TPR + TNR) / 2 with prediction rule score >= threshold.
double balanced_accuracy(const ScoredSet& set, double threshold);

// argmax over observed scores of TPR - FPR; ties broken toward the lower
// threshold.
double youden_threshold(const ScoredSet& set);

}  // namespace eegstream
