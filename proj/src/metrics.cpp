#include "eegstream/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace eegstream {

namespace {

void count_classes(const ScoredSet& set, size_t& pos, size_t& neg) {
    pos = neg = 0;
    for (const Scored& s : set) (s.label ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw undefined_metric_error("metric undefined: need both classes present");
}

}  // namespace

double auroc(const ScoredSet& set) {
    size_t pos, neg;
    count_classes(set, pos, neg);
    ScoredSet v = set;
    std::sort(v.begin(), v.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });
    // midrank sum over positives
    double rank_sum = 0.0;
    size_t i = 0;
    while (i < v.size()) {
        size_t j = i;
        while (j < v.size() && v[j].score == v[i].score) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (size_t k = i; k < j; ++k)
            if (v[k].label) rank_sum += midrank;
        i = j;
    }
    const double u = rank_sum - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double aupr(const ScoredSet& set) {
    size_t pos, neg;
    count_classes(set, pos, neg);
    ScoredSet v = set;
    std::sort(v.begin(), v.end(),
              [](const Scored& a, const Scored& b) { return a.score > b.score; });

    // One (recall, precision) point per unique score threshold, descending.
    std::vector<std::pair<double, double>> pr;  // (recall, precision)
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < v.size()) {
        size_t j = i;
        while (j < v.size() && v[j].score == v[i].score) {
            (v[j].label ? tp : fp) += 1;
            ++j;
        }
        pr.emplace_back(static_cast<double>(tp) / static_cast<double>(pos),
                        static_cast<double>(tp) / static_cast<double>(tp + fp));
        i = j;
    }
    // Precision envelope: best precision at recall >= r.
    for (size_t k = pr.size() - 1; k-- > 0;)
        pr[k].second = std::max(pr[k].second, pr[k + 1].second);

    double area = 0.0;
    double prev_recall = 0.0;
    for (const auto& [recall, precision] : pr) {
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

double balanced_accuracy(const ScoredSet& set, double threshold) {
    size_t pos, neg;
    count_classes(set, pos, neg);
    size_t tp = 0, tn = 0;
    for (const Scored& s : set) {
        const bool pred = s.score >= threshold;
        if (s.label && pred) ++tp;
        if (!s.label && !pred) ++tn;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double tnr = static_cast<double>(tn) / static_cast<double>(neg);
    return 0.5 * (tpr + tnr);
}

double youden_threshold(const ScoredSet& set) {
    size_t pos, neg;
    count_classes(set, pos, neg);
    Vec thresholds;
    thresholds.reserve(set.size());
    for (const Scored& s : set) thresholds.push_back(s.score);
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    double best_t = thresholds.front();
    double best_j = -2.0;
    for (double t : thresholds) {
        size_t tp = 0, fp = 0;
        for (const Scored& s : set) {
            if (s.score >= t) (s.label ? tp : fp) += 1;
        }
        const double j = static_cast<double>(tp) / static_cast<double>(pos) -
                         static_cast<double>(fp) / static_cast<double>(neg);
        if (j > best_j) {  // strict: ties keep the lower threshold
            best_j = j;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace eegstream
