#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace gfsl {

// Binary confusion counts; label 1 is the positive class.
struct ConfusionMatrix {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct MetricSet {
    double sensitivity = 0.0;  // TP / (TP + FN)
    double specificity = 0.0;  // TN / (TN + FP)
    double f1 = 0.0;           // 2TP / (2TP + FP + FN)
    double accuracy = 0.0;     // (TP + TN) / total
    double mcc = 0.0;          // (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))
    double threshold = 0.5;    // cutoff used to binarize
    // True when any denominator above was zero; that metric is reported as 0.
    bool zero_denominator = false;
};

// Predict positive (1) iff score >= threshold.
std::vector<int> binarize(const std::vector<double>& scores, double threshold);

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

// Throws DataError on an all-zero matrix (empty evaluation).
MetricSet metrics(const ConfusionMatrix& cm, double threshold);

// Metrics at every grid threshold, in grid order.
std::vector<std::pair<double, MetricSet>> threshold_sweep(const std::vector<double>& scores,
                                                          const std::vector<int>& labels,
                                                          const std::vector<double>& grid);

// 0.00, 0.05, ..., 1.00
std::vector<double> default_threshold_grid();

struct WilsonInterval {
    double low = 0.0;
    double high = 1.0;
};

// Wilson score interval for a binomial proportion.
WilsonInterval wilson_interval(long long successes, long long trials, double confidence);

// Inverse standard normal CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p);

}  // namespace gfsl
