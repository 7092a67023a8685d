#include "gfsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gfsl/error.hpp"

namespace gfsl {

std::vector<int> binarize(const std::vector<double>& scores, double threshold) {
    std::vector<int> predictions(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        predictions[i] = scores[i] >= threshold ? 1 : 0;
    }
    return predictions;
}

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size()) {
        throw DataError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
            throw DataError("confusion: predictions and labels must be 0 or 1");
        }
        if (y == 1) {
            p == 1 ? ++cm.tp : ++cm.fn;
        } else {
            p == 1 ? ++cm.fp : ++cm.tn;
        }
    }
    return cm;
}

namespace {

// count / denom with the documented zero-denominator convention.
double ratio(long long numer, long long denom, bool& zero_flag) {
    if (denom == 0) {
        zero_flag = true;
        return 0.0;
    }
    return static_cast<double>(numer) / static_cast<double>(denom);
}

}  // namespace

MetricSet metrics(const ConfusionMatrix& cm, double threshold) {
    if (cm.total() == 0) {
        throw DataError("metrics: empty confusion matrix (no evaluations)");
    }
    if (cm.tp < 0 || cm.fp < 0 || cm.tn < 0 || cm.fn < 0) {
        throw DataError("metrics: negative count in confusion matrix");
    }
    MetricSet m;
    m.threshold = threshold;
    m.sensitivity = ratio(cm.tp, cm.tp + cm.fn, m.zero_denominator);
    m.specificity = ratio(cm.tn, cm.tn + cm.fp, m.zero_denominator);
    m.f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn, m.zero_denominator);
    m.accuracy = ratio(cm.tp + cm.tn, cm.total(), m.zero_denominator);

    const double d1 = static_cast<double>(cm.tp + cm.fp);
    const double d2 = static_cast<double>(cm.tp + cm.fn);
    const double d3 = static_cast<double>(cm.tn + cm.fp);
    const double d4 = static_cast<double>(cm.tn + cm.fn);
    const double denom = d1 * d2 * d3 * d4;
    if (denom == 0.0) {
        m.zero_denominator = true;
        m.mcc = 0.0;
    } else {
        m.mcc = (static_cast<double>(cm.tp) * static_cast<double>(cm.tn) -
                 static_cast<double>(cm.fp) * static_cast<double>(cm.fn)) /
                std::sqrt(denom);
    }
    return m;
}

std::vector<std::pair<double, MetricSet>> threshold_sweep(const std::vector<double>& scores,
                                                          const std::vector<int>& labels,
                                                          const std::vector<double>& grid) {
    std::vector<std::pair<double, MetricSet>> sweep;
    sweep.reserve(grid.size());
    for (double threshold : grid) {
        sweep.emplace_back(threshold, metrics(confusion(binarize(scores, threshold), labels),
                                              threshold));
    }
    return sweep;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid(21);
    for (int i = 0; i <= 20; ++i) {
        grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / 20.0;
    }
    return grid;
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DataError("inverse_normal_cdf: p must be in (0, 1), got " + std::to_string(p));
    }
    // Acklam's rational approximation, |relative error| < 1.2e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    const double p_high = 1.0 - p_low;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= p_high) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

WilsonInterval wilson_interval(long long successes, long long trials, double confidence) {
    if (trials < 1) {
        throw DataError("wilson_interval: trials must be >= 1");
    }
    if (successes < 0 || successes > trials) {
        throw DataError("wilson_interval: successes must be in [0, trials]");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw DataError("wilson_interval: confidence must be in (0, 1)");
    }
    const double z = inverse_normal_cdf(0.5 + confidence / 2.0);
    const double n = static_cast<double>(trials);
    const double p_hat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p_hat + z2 / (2.0 * n)) / denom;
    const double half = (z / denom) * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n));
    WilsonInterval interval;
    interval.low = std::max(0.0, center - half);
    interval.high = std::min(1.0, center + half);
    return interval;
}

}  // namespace gfsl
