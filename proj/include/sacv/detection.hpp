#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sacv/scorer.hpp"

namespace sacv {

/// Decision rule: predict fault iff score > tau (strict; ties at tau are
/// negatives).
std::vector<int> classify(const std::vector<double>& scores, double tau);

/// CFAR threshold: the smallest candidate (unique observed score, plus a
/// 1.0 sentinel) whose empirical false-positive rate over the development
/// negatives is at most q. The returned tau always satisfies the bound.
double calibrate_cfar(const std::vector<double>& dev_negative_scores, double q);

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

/// Rates are conditioned the standard way: fnr on the fault class, fpr on
/// the normal class. A rate whose denominator is zero is reported as
/// nullopt, never as 0.
struct DetectionMetrics {
    std::optional<double> fnr;
    std::optional<double> fpr;
    std::size_t fn_count = 0;
    ConfusionCounts counts;
};

DetectionMetrics evaluate(const std::vector<int>& preds, const std::vector<int>& truth);

/// Mean of the per-class recalls that are defined on this sample.
double balanced_accuracy(const DetectionMetrics& m);

enum class CalibrationKind { fixed, cfar };

struct Calibration {
    CalibrationKind kind = CalibrationKind::fixed;
    double q = 0.0; // meaningful for cfar only

    static Calibration fixed() { return {CalibrationKind::fixed, 0.0}; }
    static Calibration cfar(double q) { return {CalibrationKind::cfar, q}; }
};

/// The deployable unit: a scorer with its decision threshold.
struct CalibratedDetector {
    ScorerPtr scorer;
    double tau = 0.5;
    Calibration calibration;
};

} // namespace sacv
