#include "sacv/detection.hpp"

#include <algorithm>

#include "sacv/errors.hpp"

namespace sacv {

std::vector<int> classify(const std::vector<double>& scores, double tau) {
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > tau ? 1 : 0;
    return preds;
}

double calibrate_cfar(const std::vector<double>& dev_negative_scores, double q) {
    if (dev_negative_scores.empty()) {
        throw ParameterError("calibrate_cfar: no development negatives to calibrate on");
    }
    if (!(q > 0.0 && q < 1.0)) throw ParameterError("calibrate_cfar: q must lie in (0,1)");

    std::vector<double> sorted = dev_negative_scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates = sorted;
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (candidates.back() < 1.0) candidates.push_back(1.0);

    const auto n = static_cast<double>(sorted.size());
    for (double tau : candidates) {
        const auto above = static_cast<double>(
            sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), tau));
        if (above / n <= q) return tau;
    }
    return candidates.back(); // unreachable: the max score has zero FPR
}

DetectionMetrics evaluate(const std::vector<int>& preds, const std::vector<int>& truth) {
    if (preds.size() != truth.size()) {
        throw ParameterError("evaluate: predictions and truth differ in length");
    }
    if (preds.empty()) throw ParameterError("evaluate: empty input");

    DetectionMetrics m;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (truth[i] == 1) {
            preds[i] == 1 ? ++m.counts.tp : ++m.counts.fn;
        } else {
            preds[i] == 1 ? ++m.counts.fp : ++m.counts.tn;
        }
    }
    const std::size_t n_pos = m.counts.tp + m.counts.fn;
    const std::size_t n_neg = m.counts.fp + m.counts.tn;
    if (n_pos > 0) m.fnr = static_cast<double>(m.counts.fn) / static_cast<double>(n_pos);
    if (n_neg > 0) m.fpr = static_cast<double>(m.counts.fp) / static_cast<double>(n_neg);
    m.fn_count = m.counts.fn;
    return m;
}

double balanced_accuracy(const DetectionMetrics& m) {
    double sum = 0.0;
    int defined = 0;
    if (m.fnr) {
        sum += 1.0 - *m.fnr;
        ++defined;
    }
    if (m.fpr) {
        sum += 1.0 - *m.fpr;
        ++defined;
    }
    return defined > 0 ? sum / defined : 0.0;
}

} // namespace sacv
