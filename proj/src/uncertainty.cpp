#include "sacv/uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "sacv/errors.hpp"

namespace sacv {

std::string to_string(UncertaintyMetric m) {
    return m == UncertaintyMetric::mean ? "mean" : "var";
}

UncertaintyMetric uncertainty_metric_from_string(const std::string& s) {
    if (s == "mean") return UncertaintyMetric::mean;
    if (s == "var") return UncertaintyMetric::var;
    throw ParameterError("unknown uncertainty metric \"" + s + "\"");
}

UncertaintyScores mean_metric(const std::vector<double>& ensemble_scores, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("mean_metric: tau must lie in [0,1]");
    UncertaintyScores out{UncertaintyMetric::mean, {}};
    out.u.reserve(ensemble_scores.size());
    for (double s : ensemble_scores) out.u.push_back(1.0 - std::abs(s - tau));
    return out;
}

UncertaintyScores var_metric(const Matrix& member_scores) {
    const std::size_t T = member_scores.rows();
    if (T < 2) throw ParameterError("var_metric: variance undefined for single member");
    const std::size_t n = member_scores.cols();

    UncertaintyScores out{UncertaintyMetric::var, std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::size_t k = 0; k < T; ++k) mean += member_scores.at(k, i);
        mean /= static_cast<double>(T);
        double ss = 0.0;
        for (std::size_t k = 0; k < T; ++k) {
            const double d = member_scores.at(k, i) - mean;
            ss += d * d;
        }
        out.u[i] = ss / static_cast<double>(T - 1);
    }
    return out;
}

double calibrate_uncertainty_threshold(const std::vector<double>& u_dev_negatives, double theta) {
    if (u_dev_negatives.empty()) {
        throw ParameterError("calibrate_uncertainty_threshold: no calibration values");
    }
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw ParameterError("calibrate_uncertainty_threshold: theta must lie in [0,1]");
    }

    std::vector<double> sorted = u_dev_negatives;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates = sorted;
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const auto n = static_cast<double>(sorted.size());
    for (double cand : candidates) {
        const auto above = static_cast<double>(
            sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), cand));
        if (above / n <= theta) return cand;
    }
    return candidates.back(); // unreachable: nothing exceeds the maximum
}

std::vector<std::size_t> flag_uncertain_negatives(const std::vector<int>& preds,
                                                  const UncertaintyScores& u,
                                                  double u_threshold) {
    if (preds.size() != u.u.size()) {
        throw ParameterError("flag_uncertain_negatives: predictions and scores differ in length");
    }
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == 0 && u.u[i] > u_threshold) flagged.push_back(i);
    }
    return flagged;
}

std::optional<double> fn_precision(const std::vector<std::size_t>& flagged,
                                   const std::vector<int>& truth) {
    if (flagged.empty()) return std::nullopt;
    std::size_t hits = 0;
    for (std::size_t i : flagged) {
        if (i >= truth.size()) throw ParameterError("fn_precision: flagged index out of range");
        hits += static_cast<std::size_t>(truth[i] == 1);
    }
    return static_cast<double>(hits) / static_cast<double>(flagged.size());
}

OracleCorrection apply_oracle_correction(const std::vector<int>& preds,
                                         const std::vector<std::size_t>& flagged,
                                         const std::vector<int>& truth) {
    if (preds.size() != truth.size()) {
        throw ParameterError("apply_oracle_correction: predictions and truth differ in length");
    }
    OracleCorrection out{preds, 0};
    for (std::size_t i : flagged) {
        if (i >= preds.size()) {
            throw ParameterError("apply_oracle_correction: flagged index out of range");
        }
        out.corrected_preds[i] = truth[i];
    }
    for (std::size_t i = 0; i < truth.size(); ++i) {
        out.remaining_fn_count +=
            static_cast<std::size_t>(truth[i] == 1 && out.corrected_preds[i] == 0);
    }
    return out;
}

} // namespace sacv
