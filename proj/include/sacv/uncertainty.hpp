#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sacv/matrix.hpp"

namespace sacv {

enum class UncertaintyMetric { mean, var };

std::string to_string(UncertaintyMetric m);
UncertaintyMetric uncertainty_metric_from_string(const std::string& s);

struct UncertaintyScores {
    UncertaintyMetric metric;
    std::vector<double> u;
};

/// Margin metric: u = 1 - |score - tau|. Maximal (1) exactly at the
/// decision threshold.
UncertaintyScores mean_metric(const std::vector<double>& ensemble_scores, double tau);

/// Sample variance of the member predictions per column of the T x n
/// member-score matrix. Requires T >= 2.
UncertaintyScores var_metric(const Matrix& member_scores);

/// Smallest observed u value such that the fraction of values strictly
/// above it stays within theta. theta = 0 returns the maximum (nothing
/// gets flagged).
double calibrate_uncertainty_threshold(const std::vector<double>& u_dev_negatives, double theta);

/// Indices predicted negative whose uncertainty exceeds the threshold.
std::vector<std::size_t> flag_uncertain_negatives(const std::vector<int>& preds,
                                                  const UncertaintyScores& u, double u_threshold);

/// Fraction of flagged rows that are genuine false negatives; nullopt
/// when nothing was flagged (never 0/0).
std::optional<double> fn_precision(const std::vector<std::size_t>& flagged,
                                   const std::vector<int>& truth);

struct OracleCorrection {
    std::vector<int> corrected_preds;
    std::size_t remaining_fn_count = 0;
};

/// Replace the predictions of flagged rows with the ground truth (the
/// simulated expert is always right) and count the false negatives that
/// survive. Predictions outside the flagged set never change.
OracleCorrection apply_oracle_correction(const std::vector<int>& preds,
                                         const std::vector<std::size_t>& flagged,
                                         const std::vector<int>& truth);

/// Outcome of one triage pass at ratio theta.
struct TriageResult {
    double u_threshold = 0.0;
    std::vector<std::size_t> flagged_idx;
    double theta = 0.0;
};

} // namespace sacv
