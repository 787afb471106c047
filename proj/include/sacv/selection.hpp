#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sacv/dataset.hpp"
#include "sacv/ensemble.hpp"
#include "sacv/learners.hpp"

namespace sacv {

enum class Strategy { holdout, kfold, stratified_kfold, sacv };
enum class FinalStrategy { refit_all, combine };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(FinalStrategy s);
FinalStrategy final_strategy_from_string(const std::string& s);

/// Base learner configuration for one pipeline cell: a single learner
/// trained on the full training split, or a bagging ensemble of size T.
struct BaseSpec {
    enum class Kind { single, bagging };
    Kind kind = Kind::single;
    std::size_t T = 1;

    static BaseSpec single() { return {Kind::single, 1}; }
    static BaseSpec bagging(std::size_t T) { return {Kind::bagging, T}; }
};

struct SplitParams {
    double holdout_val_fraction = 0.25;
    std::size_t k = 0; // 0: use the number of fault strata in dev
    double id_val_fraction = 0.25;
    // CFAR levels defining the per-plan operating points that validation
    // metrics are measured at during ranking (mirrors deployment, where
    // tau is calibrated rather than fixed); scores average across levels.
    std::vector<double> rank_qs{0.01, 0.02, 0.03, 0.05, 0.10};
};

struct HyperparamGrid {
    LearnerKind kind = LearnerKind::tree;
    std::vector<Hyperparams> configs;
};

/// Cross-validation outcome for one hyperparameter configuration.
struct CvResult {
    Hyperparams config;
    std::vector<ScorerPtr> fold_models; // one per validation run
    double val_id_score = 0.0;          // balanced accuracy at the ranking operating point
    std::optional<double> val_ood_fnr;  // SACV only, at the same operating point
    double combined_rank_score = 0.0;
};

/// Train and score every configuration of the grid under the given
/// validation strategy. SACV additionally records the o.o.d. validation
/// FNR and ranks by val_id_score - ood_penalty * val_ood_fnr; the other
/// strategies rank by i.d. balanced accuracy. Deterministic given seed.
std::vector<CvResult> run_cv(const LabeledDataset& dev, Strategy strategy,
                             const HyperparamGrid& grid, const BaseSpec& base, std::uint64_t seed,
                             const SplitParams& params = {}, double ood_penalty = 1.0);

/// Top r results by combined_rank_score, descending; ties keep grid order.
std::vector<CvResult> rank_top_r(const std::vector<CvResult>& results, std::size_t r);

struct FinalModel {
    FinalStrategy strategy = FinalStrategy::refit_all;
    ScorerPtr scorer;
};

/// REFIT-ALL retrains the configuration on the entire development set;
/// COMBINE averages the fold models produced during cross-validation.
FinalModel finalize(const LabeledDataset& dev, const CvResult& result, FinalStrategy strategy,
                    const BaseSpec& base, std::uint64_t seed);

/// The training entry the pipeline uses everywhere: single learner or
/// bagging ensemble with pipeline-derived seeds.
ScorerPtr train_base(const LabeledDataset& train, const Hyperparams& config, const BaseSpec& base,
                     std::uint64_t seed);

} // namespace sacv
