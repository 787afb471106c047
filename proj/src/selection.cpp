#include "sacv/selection.hpp"

#include <algorithm>
#include <set>

#include "sacv/detection.hpp"
#include "sacv/errors.hpp"
#include "sacv/rng.hpp"
#include "sacv/splitting.hpp"

namespace sacv {

namespace {

/// Uniform view of one validation run for any strategy.
struct PlanView {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_id_idx;
    std::vector<std::size_t> val_ood_idx; // SACV only
};

void check_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                    const char* what) {
    // Both sides arrive sorted from the splitting module.
    std::vector<std::size_t> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (!common.empty()) {
        throw std::logic_error(std::string("run_cv: ") + what + " sets overlap");
    }
}

std::vector<PlanView> build_plans(const LabeledDataset& dev, Strategy strategy,
                                  const SplitParams& params, std::uint64_t seed) {
    std::vector<PlanView> plans;
    switch (strategy) {
        case Strategy::holdout: {
            auto p = holdout_split(dev, params.holdout_val_fraction, seed);
            plans.push_back(PlanView{std::move(p.train_idx), std::move(p.val_idx), {}});
            break;
        }
        case Strategy::kfold:
        case Strategy::stratified_kfold: {
            const std::size_t k = params.k > 0 ? params.k : dev.fault_strata().size();
            auto split = strategy == Strategy::kfold ? kfold_split(dev, k, seed)
                                                     : stratified_kfold_split(dev, k, seed);
            for (auto& p : split) {
                plans.push_back(PlanView{std::move(p.train_idx), std::move(p.val_idx), {}});
            }
            break;
        }
        case Strategy::sacv: {
            for (auto& p : sacv_split(dev, params.id_val_fraction, seed)) {
                plans.push_back(PlanView{std::move(p.train_idx), std::move(p.val_id_idx),
                                         std::move(p.val_ood_idx)});
            }
            break;
        }
    }
    for (const auto& p : plans) {
        check_disjoint(p.train_idx, p.val_id_idx, "train/validation");
        if (!p.val_ood_idx.empty()) {
            check_disjoint(p.train_idx, p.val_ood_idx, "train/o.o.d. validation");
        }
    }
    return plans;
}

/// Operating points for ranking: CFAR-calibrated on the plan's i.d.
/// validation negatives at every configured level, falling back to 0.5
/// when the validation split carries no negatives.
std::vector<double> ranking_taus(const std::vector<double>& val_scores,
                                 const std::vector<int>& val_labels,
                                 const std::vector<double>& rank_qs) {
    std::vector<double> negatives;
    for (std::size_t i = 0; i < val_labels.size(); ++i) {
        if (val_labels[i] == 0) negatives.push_back(val_scores[i]);
    }
    if (negatives.empty() || rank_qs.empty()) return {0.5};
    std::vector<double> taus;
    taus.reserve(rank_qs.size());
    for (double q : rank_qs) taus.push_back(calibrate_cfar(negatives, q));
    return taus;
}

} // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::holdout: return "holdout";
        case Strategy::kfold: return "kfold";
        case Strategy::stratified_kfold: return "stratified_kfold";
        case Strategy::sacv: return "sacv";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "holdout") return Strategy::holdout;
    if (s == "kfold") return Strategy::kfold;
    if (s == "stratified_kfold") return Strategy::stratified_kfold;
    if (s == "sacv") return Strategy::sacv;
    throw ParameterError("unknown validation strategy \"" + s + "\"");
}

std::string to_string(FinalStrategy s) {
    return s == FinalStrategy::refit_all ? "refit_all" : "combine";
}

FinalStrategy final_strategy_from_string(const std::string& s) {
    if (s == "refit_all") return FinalStrategy::refit_all;
    if (s == "combine") return FinalStrategy::combine;
    throw ParameterError("unknown final-model strategy \"" + s + "\"");
}

ScorerPtr train_base(const LabeledDataset& train, const Hyperparams& config, const BaseSpec& base,
                     std::uint64_t seed) {
    if (base.kind == BaseSpec::Kind::single) {
        return train_single(train, with_seed(config, seed));
    }
    return train_bagging(train, config, base.T, seed);
}

std::vector<CvResult> run_cv(const LabeledDataset& dev, Strategy strategy,
                             const HyperparamGrid& grid, const BaseSpec& base, std::uint64_t seed,
                             const SplitParams& params, double ood_penalty) {
    if (grid.configs.empty()) throw ParameterError("run_cv: empty hyperparameter grid");
    for (std::size_t i = 0; i < grid.configs.size(); ++i) {
        if (kind_of(grid.configs[i]) != grid.kind) {
            throw ParameterError("run_cv: grid config " + std::to_string(i) +
                                 " does not match the grid learner kind");
        }
        for (std::size_t j = i + 1; j < grid.configs.size(); ++j) {
            if (grid.configs[i] == grid.configs[j]) {
                throw ParameterError("run_cv: duplicate configuration in grid (" +
                                     config_label(grid.configs[i]) + ")");
            }
        }
    }

    const auto plans = build_plans(dev, strategy, params, derive_seed(seed, 0x9A71));

    std::vector<CvResult> results;
    results.reserve(grid.configs.size());
    for (std::size_t r = 0; r < grid.configs.size(); ++r) {
        CvResult res;
        res.config = grid.configs[r];

        double id_sum = 0.0;
        double ood_sum = 0.0;
        for (std::size_t p = 0; p < plans.size(); ++p) {
            const auto model = train_base(dev.subset(plans[p].train_idx), res.config, base,
                                          derive_seed(seed, r + 1, p + 1));
            const auto val = dev.subset(plans[p].val_id_idx);
            const auto val_scores = model->score(val.features());
            const auto taus = ranking_taus(val_scores, val.labels(), params.rank_qs);
            const auto ood = strategy == Strategy::sacv
                                 ? std::optional(dev.subset(plans[p].val_ood_idx))
                                 : std::nullopt;
            const auto ood_scores =
                ood ? std::optional(model->score(ood->features())) : std::nullopt;
            double id_plan = 0.0;
            double ood_plan = 0.0;
            for (double tau : taus) {
                id_plan += balanced_accuracy(evaluate(classify(val_scores, tau), val.labels()));
                if (ood) {
                    ood_plan += evaluate(classify(*ood_scores, tau), ood->labels())
                                    .fnr.value_or(0.0);
                }
            }
            id_sum += id_plan / static_cast<double>(taus.size());
            ood_sum += ood_plan / static_cast<double>(taus.size());
            res.fold_models.push_back(model);
        }
        res.val_id_score = id_sum / static_cast<double>(plans.size());
        if (strategy == Strategy::sacv) {
            res.val_ood_fnr = ood_sum / static_cast<double>(plans.size());
            res.combined_rank_score = res.val_id_score - ood_penalty * *res.val_ood_fnr;
        } else {
            res.combined_rank_score = res.val_id_score;
        }
        results.push_back(std::move(res));
    }
    return results;
}

std::vector<CvResult> rank_top_r(const std::vector<CvResult>& results, std::size_t r) {
    if (r < 1) throw ParameterError("rank_top_r: r must be >= 1");
    if (r > results.size()) {
        throw ParameterError("rank_top_r: r = " + std::to_string(r) + " exceeds the " +
                             std::to_string(results.size()) + " evaluated configurations");
    }
    std::vector<CvResult> sorted = results;
    std::stable_sort(sorted.begin(), sorted.end(), [](const CvResult& a, const CvResult& b) {
        return a.combined_rank_score > b.combined_rank_score;
    });
    sorted.resize(r);
    return sorted;
}

FinalModel finalize(const LabeledDataset& dev, const CvResult& result, FinalStrategy strategy,
                    const BaseSpec& base, std::uint64_t seed) {
    if (strategy == FinalStrategy::refit_all) {
        return FinalModel{strategy, train_base(dev, result.config, base, seed)};
    }
    if (result.fold_models.empty()) {
        throw ParameterError("finalize: combine requires at least one fold model");
    }
    return FinalModel{strategy, std::make_shared<Ensemble>(result.fold_models, seed)};
}

} // namespace sacv
