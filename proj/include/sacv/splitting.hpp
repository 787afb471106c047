#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacv/dataset.hpp"

namespace sacv {

/// One train/validation division of a development set, as index sets.
struct SplitPlan {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;

    bool operator==(const SplitPlan&) const = default;
};

/// Stratification-aware division: one fault stratum is rotated out as an
/// o.o.d. validation set; the rest splits into training and i.d.
/// validation. The three index sets partition the development set.
struct SacvSplitPlan {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_id_idx;
    std::vector<std::size_t> val_ood_idx;
    std::string ood_stratum;

    bool operator==(const SacvSplitPlan&) const = default;
};

void to_json(nlohmann::json& j, const SplitPlan& p);
void from_json(const nlohmann::json& j, SplitPlan& p);
void to_json(nlohmann::json& j, const SacvSplitPlan& p);
void from_json(const nlohmann::json& j, SacvSplitPlan& p);

/// Uniformly random single division; |val_idx| = round(val_fraction * n),
/// clamped so both sides stay non-empty.
SplitPlan holdout_split(const LabeledDataset& dev, double val_fraction, std::uint64_t seed);

/// k disjoint folds covering dev, sizes differing by at most one; plan i
/// validates on fold i.
std::vector<SplitPlan> kfold_split(const LabeledDataset& dev, std::size_t k, std::uint64_t seed);

/// k-fold with per-stratum fold counts differing by at most one. Every
/// stratum must have at least k rows.
std::vector<SplitPlan> stratified_kfold_split(const LabeledDataset& dev, std::size_t k,
                                              std::uint64_t seed);

/// One plan per fault stratum: the stratum's rows form the o.o.d.
/// validation set, the remaining rows split per-stratum into training and
/// i.d. validation at id_val_fraction. Requires >= 2 fault strata.
std::vector<SacvSplitPlan> sacv_split(const LabeledDataset& dev, double id_val_fraction,
                                      std::uint64_t seed);

namespace detail {

/// Per-row random keys; all split decisions reduce to orderings of these
/// keys within strata, which is what makes the strategies free of
/// positional bias. Exposed so tests can drive splits with an explicit
/// key assignment.
std::vector<std::uint64_t> make_priorities(std::size_t n, std::uint64_t seed);

SplitPlan holdout_split_with_priorities(const LabeledDataset& dev, double val_fraction,
                                        const std::vector<std::uint64_t>& priorities);
std::vector<SplitPlan> kfold_split_with_priorities(const LabeledDataset& dev, std::size_t k,
                                                   const std::vector<std::uint64_t>& priorities);
std::vector<SplitPlan> stratified_kfold_split_with_priorities(
    const LabeledDataset& dev, std::size_t k, const std::vector<std::uint64_t>& priorities);
std::vector<SacvSplitPlan> sacv_split_with_priorities(
    const LabeledDataset& dev, double id_val_fraction,
    const std::vector<std::uint64_t>& priorities);

} // namespace detail

} // namespace sacv
