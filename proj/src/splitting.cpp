#include "sacv/splitting.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sacv/errors.hpp"
#include "sacv/rng.hpp"

namespace sacv {

namespace {

void sort_idx(std::vector<std::size_t>& v) { std::sort(v.begin(), v.end()); }

std::vector<std::size_t> order_by_priority(std::vector<std::size_t> idx,
                                           const std::vector<std::uint64_t>& pri) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return pri[a] != pri[b] ? pri[a] < pri[b] : a < b;
    });
    return idx;
}

std::size_t rounded_count(double fraction, std::size_t n) {
    auto want = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    if (n >= 2) want = std::clamp<std::size_t>(want, 1, n - 1);
    else want = 0;
    return want;
}

void check_fraction(double f, const char* what) {
    if (!(f > 0.0 && f < 1.0)) {
        throw ParameterError(std::string(what) + " must lie in (0,1)");
    }
}

/// Rows of dev grouped by stratum name, each group in priority order.
/// Name-keyed map so iteration order is independent of row order.
std::map<std::string, std::vector<std::size_t>> priority_groups(
    const LabeledDataset& dev, const std::vector<std::uint64_t>& pri) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < dev.size(); ++i) groups[dev.stratum(i)].push_back(i);
    for (auto& [name, idx] : groups) idx = order_by_priority(std::move(idx), pri);
    return groups;
}

} // namespace

void to_json(nlohmann::json& j, const SplitPlan& p) {
    j = nlohmann::json{{"train_idx", p.train_idx}, {"val_idx", p.val_idx}};
}

void from_json(const nlohmann::json& j, SplitPlan& p) {
    j.at("train_idx").get_to(p.train_idx);
    j.at("val_idx").get_to(p.val_idx);
}

void to_json(nlohmann::json& j, const SacvSplitPlan& p) {
    j = nlohmann::json{{"train_idx", p.train_idx},
                       {"val_id_idx", p.val_id_idx},
                       {"val_ood_idx", p.val_ood_idx},
                       {"ood_stratum", p.ood_stratum}};
}

void from_json(const nlohmann::json& j, SacvSplitPlan& p) {
    j.at("train_idx").get_to(p.train_idx);
    j.at("val_id_idx").get_to(p.val_id_idx);
    j.at("val_ood_idx").get_to(p.val_ood_idx);
    j.at("ood_stratum").get_to(p.ood_stratum);
}

namespace detail {

std::vector<std::uint64_t> make_priorities(std::size_t n, std::uint64_t seed) {
    auto rng = make_engine(seed);
    std::vector<std::uint64_t> pri(n);
    for (auto& p : pri) p = rng();
    return pri;
}

SplitPlan holdout_split_with_priorities(const LabeledDataset& dev, double val_fraction,
                                        const std::vector<std::uint64_t>& pri) {
    check_fraction(val_fraction, "holdout_split: val_fraction");
    std::vector<std::size_t> all(dev.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto ordered = order_by_priority(std::move(all), pri);
    const std::size_t n_val = rounded_count(val_fraction, dev.size());

    SplitPlan plan;
    plan.val_idx.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(n_val));
    plan.train_idx.assign(ordered.begin() + static_cast<std::ptrdiff_t>(n_val), ordered.end());
    sort_idx(plan.val_idx);
    sort_idx(plan.train_idx);
    return plan;
}

std::vector<SplitPlan> kfold_split_with_priorities(const LabeledDataset& dev, std::size_t k,
                                                   const std::vector<std::uint64_t>& pri) {
    if (k < 2) throw ParameterError("kfold_split: k must be >= 2");
    if (k > dev.size()) throw ParameterError("kfold_split: k exceeds number of rows");

    std::vector<std::size_t> all(dev.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto ordered = order_by_priority(std::move(all), pri);

    // First (n mod k) folds take the extra row.
    std::vector<std::vector<std::size_t>> folds(k);
    const std::size_t base = dev.size() / k;
    const std::size_t extra = dev.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        folds[f].assign(ordered.begin() + static_cast<std::ptrdiff_t>(pos),
                        ordered.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }

    std::vector<SplitPlan> plans(k);
    for (std::size_t f = 0; f < k; ++f) {
        plans[f].val_idx = folds[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            plans[f].train_idx.insert(plans[f].train_idx.end(), folds[g].begin(), folds[g].end());
        }
        sort_idx(plans[f].val_idx);
        sort_idx(plans[f].train_idx);
    }
    return plans;
}

std::vector<SplitPlan> stratified_kfold_split_with_priorities(
    const LabeledDataset& dev, std::size_t k, const std::vector<std::uint64_t>& pri) {
    if (k < 2) throw ParameterError("stratified_kfold_split: k must be >= 2");
    if (k > dev.size()) throw ParameterError("stratified_kfold_split: k exceeds number of rows");

    const auto groups = priority_groups(dev, pri);
    for (const auto& [name, idx] : groups) {
        if (idx.size() < k) {
            throw ParameterError("stratified_kfold_split: stratum \"" + name + "\" has " +
                                 std::to_string(idx.size()) + " rows, fewer than k=" +
                                 std::to_string(k));
        }
    }

    // Deal rows fold-by-fold with a cursor that carries across strata, so
    // both per-stratum and global fold sizes stay within one of each other.
    std::vector<std::vector<std::size_t>> folds(k);
    std::size_t cursor = 0;
    for (const auto& [name, idx] : groups) {
        for (std::size_t i : idx) {
            folds[cursor % k].push_back(i);
            ++cursor;
        }
    }

    std::vector<SplitPlan> plans(k);
    for (std::size_t f = 0; f < k; ++f) {
        plans[f].val_idx = folds[f];
        for (std::size_t g = 0; g < k; ++g) {
            if (g == f) continue;
            plans[f].train_idx.insert(plans[f].train_idx.end(), folds[g].begin(), folds[g].end());
        }
        sort_idx(plans[f].val_idx);
        sort_idx(plans[f].train_idx);
    }
    return plans;
}

std::vector<SacvSplitPlan> sacv_split_with_priorities(const LabeledDataset& dev,
                                                      double id_val_fraction,
                                                      const std::vector<std::uint64_t>& pri) {
    check_fraction(id_val_fraction, "sacv_split: id_val_fraction");
    const auto fault_strata = dev.fault_strata();
    if (fault_strata.size() < 2) {
        throw ParameterError("sacv_split: at least two fault strata required, found " +
                             std::to_string(fault_strata.size()));
    }

    const auto groups = priority_groups(dev, pri);

    std::vector<SacvSplitPlan> plans;
    plans.reserve(fault_strata.size());
    for (const auto& held : fault_strata) {
        SacvSplitPlan plan;
        plan.ood_stratum = held;
        for (const auto& [name, idx] : groups) {
            if (name == held) {
                plan.val_ood_idx.insert(plan.val_ood_idx.end(), idx.begin(), idx.end());
                continue;
            }
            const std::size_t n_val = rounded_count(id_val_fraction, idx.size());
            plan.val_id_idx.insert(plan.val_id_idx.end(), idx.begin(),
                                   idx.begin() + static_cast<std::ptrdiff_t>(n_val));
            plan.train_idx.insert(plan.train_idx.end(),
                                  idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
        }
        sort_idx(plan.train_idx);
        sort_idx(plan.val_id_idx);
        sort_idx(plan.val_ood_idx);
        plans.push_back(std::move(plan));
    }
    return plans;
}

} // namespace detail

SplitPlan holdout_split(const LabeledDataset& dev, double val_fraction, std::uint64_t seed) {
    return detail::holdout_split_with_priorities(dev, val_fraction,
                                                 detail::make_priorities(dev.size(), seed));
}

std::vector<SplitPlan> kfold_split(const LabeledDataset& dev, std::size_t k, std::uint64_t seed) {
    return detail::kfold_split_with_priorities(dev, k, detail::make_priorities(dev.size(), seed));
}

std::vector<SplitPlan> stratified_kfold_split(const LabeledDataset& dev, std::size_t k,
                                              std::uint64_t seed) {
    return detail::stratified_kfold_split_with_priorities(
        dev, k, detail::make_priorities(dev.size(), seed));
}

std::vector<SacvSplitPlan> sacv_split(const LabeledDataset& dev, double id_val_fraction,
                                      std::uint64_t seed) {
    return detail::sacv_split_with_priorities(dev, id_val_fraction,
                                              detail::make_priorities(dev.size(), seed));
}

} // namespace sacv
