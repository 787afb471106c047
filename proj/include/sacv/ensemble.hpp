#pragma once

#include <cstdint>
#include <vector>

#include "sacv/learners.hpp"
#include "sacv/scorer.hpp"

namespace sacv {

/// Homogeneous ensemble scored by the arithmetic mean of its members.
/// Members may themselves be ensembles (a COMBINE model over bagged fold
/// models); flat_members() expands such nesting to the base models.
class Ensemble final : public Scorer {
public:
    Ensemble(std::vector<ScorerPtr> members, std::uint64_t master_seed = 0);

    std::size_t size() const { return members_.size(); } // T
    const std::vector<ScorerPtr>& members() const { return members_; }
    std::uint64_t master_seed() const { return master_seed_; }

    /// T x n matrix; row k holds member k's scores on X.
    Matrix member_scores(const Matrix& X) const;

    /// Base models reached by expanding nested ensembles, in member order.
    std::vector<ScorerPtr> flat_members() const;
    Matrix flat_member_scores(const Matrix& X) const;

    std::size_t feature_dim() const override { return members_.front()->feature_dim(); }
    std::string kind() const override { return "ensemble(" + base_kind_ + ")"; }
    nlohmann::json to_json() const override;

    /// Innermost member kind ("tree" or "mlp").
    const std::string& base_kind() const { return base_kind_; }

protected:
    std::vector<double> do_score(const Matrix& X) const override;

private:
    std::vector<ScorerPtr> members_;
    std::string base_kind_;
    std::uint64_t master_seed_;
};

/// Exact arithmetic mean of the member scores on X.
std::vector<double> mean_score(const Ensemble& e, const Matrix& X);

/// Sample-bagging ensemble: every member trains on a bootstrap resample
/// (n draws with replacement) of the training set, with per-member seeds
/// derived from the master seed. A resample that comes out single-class
/// is redrawn up to 10 times before training fails.
std::shared_ptr<const Ensemble> train_bagging(const LabeledDataset& train, const Hyperparams& hp,
                                              std::size_t T, std::uint64_t seed);

} // namespace sacv
