#pragma once

#include <string>
#include <vector>

#include "sacv/dataset.hpp"
#include "sacv/scorer.hpp"

namespace sacv {

enum class SplitCriterion { gini, entropy };

struct TreeHyperparams {
    std::size_t max_depth = 8;
    std::size_t min_samples_leaf = 1;
    SplitCriterion criterion = SplitCriterion::gini;

    bool operator==(const TreeHyperparams&) const = default;
};

/// Binary CART node. feature < 0 marks a leaf; otherwise rows with
/// x[feature] <= threshold descend to left, the rest to right.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double score = 0.0; // leaf: fraction of positive training rows
};

class DecisionTree final : public Scorer {
public:
    DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_dim);

    std::size_t feature_dim() const override { return feature_dim_; }
    std::string kind() const override { return "tree"; }
    nlohmann::json to_json() const override;

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t depth() const;

protected:
    std::vector<double> do_score(const Matrix& X) const override;

private:
    std::vector<TreeNode> nodes_; // nodes_[0] is the root
    std::size_t feature_dim_;
};

/// Grow a CART tree. Candidate thresholds are midpoints between
/// consecutive sorted unique feature values; ties between equally good
/// splits resolve to the lowest feature index, then lowest threshold,
/// so the result is invariant under training-row shuffling. Leaf score
/// is the positive fraction of the training rows reaching the leaf.
std::shared_ptr<const DecisionTree> train_tree(const LabeledDataset& train,
                                               const TreeHyperparams& hp);

} // namespace sacv
