#include "sacv/tree.hpp"

#include <algorithm>
#include <cmath>

#include "sacv/errors.hpp"

namespace sacv {

namespace {

double impurity(std::size_t pos, std::size_t n, SplitCriterion criterion) {
    if (n == 0) return 0.0;
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    const double q = 1.0 - p;
    if (criterion == SplitCriterion::gini) {
        return 1.0 - p * p - q * q;
    }
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (q > 0.0) h -= q * std::log(q);
    return h;
}

/// (value, positives, total) per unique feature value, ascending. Counts
/// depend only on the multiset of (value,label) pairs, not on row order.
struct ValueGroup {
    double value;
    std::size_t pos;
    std::size_t n;
};

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct Builder {
    const LabeledDataset& data;
    const TreeHyperparams& hp;
    std::vector<TreeNode> nodes;

    int build(const std::vector<std::size_t>& rows, std::size_t depth) {
        std::size_t pos = 0;
        for (std::size_t i : rows) pos += static_cast<std::size_t>(data.label(i));
        const std::size_t n = rows.size();
        const double node_score = static_cast<double>(pos) / static_cast<double>(n);

        const bool pure = (pos == 0 || pos == n);
        const bool can_split =
            depth < hp.max_depth && !pure && n >= 2 * hp.min_samples_leaf;

        BestSplit best;
        if (can_split) best = find_best_split(rows, pos);

        if (!best.found) {
            nodes.push_back(TreeNode{-1, 0.0, -1, -1, node_score});
            return static_cast<int>(nodes.size() - 1);
        }

        std::vector<std::size_t> left_rows;
        std::vector<std::size_t> right_rows;
        for (std::size_t i : rows) {
            (data.features().at(i, static_cast<std::size_t>(best.feature)) <= best.threshold
                 ? left_rows
                 : right_rows)
                .push_back(i);
        }

        const int self = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{best.feature, best.threshold, -1, -1, node_score});
        nodes[static_cast<std::size_t>(self)].left = build(left_rows, depth + 1);
        nodes[static_cast<std::size_t>(self)].right = build(right_rows, depth + 1);
        return self;
    }

    BestSplit find_best_split(const std::vector<std::size_t>& rows, std::size_t pos) const {
        const std::size_t n = rows.size();
        const double parent = impurity(pos, n, hp.criterion);
        BestSplit best;

        std::vector<std::pair<double, int>> sorted;
        sorted.reserve(n);
        std::vector<ValueGroup> groups;

        for (std::size_t f = 0; f < data.dim(); ++f) {
            sorted.clear();
            for (std::size_t i : rows) {
                sorted.emplace_back(data.features().at(i, f), data.label(i));
            }
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            groups.clear();
            for (const auto& [v, z] : sorted) {
                if (groups.empty() || groups.back().value != v) {
                    groups.push_back(ValueGroup{v, 0, 0});
                }
                groups.back().pos += static_cast<std::size_t>(z);
                groups.back().n += 1;
            }
            if (groups.size() < 2) continue;

            std::size_t left_pos = 0;
            std::size_t left_n = 0;
            for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
                left_pos += groups[g].pos;
                left_n += groups[g].n;
                const std::size_t right_n = n - left_n;
                if (left_n < hp.min_samples_leaf || right_n < hp.min_samples_leaf) continue;
                const std::size_t right_pos = pos - left_pos;
                const double weighted =
                    (static_cast<double>(left_n) * impurity(left_pos, left_n, hp.criterion) +
                     static_cast<double>(right_n) * impurity(right_pos, right_n, hp.criterion)) /
                    static_cast<double>(n);
                const double gain = parent - weighted;
                // Strict improvement keeps the first (lowest feature, then
                // lowest threshold) candidate among ties.
                if (gain > 0.0 && (!best.found || gain > best.gain)) {
                    best.found = true;
                    best.feature = static_cast<int>(f);
                    best.threshold = (groups[g].value + groups[g + 1].value) / 2.0;
                    best.gain = gain;
                }
            }
        }
        return best;
    }
};

} // namespace

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_dim)
    : nodes_(std::move(nodes)), feature_dim_(feature_dim) {
    if (nodes_.empty()) throw ParameterError("DecisionTree: empty node array");
    if (feature_dim_ == 0) throw ParameterError("DecisionTree: feature_dim must be >= 1");
}

std::vector<double> DecisionTree::do_score(const Matrix& X) const {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto row = X.row(i);
        std::size_t node = 0;
        while (nodes_[node].feature >= 0) {
            node = static_cast<std::size_t>(
                row[static_cast<std::size_t>(nodes_[node].feature)] <= nodes_[node].threshold
                    ? nodes_[node].left
                    : nodes_[node].right);
        }
        out[i] = nodes_[node].score;
    }
    return out;
}

std::size_t DecisionTree::depth() const {
    // Iterative depth over the node array.
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t depth = 0;
    while (!stack.empty()) {
        auto [node, d] = stack.back();
        stack.pop_back();
        depth = std::max(depth, d);
        if (nodes_[node].feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes_[node].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes_[node].right), d + 1);
        }
    }
    return depth;
}

nlohmann::json DecisionTree::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"score", n.score}});
    }
    return nlohmann::json{{"format", "sacv-model"},
                          {"version", 1},
                          {"kind", "tree"},
                          {"feature_dim", feature_dim_},
                          {"nodes", nodes}};
}

std::shared_ptr<const DecisionTree> train_tree(const LabeledDataset& train,
                                               const TreeHyperparams& hp) {
    if (hp.max_depth < 1) throw ParameterError("train_tree: max_depth must be >= 1");
    if (hp.min_samples_leaf < 1) throw ParameterError("train_tree: min_samples_leaf must be >= 1");
    train.require_both_classes("train_tree");

    std::vector<std::size_t> rows(train.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

    Builder builder{train, hp, {}};
    builder.build(rows, 0);
    return std::make_shared<DecisionTree>(std::move(builder.nodes), train.dim());
}

} // namespace sacv
