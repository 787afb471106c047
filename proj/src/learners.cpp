#include "sacv/learners.hpp"

#include <sstream>

#include "sacv/errors.hpp"

namespace sacv {

std::string to_string(LearnerKind kind) {
    return kind == LearnerKind::tree ? "tree" : "mlp";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "tree") return LearnerKind::tree;
    if (s == "mlp") return LearnerKind::mlp;
    throw ParameterError("unknown learner kind \"" + s + "\"");
}

Hyperparams with_seed(Hyperparams hp, std::uint64_t seed) {
    if (auto* mlp = std::get_if<MlpHyperparams>(&hp)) mlp->seed = seed;
    return hp;
}

std::string config_label(const Hyperparams& hp) {
    std::ostringstream out;
    if (const auto* tree = std::get_if<TreeHyperparams>(&hp)) {
        out << "tree(depth=" << tree->max_depth << ",leaf=" << tree->min_samples_leaf << ","
            << (tree->criterion == SplitCriterion::gini ? "gini" : "entropy") << ")";
    } else {
        const auto& mlp = std::get<MlpHyperparams>(hp);
        out << "mlp(h=";
        for (std::size_t i = 0; i < mlp.hidden_sizes.size(); ++i) {
            if (i) out << "x";
            out << mlp.hidden_sizes[i];
        }
        out << ",lr=" << mlp.learning_rate << ",ep=" << mlp.epochs << ",bs=" << mlp.batch_size
            << ",l2=" << mlp.l2_penalty << ")";
    }
    return out.str();
}

ScorerPtr train_single(const LabeledDataset& train, const Hyperparams& hp) {
    if (const auto* tree = std::get_if<TreeHyperparams>(&hp)) {
        return train_tree(train, *tree);
    }
    return train_mlp(train, std::get<MlpHyperparams>(hp));
}

} // namespace sacv
