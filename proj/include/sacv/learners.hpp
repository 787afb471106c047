#pragma once

#include <string>
#include <variant>

#include "sacv/mlp.hpp"
#include "sacv/tree.hpp"

namespace sacv {

enum class LearnerKind { tree, mlp };

std::string to_string(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

/// One hyperparameter configuration for either learner family.
using Hyperparams = std::variant<TreeHyperparams, MlpHyperparams>;

inline LearnerKind kind_of(const Hyperparams& hp) {
    return std::holds_alternative<TreeHyperparams>(hp) ? LearnerKind::tree : LearnerKind::mlp;
}

/// MLP configs pick up the pipeline-derived seed; trees are deterministic
/// and pass through unchanged.
Hyperparams with_seed(Hyperparams hp, std::uint64_t seed);

/// Short human-readable tag used in reports and ledgers.
std::string config_label(const Hyperparams& hp);

/// Train one model of the configured family on the full training set.
ScorerPtr train_single(const LabeledDataset& train, const Hyperparams& hp);

} // namespace sacv
