#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sacv/dataset.hpp"
#include "sacv/scorer.hpp"

namespace sacv {

struct MlpHyperparams {
    std::vector<std::size_t> hidden_sizes{8};
    double learning_rate = 1e-2;
    std::size_t epochs = 30; // 0 keeps the freshly initialized network
    std::size_t batch_size = 32;
    double l2_penalty = 0.0;
    std::uint64_t seed = 0;
    bool balanced_class_weights = true;

    bool operator==(const MlpHyperparams&) const = default;
};

/// Feed-forward network: tanh hidden layers, sigmoid output head, trained
/// with plain mini-batch SGD on (optionally class-weighted) binary
/// cross-entropy plus an L2 penalty on the weights.
class Mlp final : public Scorer {
public:
    /// Layer l maps layer_dims[l] inputs to layer_dims[l+1] outputs;
    /// layer_dims front is the feature dimension, back is 1.
    Mlp(std::vector<std::size_t> layer_dims, std::vector<double> flat_params);

    /// Freshly initialized network: weights uniform in ±1/sqrt(fan_in),
    /// biases zero.
    static Mlp init(std::size_t feature_dim, const std::vector<std::size_t>& hidden_sizes,
                    std::uint64_t seed);

    std::size_t feature_dim() const override { return layer_dims_.front(); }
    std::string kind() const override { return "mlp"; }
    nlohmann::json to_json() const override;

    const std::vector<std::size_t>& layer_dims() const { return layer_dims_; }

    /// All weights and biases, flattened layer by layer (row-major W, then b).
    const std::vector<double>& parameters() const { return params_; }
    Mlp with_parameters(std::vector<double> params) const;
    std::size_t parameter_count() const { return params_.size(); }

    /// Per-epoch training loss (empty for a network that was never trained).
    const std::vector<double>& loss_history() const { return loss_history_; }

protected:
    std::vector<double> do_score(const Matrix& X) const override;

private:
    friend std::shared_ptr<const Mlp> train_mlp(const LabeledDataset&, const MlpHyperparams&);

    std::vector<std::size_t> layer_dims_;
    std::vector<double> params_;
    std::vector<double> loss_history_;
};

/// Mean class-weighted binary cross-entropy over the batch plus
/// (l2/2)*||W||^2 (biases are not penalized). row_weights must have one
/// entry per row of X.
double mlp_loss(const Mlp& net, const Matrix& X, const std::vector<int>& labels,
                const std::vector<double>& row_weights, double l2);

/// Loss together with its analytic gradient with respect to the
/// flattened parameter vector; matches central finite differences of
/// mlp_loss.
std::pair<double, std::vector<double>> mlp_loss_gradient(const Mlp& net, const Matrix& X,
                                                         const std::vector<int>& labels,
                                                         const std::vector<double>& row_weights,
                                                         double l2);

/// Per-row loss weights for the dataset: 1 everywhere, or inversely
/// proportional to class frequency when balanced is set.
std::vector<double> class_weights(const std::vector<int>& labels, bool balanced);

/// Train a network on the dataset. Deterministic given hp.seed. Throws
/// TrainingError (naming the epoch) if the loss stops being finite.
std::shared_ptr<const Mlp> train_mlp(const LabeledDataset& train, const MlpHyperparams& hp);

} // namespace sacv
