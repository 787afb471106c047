#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacv/matrix.hpp"

namespace sacv {

/// A trained scorer mapping feature vectors to anomaly scores in [0,1];
/// larger means more likely fault. Immutable once trained and safe to
/// evaluate concurrently.
class Scorer {
public:
    virtual ~Scorer() = default;

    /// Anomaly scores for every row of X, order-preserving.
    /// Throws ParameterError on feature-dimension mismatch.
    std::vector<double> score(const Matrix& X) const {
        if (X.cols() != feature_dim()) {
            throw ParameterError("predict: feature dimension mismatch: model expects " +
                                 std::to_string(feature_dim()) + ", got " +
                                 std::to_string(X.cols()));
        }
        return do_score(X);
    }

    virtual std::size_t feature_dim() const = 0;

    /// "tree", "mlp", or "ensemble(<base>)".
    virtual std::string kind() const = 0;

    /// Versioned JSON document; see scorer_from_json.
    virtual nlohmann::json to_json() const = 0;

protected:
    virtual std::vector<double> do_score(const Matrix& X) const = 0;
};

using ScorerPtr = std::shared_ptr<const Scorer>;

/// Free-function spelling of Scorer::score.
inline std::vector<double> predict_scores(const Scorer& model, const Matrix& X) {
    return model.score(X);
}

} // namespace sacv
