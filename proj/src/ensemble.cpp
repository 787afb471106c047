#include "sacv/ensemble.hpp"

#include <algorithm>

#include "sacv/errors.hpp"
#include "sacv/rng.hpp"

namespace sacv {

namespace {

std::string innermost_kind(const Scorer& s) {
    if (const auto* e = dynamic_cast<const Ensemble*>(&s)) return e->base_kind();
    return s.kind();
}

void collect_flat(const ScorerPtr& s, std::vector<ScorerPtr>& out) {
    if (const auto* e = dynamic_cast<const Ensemble*>(s.get())) {
        for (const auto& m : e->members()) collect_flat(m, out);
    } else {
        out.push_back(s);
    }
}

} // namespace

Ensemble::Ensemble(std::vector<ScorerPtr> members, std::uint64_t master_seed)
    : members_(std::move(members)), master_seed_(master_seed) {
    if (members_.empty()) throw ParameterError("Ensemble: at least one member required");
    for (const auto& m : members_) {
        if (!m) throw ParameterError("Ensemble: null member");
    }
    base_kind_ = innermost_kind(*members_.front());
    const std::size_t d = members_.front()->feature_dim();
    for (const auto& m : members_) {
        if (m->feature_dim() != d) {
            throw ParameterError("Ensemble: members disagree on feature dimension");
        }
        if (innermost_kind(*m) != base_kind_) {
            throw ParameterError("Ensemble: members must be homogeneous, found " +
                                 innermost_kind(*m) + " next to " + base_kind_);
        }
    }
}

Matrix Ensemble::member_scores(const Matrix& X) const {
    Matrix scores(members_.size(), X.rows());
    for (std::size_t k = 0; k < members_.size(); ++k) {
        const auto s = members_[k]->score(X);
        std::copy(s.begin(), s.end(), scores.row(k).begin());
    }
    return scores;
}

std::vector<ScorerPtr> Ensemble::flat_members() const {
    std::vector<ScorerPtr> out;
    for (const auto& m : members_) collect_flat(m, out);
    return out;
}

Matrix Ensemble::flat_member_scores(const Matrix& X) const {
    const auto flat = flat_members();
    Matrix scores(flat.size(), X.rows());
    for (std::size_t k = 0; k < flat.size(); ++k) {
        const auto s = flat[k]->score(X);
        std::copy(s.begin(), s.end(), scores.row(k).begin());
    }
    return scores;
}

std::vector<double> Ensemble::do_score(const Matrix& X) const {
    std::vector<double> mean(X.rows(), 0.0);
    for (const auto& m : members_) {
        const auto s = m->score(X);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += s[i];
    }
    const double inv = 1.0 / static_cast<double>(members_.size());
    for (double& v : mean) v *= inv;
    return mean;
}

nlohmann::json Ensemble::to_json() const {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : members_) members.push_back(m->to_json());
    return nlohmann::json{{"format", "sacv-model"},
                          {"version", 1},
                          {"kind", "ensemble"},
                          {"base_kind", base_kind_},
                          {"T", members_.size()},
                          {"master_seed", master_seed_},
                          {"members", std::move(members)}};
}

std::vector<double> mean_score(const Ensemble& e, const Matrix& X) { return e.score(X); }

std::shared_ptr<const Ensemble> train_bagging(const LabeledDataset& train, const Hyperparams& hp,
                                              std::size_t T, std::uint64_t seed) {
    if (T < 1) throw ParameterError("train_bagging: T must be >= 1");
    train.require_both_classes("train_bagging");

    const std::size_t n = train.size();
    std::vector<ScorerPtr> members;
    members.reserve(T);
    for (std::size_t k = 0; k < T; ++k) {
        const std::uint64_t member_seed = derive_seed(seed, k);
        auto rng = make_engine(derive_seed(member_seed, 0xB0075));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);

        std::vector<std::size_t> resample(n);
        bool ok = false;
        for (int attempt = 0; attempt <= 10; ++attempt) {
            for (auto& i : resample) i = pick(rng);
            bool has[2] = {false, false};
            for (std::size_t i : resample) has[train.label(i)] = true;
            if (has[0] && has[1]) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw TrainingError("train_bagging: member " + std::to_string(k) +
                                ": bootstrap resample single-class after 10 retries");
        }
        members.push_back(
            train_single(train.subset(resample), with_seed(hp, derive_seed(member_seed, 0x117))));
    }
    return std::make_shared<const Ensemble>(std::move(members), seed);
}

} // namespace sacv
