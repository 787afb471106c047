#include "sacv/model_io.hpp"

#include <fstream>

#include "sacv/ensemble.hpp"
#include "sacv/errors.hpp"
#include "sacv/learners.hpp"

namespace sacv {

namespace {

ScorerPtr tree_from_json(const nlohmann::json& doc) {
    std::vector<TreeNode> nodes;
    for (const auto& n : doc.at("nodes")) {
        nodes.push_back(TreeNode{n.at("feature").get<int>(), n.at("threshold").get<double>(),
                                 n.at("left").get<int>(), n.at("right").get<int>(),
                                 n.at("score").get<double>()});
    }
    return std::make_shared<DecisionTree>(std::move(nodes), doc.at("feature_dim").get<std::size_t>());
}

ScorerPtr mlp_from_json(const nlohmann::json& doc) {
    const auto dims = doc.at("layer_dims").get<std::vector<std::size_t>>();
    std::vector<double> params;
    for (const auto& layer : doc.at("layers")) {
        for (const auto& row : layer.at("weights")) {
            for (const auto& w : row) params.push_back(w.get<double>());
        }
        for (const auto& b : layer.at("biases")) params.push_back(b.get<double>());
    }
    return std::make_shared<Mlp>(dims, std::move(params));
}

ScorerPtr ensemble_from_json(const nlohmann::json& doc) {
    std::vector<ScorerPtr> members;
    for (const auto& m : doc.at("members")) members.push_back(scorer_from_json(m));
    return std::make_shared<Ensemble>(std::move(members),
                                      doc.value("master_seed", std::uint64_t{0}));
}

} // namespace

ScorerPtr scorer_from_json(const nlohmann::json& doc) {
    if (doc.value("format", std::string{}) != "sacv-model") {
        throw ParseError("scorer_from_json: not a model document");
    }
    if (doc.value("version", 0) != 1) {
        throw ParseError("scorer_from_json: unsupported version " +
                         std::to_string(doc.value("version", 0)));
    }
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "tree") return tree_from_json(doc);
    if (kind == "mlp") return mlp_from_json(doc);
    if (kind == "ensemble") return ensemble_from_json(doc);
    throw ParseError("scorer_from_json: unknown model kind \"" + kind + "\"");
}

void save_scorer(const Scorer& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("save_scorer: cannot open " + path + " for writing");
    out << model.to_json().dump(2) << '\n';
    if (!out) throw IoError("save_scorer: write failed for " + path);
}

ScorerPtr load_scorer(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_scorer: cannot open " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("load_scorer: " + path + ": " + e.what());
    }
    return scorer_from_json(doc);
}

} // namespace sacv
