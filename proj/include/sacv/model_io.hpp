#pragma once

#include <string>

#include <json.hpp>

#include "sacv/scorer.hpp"

namespace sacv {

/// Rebuild a scorer (tree, mlp, or ensemble) from its versioned JSON
/// document. Throws ParseError on unknown kinds or versions.
ScorerPtr scorer_from_json(const nlohmann::json& doc);

void save_scorer(const Scorer& model, const std::string& path);
ScorerPtr load_scorer(const std::string& path);

} // namespace sacv
