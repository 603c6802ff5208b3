#pragma once

#include <nlohmann/json_fwd.hpp>

#include "twistdec/twisted.hpp"

namespace twistdec {

// JSON fragments of the CLI report. Keys are emitted sorted, values come
// straight from the engines, so equal inputs render byte-identically.
nlohmann::json tuple_flags_json(const IsometryTuple& t);
nlohmann::json criterion_json(const CriterionResult& c);
nlohmann::json classifier_json(const ClassifierResult& c);
nlohmann::json subset_json(Bitmask a, int n);

// Blocks plus the shared verification results of a decomposition run.
nlohmann::json decomposition_json(const DecompositionReport& rep, int n);

const char* verdict_string(const DecompositionReport& rep);

}  // namespace twistdec
