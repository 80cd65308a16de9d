#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "qfeat/features.hpp"
#include "qfeat/kernel.hpp"
#include "qfeat/loss.hpp"
#include "qfeat/solver.hpp"
#include "qfeat/theory.hpp"

namespace qfeat {

nlohmann::json kernel_to_json(const KernelSpec& spec);
KernelSpec kernel_from_json(const nlohmann::json& j);

nlohmann::json loss_to_json(const LossSpec& spec);
LossSpec loss_from_json(const nlohmann::json& j);

// {kind, M, seed, sampling, kernel, params, phases, weights}; numbers are
// written with round-trip precision.
nlohmann::json feature_map_to_json(const FeatureMap& map);
FeatureMap feature_map_from_json(const nlohmann::json& j);

// "fnv1a64:<16 hex digits>" over the compact JSON encoding of the map.
std::string feature_map_hash(const FeatureMap& map);

// Coefficients, loss, lambda, diagnostics, and the feature map (with its
// hash) or the kernel and training inputs for exact models.
nlohmann::json model_to_json(const Model& model);
// Throws ArgumentError when the embedded feature map does not match its hash.
Model model_from_json(const nlohmann::json& j);

nlohmann::json schedule_to_json(const RegularitySpec& spec, std::int64_t n, double C_M,
                                const RateSchedule& s);

}  // namespace qfeat
