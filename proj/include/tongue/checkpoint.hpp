#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "tongue/cnn.hpp"
#include "tongue/metrics.hpp"
#include "tongue/mlp.hpp"
#include "tongue/svm.hpp"

namespace tongue {

inline constexpr int kCheckpointVersion = 1;

/// Checkpoints are JSON documents: a header (`format_version`, `kind`, `seed`,
/// plus the layer spec for networks) followed by nested numeric arrays.
/// Doubles are written in shortest round-trip form, so save -> load -> save
/// is byte-stable.
nlohmann::json to_json(const MlpModel& model, std::uint64_t seed);
MlpModel mlp_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const CnnModel& model);
CnnModel cnn_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const ConfusionMatrix& cm);
/// Six metrics; undefined ones serialise as the string "undefined".
nlohmann::json to_json(const Metrics& m);

/// `kind` field of a checkpoint ("mlp", "cnn", "svm"); throws ValidationError otherwise.
std::string checkpoint_kind(const nlohmann::json& doc);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace tongue
