#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dsr/body_model.h"
#include "dsr/losses.h"

namespace dsr {

// Wavefront OBJ with `v` and triangular `f` records only.
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);

// {"theta": [72], "beta": [10], "camera": {"s": .., "tx": .., "ty": ..}}
nlohmann::json params_to_json(const BodyParams& params);
BodyParams params_from_json(const nlohmann::json& j);
void write_params(const std::filesystem::path& path, const BodyParams& params);
BodyParams read_params(const std::filesystem::path& path);

// {"joints_2d": [[x, y], ..], "confidence": [..], "joints_3d": [[x, y, z], ..],
//  "weights_3d": [..], "params": {..}}; every key optional.
nlohmann::json joint_targets_to_json(const JointTargets& targets);
JointTargets joint_targets_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

void save_template(const std::filesystem::path& path, const BodyTemplate& body);
BodyTemplate load_template(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace dsr
