#pragma once

#include "xgnn/model.hpp"
#include "xgnn/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace xgnn {

nlohmann::json read_json(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

/// One TSV per parameter under dir/params, one mask file per expander map
/// under dir/masks. Returns the mask paths relative to dir.
std::vector<std::string> save_parameters(const Model& model, const std::filesystem::path& dir);
void load_parameters(Model& model, const std::filesystem::path& dir);

/// Aligned text table over report documents (single runs, cv summaries or
/// sweeps). Regression reports fill the MAE column, the others ACC.
std::string render_table(const std::vector<nlohmann::json>& reports);

}  // namespace xgnn
