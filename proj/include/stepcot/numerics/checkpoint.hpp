// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "stepcot/numerics/module.hpp"

namespace stepcot {

/// Checkpoint document: {"<name>": {"shape": [...], "data": [...]}, ...} with
/// keys in lexicographic order, so identical parameters give identical bytes.
std::string checkpoint_to_json(const ParamList& params);
void save_checkpoint(const ParamList& params, const std::filesystem::path& path);

/// Raw view of a checkpoint: name -> tensor (no gradient).
std::map<std::string, Tensor> parse_checkpoint(const std::string& json_text);
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path);

/// Copies values into `params` in place. Every parameter must be present with a
/// matching shape; extra entries in the checkpoint are an error unless
/// `allow_extra` is set.
void load_checkpoint(ParamList& params, const std::map<std::string, Tensor>& values,
                     bool allow_extra = false);

}  // namespace stepcot
