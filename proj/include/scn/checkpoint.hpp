#pragma once

#include <filesystem>

#include "scn/model.hpp"

namespace scn {

/// Writes the model as a one-line JSON header (format version, encoder
/// config, mode, tune depth, D2, ablation flag, offset divisor, tensor
/// directory) followed by the tensor payloads in directory order and a
/// CRC-64 trailer. Loading a saved checkpoint reproduces forward outputs
/// bitwise.
void save_checkpoint(const ScnModel& model, const std::filesystem::path& path);

/// Errors are distinct: VersionError (unknown format_version),
/// TruncatedError (payload shorter than the directory claims), ChecksumError
/// (CRC mismatch). No partially loaded model escapes on failure.
ScnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace scn
