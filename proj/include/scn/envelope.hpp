#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "scn/error.hpp"

namespace scn::envelope {

/// Shared on-disk container for checkpoints and feature sets: one compact
/// JSON header line, a raw little-endian float32 payload, and a trailing
/// 8-byte little-endian CRC-64 over everything before it.

void write(const std::filesystem::path& path,
           const nlohmann::ordered_json& header,
           const std::vector<float>& payload);

struct Contents {
  nlohmann::ordered_json header;
  std::vector<char> payload;  // raw bytes between header newline and CRC
  bool crc_ok = false;
};

/// Splits and parses the container. Integrity interpretation (declared
/// payload length vs actual, CRC verdict) is left to the caller so that
/// truncation and corruption surface as distinct errors.
Contents read(const std::filesystem::path& path);

/// Decodes a little-endian float32 slice of a payload.
std::vector<float> decode_floats(const std::vector<char>& payload,
                                 size_t byte_offset, size_t byte_length);

}  // namespace scn::envelope
