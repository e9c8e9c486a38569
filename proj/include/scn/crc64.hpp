#pragma once

#include <cstddef>
#include <cstdint>

namespace scn {

/// CRC-64/XZ (reflected ECMA-182 polynomial, init and xorout all-ones).
/// Used as the integrity trailer of checkpoint and feature files.
uint64_t crc64(const void* data, size_t len, uint64_t crc = 0);

}  // namespace scn
