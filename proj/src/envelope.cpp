#include "scn/envelope.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "scn/crc64.hpp"

namespace scn::envelope {

namespace {

void append_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t read_u64_le(const char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= uint64_t(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return v;
}

}  // namespace

void write(const std::filesystem::path& path,
           const nlohmann::ordered_json& header,
           const std::vector<float>& payload) {
  std::string bytes = header.dump();
  bytes.push_back('\n');
  bytes.reserve(bytes.size() + payload.size() * 4 + 8);
  for (float f : payload) {
    const auto u = std::bit_cast<uint32_t>(f);
    for (int i = 0; i < 4; ++i) {
      bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
    }
  }
  append_u64_le(bytes, crc64(bytes.data(), bytes.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

Contents read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());

  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) {
    throw DataError(path.string() + ": missing header line");
  }
  const size_t header_len = static_cast<size_t>(newline - bytes.begin());
  if (bytes.size() < header_len + 1 + 8) {
    throw TruncatedError(path.string() + ": too short for a CRC trailer");
  }

  Contents contents;
  try {
    contents.header = nlohmann::ordered_json::parse(
        std::string_view(bytes.data(), header_len));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }

  const size_t payload_len = bytes.size() - header_len - 1 - 8;
  contents.payload.assign(bytes.begin() + static_cast<long>(header_len) + 1,
                          bytes.begin() + static_cast<long>(header_len + 1 + payload_len));
  const uint64_t stored = read_u64_le(bytes.data() + bytes.size() - 8);
  const uint64_t actual = crc64(bytes.data(), bytes.size() - 8);
  contents.crc_ok = stored == actual;
  return contents;
}

std::vector<float> decode_floats(const std::vector<char>& payload,
                                 size_t byte_offset, size_t byte_length) {
  if (byte_length % 4 != 0 || byte_offset + byte_length > payload.size()) {
    throw TruncatedError("payload slice out of range");
  }
  std::vector<float> values(byte_length / 4);
  for (size_t i = 0; i < values.size(); ++i) {
    const char* p = payload.data() + byte_offset + 4 * i;
    uint32_t u = 0;
    for (int b = 0; b < 4; ++b) {
      u |= uint32_t(static_cast<unsigned char>(p[b])) << (8 * b);
    }
    values[i] = std::bit_cast<float>(u);
  }
  return values;
}

}  // namespace scn::envelope
