#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eegstream/encoder.hpp"

namespace eegstream {

// CRC-32 (IEEE 802.3, poly 0xEDB88320 reflected), used by the checkpoint and
// recording containers.
uint32_t crc32(const uint8_t* data, size_t n, uint32_t seed = 0);

// Versioned little-endian container: magic, version, config block, named
// tensor table (name / shape / precision / payload), whole-file CRC-32.
// Round trips are bit-exact.
void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace eegstream
