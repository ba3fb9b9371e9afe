#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace rtbench {

// Wire layout of one probe datagram (big-endian, bit-exact):
//   [0..4)   magic "RTTP"
//   [4]      version
//   [5..13)  sequence, u64
//   [13..21) client send time in ns, u64 (client clock, opaque to the server)
//   [21..)   zero padding up to the configured payload size
inline constexpr std::array<std::uint8_t, 4> kProbeMagic{'R', 'T', 'T', 'P'};
inline constexpr std::uint8_t kProbeVersion = 1;
inline constexpr std::size_t kProbeHeaderSize = 21;
inline constexpr std::size_t kDefaultPayloadSize = 500;
inline constexpr std::size_t kMaxDatagramSize = 65536;
inline constexpr std::uint16_t kDefaultPort = 7447;

struct ProbePacket {
  std::uint64_t sequence = 0;
  std::uint64_t client_send_time_ns = 0;

  friend bool operator==(const ProbePacket&, const ProbePacket&) = default;
};

enum class DecodeStatus : std::uint8_t {
  ok,
  short_buffer,
  bad_magic,
  bad_version,
};

const char* to_string(DecodeStatus s);

// Serializes p into out (header + zero padding). out.size() is the payload
// size and must be >= kProbeHeaderSize; throws std::length_error otherwise.
void encode_probe(const ProbePacket& p, std::span<std::uint8_t> out);

// Inverse of encode_probe on valid input. Padding bytes are not inspected.
DecodeStatus decode_probe(std::span<const std::uint8_t> buf, ProbePacket& out);

}  // namespace rtbench
