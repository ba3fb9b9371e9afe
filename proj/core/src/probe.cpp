#include "rtbench/probe.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace rtbench {

namespace {

void put_u64_be(std::uint64_t v, std::uint8_t* out) {
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

std::uint64_t get_u64_be(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::ok: return "ok";
    case DecodeStatus::short_buffer: return "short buffer";
    case DecodeStatus::bad_magic: return "bad magic";
    case DecodeStatus::bad_version: return "bad version";
  }
  return "unknown";
}

void encode_probe(const ProbePacket& p, std::span<std::uint8_t> out) {
  if (out.size() < kProbeHeaderSize) {
    throw std::length_error("probe payload size below header size");
  }
  std::memcpy(out.data(), kProbeMagic.data(), kProbeMagic.size());
  out[4] = kProbeVersion;
  put_u64_be(p.sequence, out.data() + 5);
  put_u64_be(p.client_send_time_ns, out.data() + 13);
  std::fill(out.begin() + kProbeHeaderSize, out.end(), std::uint8_t{0});
}

DecodeStatus decode_probe(std::span<const std::uint8_t> buf, ProbePacket& out) {
  if (buf.size() < kProbeHeaderSize) return DecodeStatus::short_buffer;
  if (std::memcmp(buf.data(), kProbeMagic.data(), kProbeMagic.size()) != 0) {
    return DecodeStatus::bad_magic;
  }
  if (buf[4] != kProbeVersion) return DecodeStatus::bad_version;
  out.sequence = get_u64_be(buf.data() + 5);
  out.client_send_time_ns = get_u64_be(buf.data() + 13);
  return DecodeStatus::ok;
}

}  // namespace rtbench
