#pragma once

// Binary frame codec for the TCP transport.
//
// frame   = "DPSG" | type u8 | payload_len u32 | payload        (little-endian)
// PULL_REQ  worker_id u32
// MODEL     version u64 | dim u64 | dim x f64
// PUSH      worker_id u32 | base_version u64 | dim u64 | dim x f64
// SHUTDOWN  (empty)

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "dpsgd/error.hpp"
#include "dpsgd/param_vector.hpp"

namespace dpsgd::wire {

enum class MsgType : std::uint8_t { kPullReq = 0, kModel = 1, kPush = 2, kShutdown = 3 };

inline constexpr std::array<std::uint8_t, 4> kMagic{'D', 'P', 'S', 'G'};
inline constexpr std::size_t kHeaderSize = 9;
/// Frames above this payload size are rejected as malformed.
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

struct PullReq {
  std::uint32_t worker_id = 0;
  friend bool operator==(const PullReq&, const PullReq&) = default;
};

struct Model {
  std::uint64_t version = 0;
  std::vector<double> values;
  friend bool operator==(const Model&, const Model&) = default;
};

struct Push {
  UpdateVector update;
  friend bool operator==(const Push& a, const Push& b) {
    return a.update.worker_id == b.update.worker_id && a.update.base_version == b.update.base_version &&
           a.update.delta == b.update.delta;
  }
};

struct Shutdown {
  friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

using Message = std::variant<PullReq, Model, Push, Shutdown>;

/// Malformed or truncated frame.
class WireError : public TransportError {
 public:
  using TransportError::TransportError;
};

struct FrameHeader {
  MsgType type;
  std::uint32_t payload_len;
};

std::vector<std::uint8_t> encode(const Message& msg);

/// Validates magic, type and length. Throws WireError.
FrameHeader decode_header(std::span<const std::uint8_t> bytes);
/// Decodes a payload of the given type. Throws WireError on a length
/// mismatch, dim = 0, or a non-finite vector entry.
Message decode_payload(MsgType type, std::span<const std::uint8_t> payload);
/// Decodes exactly one complete frame; trailing or missing bytes are errors.
Message decode(std::span<const std::uint8_t> frame);

MsgType type_of(const Message& msg) noexcept;

}  // namespace dpsgd::wire
