#include "dpsgd/engine/wire.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

namespace dpsgd::wire {

namespace {


template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint64_t bits = 0;
  if constexpr (std::is_same_v<T, double>) {
    bits = std::bit_cast<std::uint64_t>(value);
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* field) {
    if (bytes_.size() - pos_ < sizeof(T)) throw WireError(std::string("truncated payload reading ") + field);
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<std::uint64_t>(bytes_[pos_ + b]) << (8 * b);
    pos_ += sizeof(T);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(bits);
    } else {
      return static_cast<T>(bits);
    }
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<double> get_vector(Reader& r) {
  const auto dim = r.get<std::uint64_t>("dim");
  if (dim == 0) throw WireError("vector dimension 0");
  if (r.remaining() / 8 < dim || r.remaining() != dim * 8) {
    throw WireError("payload length does not match dim " + std::to_string(dim));
  }
  std::vector<double> v(dim);
  for (auto& x : v) {
    x = r.get<double>("value");
    if (!std::isfinite(x)) throw WireError("non-finite vector entry");
  }
  return v;
}

void put_vector(std::vector<std::uint8_t>& out, std::span<const double> v) {
  if (v.empty()) throw WireError("cannot encode a 0-dimensional vector");
  put<std::uint64_t>(out, v.size());
  for (double x : v) put(out, x);
}

}  // namespace

MsgType type_of(const Message& msg) noexcept { return static_cast<MsgType>(msg.index()); }

std::vector<std::uint8_t> encode(const Message& msg) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  out.push_back(static_cast<std::uint8_t>(type_of(msg)));
  put<std::uint32_t>(out, 0);  // patched below
  std::visit(
      [&out](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, PullReq>) {
          put(out, m.worker_id);
        } else if constexpr (std::is_same_v<M, Model>) {
          put(out, m.version);
          put_vector(out, m.values);
        } else if constexpr (std::is_same_v<M, Push>) {
          put(out, m.update.worker_id);
          put(out, m.update.base_version);
          put_vector(out, m.update.delta);
        }
      },
      msg);
  const std::size_t len = out.size() - kHeaderSize;
  if (len > kMaxPayload) throw WireError("payload too large");
  for (std::size_t b = 0; b < 4; ++b) out[5 + b] = static_cast<std::uint8_t>(len >> (8 * b));
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw WireError("truncated frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw WireError("bad magic");
  const std::uint8_t type = bytes[4];
  if (type > static_cast<std::uint8_t>(MsgType::kShutdown)) throw WireError("unknown message type " + std::to_string(type));
  Reader r(bytes.subspan(5, 4));
  const auto len = r.get<std::uint32_t>("payload_len");
  if (len > kMaxPayload) throw WireError("payload length " + std::to_string(len) + " exceeds limit");
  return {static_cast<MsgType>(type), len};
}

Message decode_payload(MsgType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  switch (type) {
    case MsgType::kPullReq: {
      PullReq m{r.get<std::uint32_t>("worker_id")};
      if (r.remaining() != 0) throw WireError("trailing bytes in PULL_REQ");
      return m;
    }
    case MsgType::kModel: {
      Model m;
      m.version = r.get<std::uint64_t>("version");
      m.values = get_vector(r);
      return m;
    }
    case MsgType::kPush: {
      Push m;
      m.update.worker_id = r.get<std::uint32_t>("worker_id");
      m.update.base_version = r.get<std::uint64_t>("base_version");
      m.update.delta = get_vector(r);
      return m;
    }
    case MsgType::kShutdown:
      if (!payload.empty()) throw WireError("trailing bytes in SHUTDOWN");
      return Shutdown{};
  }
  throw WireError("unknown message type");
}

Message decode(std::span<const std::uint8_t> frame) {
  const FrameHeader h = decode_header(frame);
  const auto body = frame.subspan(kHeaderSize);
  if (body.size() < h.payload_len) throw WireError("truncated frame payload");
  if (body.size() > h.payload_len) throw WireError("trailing bytes after frame");
  return decode_payload(h.type, body);
}

}  // namespace dpsgd::wire
