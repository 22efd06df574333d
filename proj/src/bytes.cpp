#include "dapce/bytes.hpp"

namespace dapce {

Bytes frame_payload(std::string_view magic, std::uint32_t version, const Bytes& payload) {
  ByteWriter w;
  w.raw(magic);
  w.u32(version);
  w.u64(payload.size());
  w.bytes(payload);
  const std::uint64_t sum = fnv1a64(w.data().data(), w.data().size());
  w.u64(sum);
  return w.take();
}

Bytes unframe_payload(std::string_view magic, std::uint32_t version, const Bytes& framed,
                      const std::string& context) {
  const std::size_t header = magic.size() + 4 + 8;
  if (framed.size() < magic.size() ||
      std::string_view(reinterpret_cast<const char*>(framed.data()), magic.size()) != magic) {
    fail(ErrorKind::BadFormat, context + ": not a recognized file (bad magic bytes)");
  }
  if (framed.size() < header) fail(ErrorKind::Truncated, context + ": header is truncated");
  ByteReader r(framed.data(), framed.size(), context);
  r.raw(magic.size());
  const std::uint32_t found = r.u32();
  if (found != version) {
    fail(ErrorKind::UnsupportedVersion, context + ": format version " + std::to_string(found) +
                                            " is not supported (expected " + std::to_string(version) + ")");
  }
  const std::uint64_t length = r.u64();
  if (length > framed.size() - header || framed.size() - header - length < 8) {
    fail(ErrorKind::Truncated, context + ": payload is truncated");
  }
  if (framed.size() - header - length != 8) {
    fail(ErrorKind::BadFormat, context + ": trailing bytes after checksum");
  }
  const std::size_t body = header + static_cast<std::size_t>(length);
  ByteReader tail(framed.data() + body, 8, context);
  if (tail.u64() != fnv1a64(framed.data(), body)) {
    fail(ErrorKind::ChecksumMismatch, context + ": checksum mismatch, data is corrupted");
  }
  return Bytes(framed.begin() + static_cast<std::ptrdiff_t>(header),
               framed.begin() + static_cast<std::ptrdiff_t>(body));
}

}  // namespace dapce
