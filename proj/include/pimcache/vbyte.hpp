#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pimcache/errors.hpp"
#include "pimcache/parallel.hpp"

namespace pimcache::vbyte {

// Up to five bytes, least-significant 7-bit group first. Every byte but the
// last has its MSB set.
struct Encoded {
  std::array<std::uint8_t, 5> bytes{};
  std::uint8_t size = 0;

  std::span<const std::uint8_t> view() const { return {bytes.data(), size}; }
};

inline constexpr std::size_t encoded_length(std::uint32_t v) {
  std::size_t n = 1;
  while (v >= 0x80) {
    v >>= 7;
    ++n;
  }
  return n;
}

inline Encoded encode_u32(std::uint32_t v) {
  Encoded e;
  while (v > 0x7F) {
    e.bytes[e.size++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
    v >>= 7;
  }
  e.bytes[e.size++] = static_cast<std::uint8_t>(v);
  return e;
}

inline void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  while (v > 0x7F) {
    out.push_back(static_cast<std::uint8_t>((v & 0x7F) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

struct Decoded {
  std::uint32_t value = 0;
  std::size_t consumed = 0;
};

inline Decoded decode_u32(std::span<const std::uint8_t> bytes, std::size_t cursor) {
  std::uint32_t value = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    if (cursor + i >= bytes.size()) {
      throw TruncatedStream("VByte value truncated at byte " + std::to_string(cursor + i));
    }
    const std::uint8_t b = bytes[cursor + i];
    if (i == 4 && (b & 0xF0) != 0) {
      // Fifth byte may only carry bits 28..31 and must terminate.
      throw MalformedStream("VByte value overflows 32 bits at byte " + std::to_string(cursor));
    }
    value |= static_cast<std::uint32_t>(b & 0x7F) << (7 * i);
    if ((b & 0x80) == 0) return {value, i + 1};
  }
  throw MalformedStream("unreachable");
}

inline constexpr std::array<char, 4> kMagic = {'V', 'B', 'F', '1'};
inline constexpr std::size_t kHeaderBytes = 4 + 8 + 8;
inline constexpr std::size_t kDirEntryBytes = 16;

struct DirEntry {
  std::uint64_t int_count = 0;
  std::uint64_t byte_offset = 0;

  bool operator==(const DirEntry&) const = default;
};

// "VBF1" | count u64 | partitions u64 | partitions x (int_count u64,
// byte_offset u64) | payload. All integers little-endian.
struct Frame {
  std::uint64_t count = 0;
  std::vector<DirEntry> directory;
  std::vector<std::uint8_t> payload;

  std::size_t serialized_size() const {
    return kHeaderBytes + kDirEntryBytes * directory.size() + payload.size();
  }

  bool operator==(const Frame&) const = default;
};

namespace detail {
inline void put64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

// Byte end of partition p within the payload.
inline std::uint64_t partition_end(const Frame& f, std::size_t p) {
  return p + 1 < f.directory.size() ? f.directory[p + 1].byte_offset : f.payload.size();
}
}  // namespace detail

inline std::vector<std::uint8_t> serialize(const Frame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(f.serialized_size());
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  detail::put64(out, f.count);
  detail::put64(out, f.directory.size());
  for (const auto& e : f.directory) {
    detail::put64(out, e.int_count);
    detail::put64(out, e.byte_offset);
  }
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

// Checks the directory against the count and payload size.
inline void validate(const Frame& f) {
  std::uint64_t total = 0;
  for (std::size_t p = 0; p < f.directory.size(); ++p) {
    const auto& e = f.directory[p];
    if (p == 0 && e.byte_offset != 0) throw MalformedFrame("first partition offset must be 0");
    if (p > 0 && e.byte_offset <= f.directory[p - 1].byte_offset) {
      throw MalformedFrame("directory offsets must be strictly increasing");
    }
    if (e.byte_offset >= f.payload.size() || e.int_count == 0) {
      throw MalformedFrame("directory entry " + std::to_string(p) + " out of payload range");
    }
    const auto bytes = detail::partition_end(f, p) - e.byte_offset;
    if (bytes < e.int_count || bytes > 5 * e.int_count) {
      throw MalformedFrame("partition " + std::to_string(p) + " size inconsistent with count");
    }
    total += e.int_count;
  }
  if (total != f.count) throw MalformedFrame("directory counts do not sum to frame count");
  if (f.directory.empty() && !f.payload.empty()) throw MalformedFrame("payload without directory");
}

inline Frame parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic.data(), 4) != 0) {
    throw MalformedFrame("missing VBF1 header");
  }
  Frame f;
  f.count = detail::get64(bytes, 4);
  const std::uint64_t parts = detail::get64(bytes, 12);
  if (parts > (bytes.size() - kHeaderBytes) / kDirEntryBytes) {
    throw MalformedFrame("directory runs past end of frame");
  }
  f.directory.resize(parts);
  for (std::size_t p = 0; p < parts; ++p) {
    const std::size_t at = kHeaderBytes + p * kDirEntryBytes;
    f.directory[p] = {detail::get64(bytes, at), detail::get64(bytes, at + 8)};
  }
  const std::size_t payload_at = kHeaderBytes + parts * kDirEntryBytes;
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payload_at), bytes.end());
  validate(f);
  return f;
}

// Splits `values` into min(P, n) contiguous near-equal runs (first runs take
// the remainder) and VByte-encodes each independently. Output does not depend
// on `workers`.
inline Frame compress_array(std::span<const std::uint32_t> values, std::size_t partitions,
                            std::size_t workers = 1) {
  if (partitions == 0) throw InvalidArgument("compress_array: partitions must be >= 1");
  if (workers == 0) throw InvalidArgument("compress_array: workers must be >= 1");
  Frame f;
  f.count = values.size();
  const std::size_t parts = std::min<std::size_t>(partitions, values.size());
  if (parts == 0) return f;

  std::vector<std::size_t> starts(parts + 1, 0);
  const std::size_t base = values.size() / parts;
  const std::size_t rem = values.size() % parts;
  for (std::size_t p = 0; p < parts; ++p) starts[p + 1] = starts[p] + base + (p < rem ? 1 : 0);

  std::vector<std::vector<std::uint8_t>> streams(parts);
  parallel_ranges(workers, parts, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto& s = streams[p];
      s.reserve(starts[p + 1] - starts[p]);
      for (std::size_t i = starts[p]; i < starts[p + 1]; ++i) append_u32(s, values[i]);
    }
  });
  f.directory.resize(parts);
  std::size_t total = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    f.directory[p] = {starts[p + 1] - starts[p], total};
    total += streams[p].size();
  }
  f.payload.reserve(total);
  for (auto& s : streams) f.payload.insert(f.payload.end(), s.begin(), s.end());
  return f;
}

// Decodes one partition into `out`. Throws MalformedFrame when the stream
// does not hold exactly int_count values within its byte range.
inline void decode_partition(const Frame& f, std::size_t p, std::span<std::uint32_t> out) {
  const auto& e = f.directory[p];
  const std::uint64_t end = detail::partition_end(f, p);
  std::span<const std::uint8_t> stream(f.payload.data(), end);
  std::size_t cursor = e.byte_offset;
  try {
    for (std::size_t i = 0; i < e.int_count; ++i) {
      const auto d = decode_u32(stream, cursor);
      out[i] = d.value;
      cursor += d.consumed;
    }
  } catch (const Error& ex) {
    throw MalformedFrame("partition " + std::to_string(p) + ": " + ex.what());
  }
  if (cursor != end) {
    throw MalformedFrame("partition " + std::to_string(p) + " has trailing bytes");
  }
}

inline std::vector<std::uint32_t> decompress_frame(const Frame& f, std::size_t workers = 1) {
  if (workers == 0) throw InvalidArgument("decompress_frame: workers must be >= 1");
  validate(f);
  std::vector<std::uint32_t> out(f.count);
  std::vector<std::size_t> starts(f.directory.size(), 0);
  for (std::size_t p = 1; p < starts.size(); ++p) {
    starts[p] = starts[p - 1] + f.directory[p - 1].int_count;
  }
  parallel_ranges(workers, f.directory.size(),
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    for (std::size_t p = begin; p < end; ++p) {
                      decode_partition(
                          f, p, std::span(out).subspan(starts[p], f.directory[p].int_count));
                    }
                  });
  return out;
}

inline std::vector<std::uint32_t> decompress_frame(std::span<const std::uint8_t> bytes,
                                                   std::size_t workers = 1) {
  return decompress_frame(parse(bytes), workers);
}

// (4 * count) / serialized frame size.
inline double compression_ratio(const Frame& f) {
  if (f.count == 0) throw InvalidArgument("compression_ratio: empty frame");
  return 4.0 * static_cast<double>(f.count) / static_cast<double>(f.serialized_size());
}

// (4 * count) / payload size, ignoring header and directory.
inline double payload_ratio(const Frame& f) {
  if (f.count == 0) throw InvalidArgument("payload_ratio: empty frame");
  return 4.0 * static_cast<double>(f.count) / static_cast<double>(f.payload.size());
}

}  // namespace pimcache::vbyte
