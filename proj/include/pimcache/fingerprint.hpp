#pragma once

#include <array>
#include <bit>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pimcache/core.hpp"
#include "pimcache/parallel.hpp"

namespace pimcache {

namespace hash {

inline std::uint64_t load64(const std::byte* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof v);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

inline std::uint32_t load32(const std::byte* p) {
  std::uint32_t v;
  std::memcpy(&v, p, sizeof v);
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
  return v;
}

// ---- XXH64 ----------------------------------------------------------------

namespace xxh64_detail {
inline constexpr std::uint64_t P1 = 0x9E3779B185EBCA87ULL;
inline constexpr std::uint64_t P2 = 0xC2B2AE3D27D4EB4FULL;
inline constexpr std::uint64_t P3 = 0x165667B19E3779F9ULL;
inline constexpr std::uint64_t P4 = 0x85EBCA77C2B2AE63ULL;
inline constexpr std::uint64_t P5 = 0x27D4EB2F165667C5ULL;

inline std::uint64_t round(std::uint64_t acc, std::uint64_t input) {
  acc += input * P2;
  acc = std::rotl(acc, 31);
  return acc * P1;
}

inline std::uint64_t merge(std::uint64_t acc, std::uint64_t val) {
  acc ^= round(0, val);
  return acc * P1 + P4;
}
}  // namespace xxh64_detail

inline std::uint64_t xxh64(std::span<const std::byte> data, std::uint64_t seed) {
  using namespace xxh64_detail;
  const std::byte* p = data.data();
  const std::byte* const end = p + data.size();
  std::uint64_t h;
  if (data.size() >= 32) {
    std::uint64_t v1 = seed + P1 + P2;
    std::uint64_t v2 = seed + P2;
    std::uint64_t v3 = seed;
    std::uint64_t v4 = seed - P1;
    const std::byte* const limit = end - 32;
    do {
      v1 = round(v1, load64(p));
      v2 = round(v2, load64(p + 8));
      v3 = round(v3, load64(p + 16));
      v4 = round(v4, load64(p + 24));
      p += 32;
    } while (p <= limit);
    h = std::rotl(v1, 1) + std::rotl(v2, 7) + std::rotl(v3, 12) + std::rotl(v4, 18);
    h = merge(h, v1);
    h = merge(h, v2);
    h = merge(h, v3);
    h = merge(h, v4);
  } else {
    h = seed + P5;
  }
  h += static_cast<std::uint64_t>(data.size());
  while (end - p >= 8) {
    h ^= round(0, load64(p));
    h = std::rotl(h, 27) * P1 + P4;
    p += 8;
  }
  if (end - p >= 4) {
    h ^= static_cast<std::uint64_t>(load32(p)) * P1;
    h = std::rotl(h, 23) * P2 + P3;
    p += 4;
  }
  while (p < end) {
    h ^= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(*p)) * P5;
    h = std::rotl(h, 11) * P1;
    ++p;
  }
  h ^= h >> 33;
  h *= P2;
  h ^= h >> 29;
  h *= P3;
  h ^= h >> 32;
  return h;
}

// ---- XXH32 ----------------------------------------------------------------

inline std::uint32_t xxh32(std::span<const std::byte> data, std::uint32_t seed) {
  constexpr std::uint32_t P1 = 0x9E3779B1U;
  constexpr std::uint32_t P2 = 0x85EBCA77U;
  constexpr std::uint32_t P3 = 0xC2B2AE3DU;
  constexpr std::uint32_t P4 = 0x27D4EB2FU;
  constexpr std::uint32_t P5 = 0x165667B1U;
  auto round = [](std::uint32_t acc, std::uint32_t input) {
    acc += input * P2;
    acc = std::rotl(acc, 13);
    return acc * P1;
  };
  const std::byte* p = data.data();
  const std::byte* const end = p + data.size();
  std::uint32_t h;
  if (data.size() >= 16) {
    std::uint32_t v1 = seed + P1 + P2;
    std::uint32_t v2 = seed + P2;
    std::uint32_t v3 = seed;
    std::uint32_t v4 = seed - P1;
    const std::byte* const limit = end - 16;
    do {
      v1 = round(v1, load32(p));
      v2 = round(v2, load32(p + 4));
      v3 = round(v3, load32(p + 8));
      v4 = round(v4, load32(p + 12));
      p += 16;
    } while (p <= limit);
    h = std::rotl(v1, 1) + std::rotl(v2, 7) + std::rotl(v3, 12) + std::rotl(v4, 18);
  } else {
    h = seed + P5;
  }
  h += static_cast<std::uint32_t>(data.size());
  while (end - p >= 4) {
    h += load32(p) * P3;
    h = std::rotl(h, 17) * P4;
    p += 4;
  }
  while (p < end) {
    h += std::to_integer<std::uint8_t>(*p) * P5;
    h = std::rotl(h, 11) * P1;
    ++p;
  }
  h ^= h >> 15;
  h *= P2;
  h ^= h >> 13;
  h *= P3;
  h ^= h >> 16;
  return h;
}

// ---- MurmurHash3 x86_32 ---------------------------------------------------

inline std::uint32_t murmur3_32(std::span<const std::byte> data, std::uint32_t seed) {
  constexpr std::uint32_t c1 = 0xcc9e2d51U;
  constexpr std::uint32_t c2 = 0x1b873593U;
  const std::size_t nblocks = data.size() / 4;
  std::uint32_t h = seed;
  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint32_t k = load32(data.data() + 4 * i);
    k *= c1;
    k = std::rotl(k, 15);
    k *= c2;
    h ^= k;
    h = std::rotl(h, 13);
    h = h * 5 + 0xe6546b64U;
  }
  const std::byte* tail = data.data() + 4 * nblocks;
  std::uint32_t k = 0;
  switch (data.size() & 3) {
    case 3:
      k ^= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(tail[2])) << 16;
      [[fallthrough]];
    case 2:
      k ^= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(tail[1])) << 8;
      [[fallthrough]];
    case 1:
      k ^= std::to_integer<std::uint8_t>(tail[0]);
      k *= c1;
      k = std::rotl(k, 15);
      k *= c2;
      h ^= k;
  }
  h ^= static_cast<std::uint32_t>(data.size());
  h ^= h >> 16;
  h *= 0x85ebca6bU;
  h ^= h >> 13;
  h *= 0xc2b2ae35U;
  h ^= h >> 16;
  return h;
}

// ---- FarmHash64 (farmhashna, the platform-independent Fingerprint64) -------

namespace farm_detail {
inline constexpr std::uint64_t k0 = 0xc3a5c85c97cb3127ULL;
inline constexpr std::uint64_t k1 = 0xb492b66fbe98f273ULL;
inline constexpr std::uint64_t k2 = 0x9ae16a3b2f90404fULL;

inline std::uint64_t shift_mix(std::uint64_t v) { return v ^ (v >> 47); }

inline std::uint64_t len16(std::uint64_t u, std::uint64_t v, std::uint64_t mul) {
  std::uint64_t a = (u ^ v) * mul;
  a ^= a >> 47;
  std::uint64_t b = (v ^ a) * mul;
  b ^= b >> 47;
  return b * mul;
}

inline std::uint64_t len16(std::uint64_t u, std::uint64_t v) {
  return len16(u, v, 0x9ddfea08eb382d69ULL);
}

struct Pair {
  std::uint64_t first;
  std::uint64_t second;
};

inline Pair weak32(std::uint64_t w, std::uint64_t x, std::uint64_t y, std::uint64_t z,
                   std::uint64_t a, std::uint64_t b) {
  a += w;
  b = std::rotr(b + a + z, 21);
  const std::uint64_t c = a;
  a += x;
  a += y;
  b += std::rotr(a, 44);
  return {a + z, b + c};
}

inline Pair weak32(const std::byte* s, std::uint64_t a, std::uint64_t b) {
  return weak32(load64(s), load64(s + 8), load64(s + 16), load64(s + 24), a, b);
}

inline std::uint64_t len0to16(const std::byte* s, std::size_t len) {
  if (len >= 8) {
    const std::uint64_t mul = k2 + len * 2;
    const std::uint64_t a = load64(s) + k2;
    const std::uint64_t b = load64(s + len - 8);
    const std::uint64_t c = std::rotr(b, 37) * mul + a;
    const std::uint64_t d = (std::rotr(a, 25) + b) * mul;
    return len16(c, d, mul);
  }
  if (len >= 4) {
    const std::uint64_t mul = k2 + len * 2;
    const std::uint64_t a = load32(s);
    return len16(len + (a << 3), load32(s + len - 4), mul);
  }
  if (len > 0) {
    const auto a = std::to_integer<std::uint8_t>(s[0]);
    const auto b = std::to_integer<std::uint8_t>(s[len >> 1]);
    const auto c = std::to_integer<std::uint8_t>(s[len - 1]);
    const std::uint32_t y = static_cast<std::uint32_t>(a) + (static_cast<std::uint32_t>(b) << 8);
    const std::uint32_t z = static_cast<std::uint32_t>(len) + (static_cast<std::uint32_t>(c) << 2);
    return shift_mix(y * k2 ^ z * k0) * k2;
  }
  return k2;
}

inline std::uint64_t len17to32(const std::byte* s, std::size_t len) {
  const std::uint64_t mul = k2 + len * 2;
  const std::uint64_t a = load64(s) * k1;
  const std::uint64_t b = load64(s + 8);
  const std::uint64_t c = load64(s + len - 8) * mul;
  const std::uint64_t d = load64(s + len - 16) * k2;
  return len16(std::rotr(a + b, 43) + std::rotr(c, 30) + d, a + std::rotr(b + k2, 18) + c, mul);
}

inline std::uint64_t len33to64(const std::byte* s, std::size_t len) {
  const std::uint64_t mul = k2 + len * 2;
  const std::uint64_t a = load64(s) * k2;
  const std::uint64_t b = load64(s + 8);
  const std::uint64_t c = load64(s + len - 8) * mul;
  const std::uint64_t d = load64(s + len - 16) * k2;
  const std::uint64_t y = std::rotr(a + b, 43) + std::rotr(c, 30) + d;
  const std::uint64_t z = len16(y, a + std::rotr(b + k2, 18) + c, mul);
  const std::uint64_t e = load64(s + 16) * mul;
  const std::uint64_t f = load64(s + 24);
  const std::uint64_t g = (y + load64(s + len - 32)) * mul;
  const std::uint64_t h = (z + load64(s + len - 24)) * mul;
  return len16(std::rotr(e + f, 43) + std::rotr(g, 30) + h, e + std::rotr(f + a, 18) + g, mul);
}
}  // namespace farm_detail

inline std::uint64_t farm64(std::span<const std::byte> data) {
  using namespace farm_detail;
  const std::byte* s = data.data();
  const std::size_t len = data.size();
  if (len <= 16) return len0to16(s, len);
  if (len <= 32) return len17to32(s, len);
  if (len <= 64) return len33to64(s, len);

  constexpr std::uint64_t seed = 81;
  std::uint64_t x = seed;
  std::uint64_t y = seed * k1 + 113;
  std::uint64_t z = shift_mix(y * k2 + 113) * k2;
  Pair v{0, 0};
  Pair w{0, 0};
  x = x * k2 + load64(s);

  const std::byte* const end = s + ((len - 1) / 64) * 64;
  const std::byte* const last64 = end + ((len - 1) & 63) - 63;
  do {
    x = std::rotr(x + y + v.first + load64(s + 8), 37) * k1;
    y = std::rotr(y + v.second + load64(s + 48), 42) * k1;
    x ^= w.second;
    y += v.first + load64(s + 40);
    z = std::rotr(z + w.first, 33) * k1;
    v = weak32(s, v.second * k1, x + w.first);
    w = weak32(s + 32, z + w.second, y + load64(s + 16));
    std::swap(z, x);
    s += 64;
  } while (s != end);
  const std::uint64_t mul = k1 + ((z & 0xff) << 1);
  s = last64;
  w.first += ((len - 1) & 63);
  v.first += w.first;
  w.first += v.first;
  x = std::rotr(x + y + v.first + load64(s + 8), 37) * mul;
  y = std::rotr(y + v.second + load64(s + 48), 42) * mul;
  x ^= w.second * 9;
  y += v.first * 9 + load64(s + 40);
  z = std::rotr(z + w.first, 33) * mul;
  v = weak32(s, v.second * mul, x + w.first);
  w = weak32(s + 32, z + w.second, y + load64(s + 16));
  std::swap(z, x);
  return len16(len16(v.first, w.first, mul) + shift_mix(y) * k0 + z,
               len16(v.second, w.second, mul) + x, mul);
}

inline std::uint64_t farm64(std::span<const std::byte> data, std::uint64_t seed) {
  return farm_detail::len16(farm64(data) - farm_detail::k2, seed);
}

// Bijective 64-bit finalizer (splitmix64).
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Widens a 32-bit digest to 64 bits. Injective in `digest` for a fixed seed:
// xor with a constant and the splitmix finalizer are both bijections.
inline constexpr std::uint64_t widen32(std::uint32_t digest, std::uint64_t seed) {
  return mix64(static_cast<std::uint64_t>(digest) ^ (seed * 0x9E3779B97F4A7C15ULL));
}

}  // namespace hash

enum class FingerprintKind { xxhash64, xxhash32_widened, murmur3_widened, farmhash64 };

inline constexpr std::array<FingerprintKind, 4> kAllFingerprintKinds = {
    FingerprintKind::xxhash64, FingerprintKind::xxhash32_widened,
    FingerprintKind::murmur3_widened, FingerprintKind::farmhash64};

inline std::string_view to_string(FingerprintKind kind) {
  switch (kind) {
    case FingerprintKind::xxhash64: return "xxhash64";
    case FingerprintKind::xxhash32_widened: return "xxhash32-widened";
    case FingerprintKind::murmur3_widened: return "murmur3-widened";
    case FingerprintKind::farmhash64: return "farmhash64";
  }
  return "?";
}

inline FingerprintKind parse_fingerprint_kind(std::string_view name) {
  for (auto kind : kAllFingerprintKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown fingerprint algorithm: " + std::string(name));
}

// A fingerprinting algorithm plus its seed. 32-bit algorithms use the low 32
// bits of the seed and are widened with hash::widen32.
struct FingerprintAlgo {
  FingerprintKind kind = FingerprintKind::xxhash64;
  std::uint64_t seed = 0;

  static FingerprintAlgo from_name(std::string_view name, std::uint64_t seed = 0) {
    return {parse_fingerprint_kind(name), seed};
  }

  std::string_view name() const { return to_string(kind); }

  Fingerprint operator()(std::span<const std::byte> block) const {
    const auto seed32 = static_cast<std::uint32_t>(seed);
    switch (kind) {
      case FingerprintKind::xxhash64:
        return {hash::xxh64(block, seed)};
      case FingerprintKind::xxhash32_widened:
        return {hash::widen32(hash::xxh32(block, seed32), seed)};
      case FingerprintKind::murmur3_widened:
        return {hash::widen32(hash::murmur3_32(block, seed32), seed)};
      case FingerprintKind::farmhash64:
        return {seed == 0 ? hash::farm64(block) : hash::farm64(block, seed)};
    }
    throw ConfigError("unknown fingerprint algorithm");
  }

  bool operator==(const FingerprintAlgo&) const = default;
};

inline Fingerprint fingerprint_block(const FingerprintAlgo& algo, std::span<const std::byte> block) {
  return algo(block);
}

struct ThroughputResult {
  std::uint64_t bytes_processed = 0;
  double seconds = 0.0;
  double bytes_per_second = 0.0;
  // XOR of all digests; identical for any worker count.
  std::uint64_t digest_xor = 0;
};

// Hashes `buffer` block by block using `workers` threads.
inline ThroughputResult fingerprint_throughput(const FingerprintAlgo& algo,
                                               std::span<const std::byte> buffer,
                                               std::uint32_t block_size, std::size_t workers) {
  if (workers == 0) throw InvalidArgument("fingerprint_throughput: workers must be >= 1");
  if (block_size == 0 || buffer.size() % block_size != 0) {
    throw InvalidArgument("fingerprint_throughput: total_bytes must be a multiple of block_size");
  }
  const std::size_t nblocks = buffer.size() / block_size;
  std::vector<std::uint64_t> partial(workers, 0);
  const auto start = std::chrono::steady_clock::now();
  parallel_ranges(workers, nblocks, [&](std::size_t w, std::size_t begin, std::size_t end) {
    std::uint64_t acc = 0;
    for (std::size_t b = begin; b < end; ++b) {
      acc ^= algo(buffer.subspan(b * block_size, block_size)).digest;
    }
    partial[w] = acc;
  });
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ThroughputResult r;
  r.bytes_processed = nblocks * block_size;
  r.seconds = secs;
  r.bytes_per_second = secs > 0 ? static_cast<double>(r.bytes_processed) / secs : 0.0;
  for (auto p : partial) r.digest_xor ^= p;
  return r;
}

// Generates a seeded random buffer of total_bytes and measures hashing throughput.
inline ThroughputResult fingerprint_throughput(const FingerprintAlgo& algo, std::uint32_t block_size,
                                               std::uint64_t total_bytes, std::size_t workers,
                                               std::uint64_t data_seed = 0) {
  if (workers == 0) throw InvalidArgument("fingerprint_throughput: workers must be >= 1");
  std::vector<std::byte> buffer(total_bytes);
  std::mt19937_64 rng(data_seed);
  std::size_t i = 0;
  for (; i + 8 <= buffer.size(); i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(buffer.data() + i, &v, 8);
  }
  for (; i < buffer.size(); ++i) buffer[i] = static_cast<std::byte>(rng());
  return fingerprint_throughput(algo, buffer, block_size, workers);
}

}  // namespace pimcache
