#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "pimcache/errors.hpp"

namespace pimcache {

inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;
inline constexpr std::uint64_t GiB = 1024 * MiB;

inline constexpr std::uint32_t kDefaultBlockSize = 1024;
inline constexpr std::uint32_t kDefaultDpuCount = 256;
// tOB entries are 32-bit BRB offsets.
inline constexpr std::uint32_t kOffsetBytes = 4;

inline void validate_block_size(std::uint32_t block_size) {
  if (block_size < 512 || block_size > 4096 || (block_size & (block_size - 1)) != 0) {
    throw ConfigError("block_size must be a power of two in [512, 4096], got " +
                      std::to_string(block_size));
  }
}

inline constexpr std::uint64_t blocks_for(std::uint64_t bytes, std::uint32_t block_size) {
  return (bytes + block_size - 1) / block_size;
}

// Memory geometry of one UPMEM-style DPU.
struct DpuGeometry {
  std::uint64_t mram_bytes = 64 * MiB;
  std::uint64_t wram_bytes = 64 * KiB;
  std::uint64_t iram_bytes = 24 * KiB;  // informational only
  std::uint32_t tasklets = 24;
  double brb_fraction = 0.90;
  double per_dpu_bandwidth_bytes_per_s = static_cast<double>(GiB);

  // BRB size: floor(mram * fraction), rounded down to a whole block.
  std::uint64_t brb_bytes(std::uint32_t block_size) const {
    auto raw = static_cast<std::uint64_t>(static_cast<long double>(mram_bytes) * brb_fraction);
    return raw - raw % block_size;
  }

  std::uint64_t wmram_bytes(std::uint32_t block_size) const {
    return mram_bytes - brb_bytes(block_size);
  }

  void validate(std::uint32_t block_size) const {
    validate_block_size(block_size);
    if (!(brb_fraction > 0.0 && brb_fraction < 1.0)) {
      throw ConfigError("brb_fraction must lie in (0, 1)");
    }
    if (wram_bytes < 2ULL * block_size) {
      throw ConfigError("wram_bytes must hold at least two blocks");
    }
    if (tasklets == 0) throw ConfigError("tasklets must be >= 1");
    if (brb_bytes(block_size) < block_size) {
      throw ConfigError("BRB must hold at least one block");
    }
    if (!(per_dpu_bandwidth_bytes_per_s > 0.0)) {
      throw ConfigError("per-DPU bandwidth must be positive");
    }
  }

  bool operator==(const DpuGeometry&) const = default;
};

// 64-bit content digest of one (padded) block.
struct Fingerprint {
  std::uint64_t digest = 0;

  friend bool operator==(Fingerprint, Fingerprint) = default;
  friend auto operator<=>(Fingerprint, Fingerprint) = default;
};

struct BlockRef {
  std::uint32_t dpu_id = 0;
  std::uint32_t brb_offset = 0;

  friend bool operator==(BlockRef, BlockRef) = default;
};

struct DedupStats {
  std::uint64_t blocks_seen = 0;
  std::uint64_t blocks_unique = 0;
  std::uint64_t blocks_duplicate = 0;
  std::uint64_t bytes_original = 0;
  std::uint64_t bytes_staged = 0;   // tBB bytes
  std::uint64_t bytes_offsets = 0;  // tOB bytes

  // Instrumentation; not part of the transfer accounting.
  std::uint64_t index_probes = 0;
  std::uint64_t shortcut_hits = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t verified_collisions = 0;

  std::uint64_t bytes_transferred() const { return bytes_staged + bytes_offsets; }

  DedupStats& operator+=(const DedupStats& o) {
    blocks_seen += o.blocks_seen;
    blocks_unique += o.blocks_unique;
    blocks_duplicate += o.blocks_duplicate;
    bytes_original += o.bytes_original;
    bytes_staged += o.bytes_staged;
    bytes_offsets += o.bytes_offsets;
    index_probes += o.index_probes;
    shortcut_hits += o.shortcut_hits;
    invalidations += o.invalidations;
    verified_collisions += o.verified_collisions;
    return *this;
  }

  bool operator==(const DedupStats&) const = default;
};

// (1 - staged / original) * 100.
inline double dedup_percentage(const DedupStats& stats) {
  if (stats.bytes_original == 0) {
    throw InvalidArgument("dedup_percentage: bytes_original must be > 0");
  }
  return (1.0 - static_cast<double>(stats.bytes_staged) /
                    static_cast<double>(stats.bytes_original)) *
         100.0;
}

}  // namespace pimcache

template <>
struct std::hash<pimcache::Fingerprint> {
  std::size_t operator()(pimcache::Fingerprint fp) const noexcept {
    return static_cast<std::size_t>(fp.digest);
  }
};
