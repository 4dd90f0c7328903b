#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pimcache/core.hpp"
#include "pimcache/fingerprint.hpp"
#include "pimcache/parallel.hpp"

namespace pimcache {

// Byte range [begin, end) of the input buffer destined for one DPU.
struct ChunkRange {
  std::uint32_t dpu_id = 0;
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t size() const { return end - begin; }
  bool operator==(const ChunkRange&) const = default;
};

// Whole blocks are dealt out so per-DPU block counts differ by at most one;
// the lower DPU ids take the remainder. Only the last non-empty range may end
// on a partial block. DPUs beyond the block count get empty ranges at `len`.
inline std::vector<ChunkRange> partition_for_dpus(std::uint64_t len, std::uint32_t dpus,
                                                  std::uint32_t block_size) {
  if (len == 0) throw InvalidArgument("partition_for_dpus: buffer_len must be > 0");
  if (dpus == 0) throw InvalidArgument("partition_for_dpus: need at least one DPU");
  const std::uint64_t blocks = blocks_for(len, block_size);
  const std::uint64_t base = blocks / dpus;
  const std::uint64_t rem = blocks % dpus;
  std::vector<ChunkRange> ranges;
  ranges.reserve(dpus);
  std::uint64_t cursor = 0;
  for (std::uint32_t d = 0; d < dpus; ++d) {
    const std::uint64_t n = base + (d < rem ? 1 : 0);
    const std::uint64_t begin = std::min(cursor, len);
    const std::uint64_t end = std::min(cursor + n * block_size, len);
    ranges.push_back({d, begin, end});
    cursor += n * block_size;
  }
  return ranges;
}

// Host-side view of one DPU's BRB: fingerprint -> BRB offset.
class DpuIndex {
 public:
  DpuIndex(std::uint64_t brb_bytes, std::uint32_t block_size)
      : brb_bytes_(brb_bytes), block_size_(block_size) {
    validate_block_size(block_size);
    if (brb_bytes < block_size || brb_bytes % block_size != 0) {
      throw ConfigError("BRB size must be a positive multiple of block_size");
    }
  }

  std::optional<std::uint32_t> lookup(Fingerprint fp) {
    ++probes_;
    auto it = map_.find(fp.digest);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  bool has_room() const { return brb_top_ + block_size_ <= brb_bytes_; }

  // Reserves the next BRB slot for `fp` and returns its offset.
  std::uint32_t insert(Fingerprint fp) {
    const auto offset = static_cast<std::uint32_t>(brb_top_);
    map_.emplace(fp.digest, offset);
    brb_top_ += block_size_;
    return offset;
  }

  // Takes a BRB slot without indexing it (verified fingerprint collision).
  std::uint32_t append_unindexed() {
    const auto offset = static_cast<std::uint32_t>(brb_top_);
    brb_top_ += block_size_;
    return offset;
  }

  // Global invalidation: forget every block, rewind the cursor.
  void invalidate() {
    map_.clear();
    shadow_.clear();
    brb_top_ = 0;
    ++generation_;
  }

  std::uint64_t brb_top() const { return brb_top_; }
  std::uint64_t brb_bytes() const { return brb_bytes_; }
  std::uint32_t block_size() const { return block_size_; }
  std::uint64_t generation() const { return generation_; }
  std::size_t entries() const { return map_.size(); }
  std::uint64_t probes() const { return probes_; }

  // Host DRAM held by the index: an 8 B fingerprint and a 4 B offset per entry.
  std::uint64_t footprint_bytes() const {
    return entries() * (sizeof(Fingerprint) + sizeof(std::uint32_t));
  }

  // Copy of the BRB contents, kept only when hits are byte-verified.
  std::vector<std::byte>& shadow() { return shadow_; }

 private:
  std::unordered_map<std::uint64_t, std::uint32_t> map_;
  std::vector<std::byte> shadow_;
  std::uint64_t brb_bytes_;
  std::uint64_t brb_top_ = 0;
  std::uint64_t generation_ = 0;
  std::uint64_t probes_ = 0;
  std::uint32_t block_size_;
};

// Staged output of the DRM for one DPU and one transfer.
struct TransferPlan {
  std::uint32_t dpu_id = 0;
  std::uint32_t block_size = kDefaultBlockSize;
  std::vector<std::byte> tbb;          // distinct blocks, first-seen order
  std::vector<std::uint32_t> tob;      // one BRB offset per logical block
  std::uint64_t original_bytes = 0;    // exact, pre-padding
  std::uint64_t generation = 0;        // index generation the plan targets
  std::uint64_t tbb_offset = 0;        // BRB offset where tbb lands
  std::vector<std::uint64_t> tob_checksums;  // optional, per tob entry

  std::uint64_t tbb_bytes() const { return tbb.size(); }
  std::uint64_t tob_bytes() const { return tob.size() * kOffsetBytes; }
  std::uint64_t tbb_blocks() const { return tbb.size() / block_size; }

  bool operator==(const TransferPlan&) const = default;
};

struct DrmOptions {
  std::uint32_t block_size = kDefaultBlockSize;
  bool last_key = true;       // one-entry per-worker fingerprint cache
  bool verify_hits = false;   // byte-compare on hit (debug)
  bool checksums = false;     // attach per-entry block checksums for the simulator
};

// Most recent (fingerprint -> offset) seen by one worker.
struct LastKeyCache {
  const DpuIndex* index = nullptr;
  std::uint64_t generation = 0;
  Fingerprint fp{};
  std::uint32_t offset = 0;
  bool valid = false;

  void reset() { valid = false; }
};

// Content checksum attached to tob entries when DrmOptions::checksums is set.
inline std::uint64_t block_checksum(std::span<const std::byte> block) {
  return hash::xxh64(block, 0x5bd1e995ULL);
}

struct ChunkResult {
  TransferPlan plan;
  DedupStats stats;
};

namespace detail {

// Returns false when the BRB overflowed mid-chunk.
template <typename Hasher>
bool dedup_pass(std::span<const std::byte> chunk, DpuIndex& index, const Hasher& hasher,
                const DrmOptions& opts, LastKeyCache& cache, ChunkResult& out) {
  const std::uint32_t bs = opts.block_size;
  const std::uint64_t nblocks = blocks_for(chunk.size(), bs);
  auto& plan = out.plan;
  auto& stats = out.stats;
  plan.tbb.clear();
  plan.tob.clear();
  plan.tob_checksums.clear();
  plan.tob.reserve(nblocks);
  plan.generation = index.generation();
  plan.tbb_offset = index.brb_top();
  const auto probes0 = index.probes();
  stats.blocks_unique = stats.blocks_duplicate = stats.verified_collisions = 0;

  std::vector<std::byte> padded(bs);
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    std::span<const std::byte> block;
    const std::uint64_t off = b * bs;
    if (off + bs <= chunk.size()) {
      block = chunk.subspan(off, bs);
    } else {
      std::fill(padded.begin(), padded.end(), std::byte{0});
      std::memcpy(padded.data(), chunk.data() + off, chunk.size() - off);
      block = padded;
    }
    const Fingerprint fp = hasher(block);

    std::optional<std::uint32_t> hit;
    if (opts.last_key && cache.valid && cache.index == &index &&
        cache.generation == index.generation() && cache.fp == fp) {
      hit = cache.offset;
      ++stats.shortcut_hits;
    } else {
      hit = index.lookup(fp);
    }

    if (hit && opts.verify_hits) {
      const auto& shadow = index.shadow();
      if (shadow.size() < static_cast<std::size_t>(*hit) + bs) {
        throw InvalidArgument("verify_hits must be enabled for the index's whole lifetime");
      }
      if (std::memcmp(shadow.data() + *hit, block.data(), bs) != 0) {
        ++stats.verified_collisions;
        hit.reset();
        if (!index.has_room()) return false;
        const std::uint32_t offset = index.append_unindexed();
        index.shadow().insert(index.shadow().end(), block.begin(), block.end());
        plan.tbb.insert(plan.tbb.end(), block.begin(), block.end());
        plan.tob.push_back(offset);
        ++stats.blocks_unique;
        if (opts.checksums) plan.tob_checksums.push_back(block_checksum(block));
        cache.reset();
        continue;
      }
    }

    if (hit) {
      plan.tob.push_back(*hit);
      ++stats.blocks_duplicate;
      cache = {&index, index.generation(), fp, *hit, true};
    } else {
      if (!index.has_room()) return false;
      const std::uint32_t offset = index.insert(fp);
      if (opts.verify_hits) {
        index.shadow().insert(index.shadow().end(), block.begin(), block.end());
      }
      plan.tbb.insert(plan.tbb.end(), block.begin(), block.end());
      plan.tob.push_back(offset);
      ++stats.blocks_unique;
      cache = {&index, index.generation(), fp, offset, true};
    }
    if (opts.checksums) plan.tob_checksums.push_back(block_checksum(block));
  }
  stats.index_probes += index.probes() - probes0;
  return true;
}

}  // namespace detail

// Deduplicates one DPU's chunk against that DPU's index. On BRB overflow the
// index is globally invalidated and the chunk is redone from its first block;
// if the chunk still overflows an empty BRB, UnsatisfiableCapacity is thrown.
template <typename Hasher>
ChunkResult deduplicate_chunk(std::span<const std::byte> chunk, DpuIndex& index,
                              const Hasher& hasher, const DrmOptions& opts,
                              LastKeyCache& cache, std::uint32_t dpu_id = 0) {
  if (opts.block_size != index.block_size()) {
    throw InvalidArgument("deduplicate_chunk: block size differs from the index");
  }
  const std::uint32_t bs = opts.block_size;
  ChunkResult out;
  out.plan.dpu_id = dpu_id;
  out.plan.block_size = bs;
  out.plan.original_bytes = chunk.size();

  bool fresh = index.brb_top() == 0;
  while (!detail::dedup_pass(chunk, index, hasher, opts, cache, out)) {
    if (fresh) {
      throw UnsatisfiableCapacity("chunk for DPU " + std::to_string(dpu_id) + " needs more than " +
                                  std::to_string(index.brb_bytes()) + " BRB bytes");
    }
    index.invalidate();
    cache.reset();
    ++out.stats.invalidations;
    fresh = true;
  }

  auto& s = out.stats;
  s.blocks_seen = out.plan.tob.size();
  s.bytes_original = chunk.size();
  s.bytes_staged = out.plan.tbb_bytes();
  s.bytes_offsets = out.plan.tob_bytes();
  return out;
}

template <typename Hasher>
ChunkResult deduplicate_chunk(std::span<const std::byte> chunk, DpuIndex& index,
                              const Hasher& hasher, const DrmOptions& opts = {}) {
  LastKeyCache cache;
  return deduplicate_chunk(chunk, index, hasher, opts, cache, 0);
}

struct BufferResult {
  std::vector<TransferPlan> plans;     // indexed by dpu_id
  std::vector<DedupStats> per_dpu;
  DedupStats total;
};

// Partitions `buffer` across indexes.size() DPUs and deduplicates every chunk.
// Each worker owns a contiguous set of DPUs, so no index is shared and the
// result is the same for any worker count.
template <typename Hasher>
BufferResult deduplicate_buffer(std::span<const std::byte> buffer, std::span<DpuIndex> indexes,
                                const Hasher& hasher, const DrmOptions& opts,
                                std::size_t workers) {
  if (workers == 0) throw InvalidArgument("deduplicate_buffer: workers must be >= 1");
  if (indexes.empty()) throw InvalidArgument("deduplicate_buffer: no DPU indexes");
  const auto dpus = static_cast<std::uint32_t>(indexes.size());
  const auto ranges = partition_for_dpus(buffer.size(), dpus, opts.block_size);

  BufferResult result;
  result.plans.resize(dpus);
  result.per_dpu.resize(dpus);
  parallel_ranges(workers, dpus, [&](std::size_t, std::size_t begin, std::size_t end) {
    LastKeyCache cache;
    for (std::size_t d = begin; d < end; ++d) {
      const auto& r = ranges[d];
      auto chunk = deduplicate_chunk(buffer.subspan(r.begin, r.size()), indexes[d], hasher, opts,
                                     cache, static_cast<std::uint32_t>(d));
      result.plans[d] = std::move(chunk.plan);
      result.per_dpu[d] = chunk.stats;
    }
  });
  for (const auto& s : result.per_dpu) result.total += s;
  return result;
}

inline std::vector<DpuIndex> make_indexes(std::uint32_t dpus, std::uint64_t brb_bytes,
                                          std::uint32_t block_size) {
  std::vector<DpuIndex> v;
  v.reserve(dpus);
  for (std::uint32_t d = 0; d < dpus; ++d) v.emplace_back(brb_bytes, block_size);
  return v;
}

// Host metadata measured over all indexes: index entries plus one 4 B BRB
// cursor per DPU.
inline std::uint64_t host_metadata_bytes(std::span<const DpuIndex> indexes) {
  std::uint64_t total = 0;
  for (const auto& idx : indexes) total += idx.footprint_bytes();
  return total + kOffsetBytes * indexes.size();
}

}  // namespace pimcache
