#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "pimcache/core.hpp"
#include "pimcache/drm.hpp"
#include "pimcache/parallel.hpp"
#include "pimcache/vbyte.hpp"

namespace pimcache {

// Byte counter standing in for a WRAM scratchpad (or one tasklet's slice of
// it). Tracks the high-water mark and refuses to exceed its limit.
class WramBudget {
 public:
  explicit WramBudget(std::uint64_t limit) : limit_(limit) {}

  void charge(std::uint64_t bytes) {
    if (in_use_ + bytes > limit_) {
      throw SimulatorCapacity("WRAM staging of " + std::to_string(in_use_ + bytes) +
                              " bytes exceeds " + std::to_string(limit_));
    }
    in_use_ += bytes;
    peak_ = std::max(peak_, in_use_);
  }

  void release(std::uint64_t bytes) { in_use_ -= std::min(bytes, in_use_); }

  std::uint64_t limit() const { return limit_; }
  std::uint64_t peak() const { return peak_; }
  std::uint64_t in_use() const { return in_use_; }

 private:
  std::uint64_t limit_;
  std::uint64_t in_use_ = 0;
  std::uint64_t peak_ = 0;
};

// Location of a byte region inside W-MRAM.
struct WmramRegion {
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
};

// A tob resident in W-MRAM together with the logical length it describes.
struct ResidentTob {
  WmramRegion region;
  std::uint64_t entries = 0;
  std::uint64_t original_bytes = 0;
  std::vector<std::uint64_t> checksums;  // empty unless the plan carried them
};

struct TransferLogEntry {
  std::uint64_t bytes_payload = 0;
  std::uint64_t bytes_offsets = 0;

  bool operator==(const TransferLogEntry&) const = default;
};

struct AppliedTransfer {
  TransferLogEntry logged;
  ResidentTob tob;
};

// One simulated DPU. MRAM is split into the BRB and W-MRAM; both byte stores
// grow lazily up to their capacities so large systems stay cheap to model.
// W-MRAM is bump-allocated: the first tob lands at offset 0, later tobs and
// kernel outputs follow it.
class DpuState {
 public:
  DpuState(const DpuGeometry& geometry, std::uint32_t block_size)
      : geometry_(geometry),
        block_size_(block_size),
        brb_bytes_(geometry.brb_bytes(block_size)),
        wmram_bytes_(geometry.wmram_bytes(block_size)) {
    geometry.validate(block_size);
  }

  const DpuGeometry& geometry() const { return geometry_; }
  std::uint32_t block_size() const { return block_size_; }
  std::uint64_t brb_bytes() const { return brb_bytes_; }
  std::uint64_t wmram_bytes() const { return wmram_bytes_; }
  std::uint64_t brb_top_applied() const { return brb_top_applied_; }
  std::uint64_t generation_applied() const { return generation_applied_; }
  std::uint64_t wmram_top() const { return wmram_top_; }
  const std::vector<TransferLogEntry>& transfer_log() const { return log_; }

  std::span<const std::byte> brb_block(std::uint64_t offset) const {
    return {brb_.data() + offset, block_size_};
  }

  // Frees all of W-MRAM (tobs and outputs). The BRB is untouched.
  void reset_wmram() { wmram_top_ = 0; }

  WmramRegion wmram_alloc(std::uint64_t bytes) {
    if (wmram_top_ + bytes > wmram_bytes_) {
      throw SimulatorCapacity("W-MRAM exhausted: need " + std::to_string(wmram_top_ + bytes) +
                              " of " + std::to_string(wmram_bytes_) + " bytes");
    }
    WmramRegion r{wmram_top_, bytes};
    wmram_top_ += bytes;
    if (wmram_.size() < wmram_top_) wmram_.resize(wmram_top_);
    return r;
  }

  std::span<std::byte> wmram(WmramRegion r) { return {wmram_.data() + r.offset, r.bytes}; }
  std::span<const std::byte> wmram(WmramRegion r) const {
    return {wmram_.data() + r.offset, r.bytes};
  }

  // Writes tbb at the BRB cursor and tob into W-MRAM. A plan from a newer
  // index generation means the host invalidated the BRB; the DPU cursor
  // follows. Plans from an older generation are rejected.
  AppliedTransfer apply(const TransferPlan& plan) {
    if (plan.block_size != block_size_) {
      throw InvalidArgument("plan block size does not match the DPU");
    }
    if (plan.generation < generation_applied_) {
      throw StalePlan("plan generation " + std::to_string(plan.generation) +
                      " is older than DPU generation " + std::to_string(generation_applied_));
    }
    std::uint64_t base = brb_top_applied_;
    if (plan.generation > generation_applied_) base = 0;
    if (plan.tbb_offset != base) {
      throw StalePlan("plan expects BRB cursor " + std::to_string(plan.tbb_offset) +
                      ", DPU is at " + std::to_string(base));
    }
    if (base + plan.tbb.size() > brb_bytes_) {
      throw SimulatorCapacity("BRB overflow applying plan");
    }
    if (wmram_top_ + plan.tob_bytes() > wmram_bytes_) {
      throw SimulatorCapacity("W-MRAM cannot hold tob of " + std::to_string(plan.tob_bytes()) +
                              " bytes");
    }

    generation_applied_ = plan.generation;
    brb_top_applied_ = base;
    if (brb_.size() < base + plan.tbb.size()) brb_.resize(base + plan.tbb.size());
    std::memcpy(brb_.data() + base, plan.tbb.data(), plan.tbb.size());
    brb_top_applied_ += plan.tbb.size();

    AppliedTransfer out;
    out.tob.region = wmram_alloc(plan.tob_bytes());
    out.tob.entries = plan.tob.size();
    out.tob.original_bytes = plan.original_bytes;
    out.tob.checksums = plan.tob_checksums;
    auto dst = wmram(out.tob.region);
    for (std::size_t i = 0; i < plan.tob.size(); ++i) {
      const std::uint32_t v = plan.tob[i];
      for (int b = 0; b < 4; ++b) dst[4 * i + b] = static_cast<std::byte>(v >> (8 * b));
    }
    out.logged = {plan.tbb.size(), plan.tob_bytes()};
    log_.push_back(out.logged);
    return out;
  }

  // Uncompressed, non-deduplicated copy into W-MRAM.
  WmramRegion apply_naive(std::span<const std::byte> chunk) {
    auto r = wmram_alloc(chunk.size());
    std::memcpy(wmram_.data() + r.offset, chunk.data(), chunk.size());
    log_.push_back({chunk.size(), 0});
    return r;
  }

  std::vector<std::uint32_t> read_tob(const ResidentTob& tob) const {
    std::vector<std::uint32_t> v(tob.entries);
    auto src = wmram(tob.region);
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::uint32_t x = 0;
      for (int b = 0; b < 4; ++b) {
        x |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(src[4 * i + b])) << (8 * b);
      }
      v[i] = x;
    }
    return v;
  }

  // Rewinds the BRB cursor and bumps the generation. No data is flushed.
  void invalidate() {
    brb_top_applied_ = 0;
    ++generation_applied_;
  }

  void check_offset(std::uint32_t offset) const {
    if (offset % block_size_ != 0 || static_cast<std::uint64_t>(offset) + block_size_ >
                                         brb_top_applied_) {
      throw CorruptedPlan("tob offset " + std::to_string(offset) + " outside BRB [0, " +
                          std::to_string(brb_top_applied_) + ")");
    }
  }

 private:
  DpuGeometry geometry_;
  std::uint32_t block_size_;
  std::uint64_t brb_bytes_;
  std::uint64_t wmram_bytes_;
  std::vector<std::byte> brb_;
  std::vector<std::byte> wmram_;
  std::uint64_t brb_top_applied_ = 0;
  std::uint64_t generation_applied_ = 0;
  std::uint64_t wmram_top_ = 0;
  std::vector<TransferLogEntry> log_;
};

inline AppliedTransfer apply_transfer(DpuState& dpu, const TransferPlan& plan) {
  return dpu.apply(plan);
}

inline void invalidate(DpuState& dpu) { dpu.invalidate(); }

struct ReconstructStats {
  std::uint64_t wram_peak = 0;
  std::uint64_t blocks_fetched = 0;
};

// Logical reconstruction: walks the tob in order, pulling blocks from the
// BRB through a WRAM window of floor(wram / block) blocks, and truncates to
// original_bytes. Checksums, when present, are verified per entry.
inline std::vector<std::byte> reconstruct_chunk(const DpuState& dpu,
                                                std::span<const std::uint32_t> tob,
                                                std::uint64_t original_bytes,
                                                std::span<const std::uint64_t> checksums = {},
                                                ReconstructStats* stats = nullptr) {
  const std::uint32_t bs = dpu.block_size();
  if (blocks_for(original_bytes, bs) != tob.size()) {
    throw CorruptedPlan("tob has " + std::to_string(tob.size()) + " entries for " +
                        std::to_string(original_bytes) + " bytes");
  }
  if (!checksums.empty() && checksums.size() != tob.size()) {
    throw CorruptedPlan("checksum count does not match tob");
  }
  WramBudget wram(dpu.geometry().wram_bytes);
  const std::uint64_t window_blocks = dpu.geometry().wram_bytes / bs;
  std::vector<std::byte> window(window_blocks * bs);
  wram.charge(window.size());

  std::vector<std::byte> out(original_bytes);
  std::uint64_t written = 0;
  for (std::size_t first = 0; first < tob.size(); first += window_blocks) {
    const std::size_t last = std::min<std::size_t>(tob.size(), first + window_blocks);
    for (std::size_t i = first; i < last; ++i) {
      dpu.check_offset(tob[i]);
      auto src = dpu.brb_block(tob[i]);
      if (!checksums.empty() && block_checksum(src) != checksums[i]) {
        throw CorruptedPlan("checksum mismatch at tob entry " + std::to_string(i));
      }
      std::memcpy(window.data() + (i - first) * bs, src.data(), bs);
    }
    const std::uint64_t n = std::min<std::uint64_t>((last - first) * bs, original_bytes - written);
    std::memcpy(out.data() + written, window.data(), n);
    written += n;
  }
  wram.release(window.size());
  if (stats) {
    stats->wram_peak = wram.peak();
    stats->blocks_fetched = tob.size();
  }
  return out;
}

inline std::vector<std::byte> reconstruct_chunk(const DpuState& dpu, const ResidentTob& tob,
                                                ReconstructStats* stats = nullptr) {
  const auto offsets = dpu.read_tob(tob);
  return reconstruct_chunk(dpu, offsets, tob.original_bytes, tob.checksums, stats);
}

struct KernelStats {
  std::uint64_t peak_tasklet_staging = 0;  // max over tasklets
  std::uint64_t tasklet_budget = 0;        // wram / tasklets
  std::vector<std::uint64_t> blocks_per_tasklet;
};

// Vector add over two resident operands (u32, wrapping). Tasklet t takes
// logical blocks t, t + T, t + 2T, ...; each stages one granule of A and one
// of B in its WRAM slice and writes A + B back to an output region in W-MRAM.
inline WmramRegion run_vector_add(DpuState& dpu, const ResidentTob& a, const ResidentTob& b,
                                  std::uint32_t tasklets = 0, KernelStats* stats = nullptr) {
  if (a.original_bytes != b.original_bytes) {
    throw InvalidArgument("vector add operands differ in length");
  }
  if (a.original_bytes % 4 != 0) {
    throw InvalidArgument("vector add operands must hold whole 32-bit elements");
  }
  if (tasklets == 0) tasklets = dpu.geometry().tasklets;
  const std::uint32_t bs = dpu.block_size();
  const auto tob_a = dpu.read_tob(a);
  const auto tob_b = dpu.read_tob(b);
  if (tob_a.size() != blocks_for(a.original_bytes, bs) || tob_b.size() != tob_a.size()) {
    throw CorruptedPlan("tob length does not match operand length");
  }
  for (auto off : tob_a) dpu.check_offset(off);
  for (auto off : tob_b) dpu.check_offset(off);

  const std::uint64_t slice = dpu.geometry().wram_bytes / tasklets;
  const std::uint64_t granule = std::min<std::uint64_t>(bs, (slice / 2) & ~std::uint64_t{7});
  if (granule == 0) throw SimulatorCapacity("WRAM slice too small for vector add");

  const WmramRegion out = dpu.wmram_alloc(a.original_bytes);
  auto dst = dpu.wmram(out);
  KernelStats ks;
  ks.tasklet_budget = slice;
  ks.blocks_per_tasklet.assign(tasklets, 0);
  std::vector<std::uint32_t> buf_a(granule / 4);
  std::vector<std::uint32_t> buf_b(granule / 4);
  for (std::uint32_t t = 0; t < tasklets; ++t) {
    WramBudget wram(slice);
    wram.charge(2 * granule);
    for (std::size_t blk = t; blk < tob_a.size(); blk += tasklets) {
      const std::uint64_t base = blk * bs;
      const std::uint64_t len = std::min<std::uint64_t>(bs, a.original_bytes - base);
      for (std::uint64_t g = 0; g < len; g += granule) {
        const std::uint64_t n = std::min(granule, len - g);
        std::memcpy(buf_a.data(), dpu.brb_block(tob_a[blk]).data() + g, n);
        std::memcpy(buf_b.data(), dpu.brb_block(tob_b[blk]).data() + g, n);
        for (std::size_t i = 0; i < n / 4; ++i) buf_a[i] += buf_b[i];
        std::memcpy(dst.data() + base + g, buf_a.data(), n);
      }
      ++ks.blocks_per_tasklet[t];
    }
    ks.peak_tasklet_staging = std::max(ks.peak_tasklet_staging, wram.peak());
  }
  if (stats) *stats = std::move(ks);
  return out;
}

// All DPUs of a system share one geometry and block size.
class PimSystem {
 public:
  PimSystem(std::uint32_t dpus, const DpuGeometry& geometry, std::uint32_t block_size) {
    if (dpus == 0) throw InvalidArgument("PimSystem needs at least one DPU");
    dpus_.reserve(dpus);
    for (std::uint32_t d = 0; d < dpus; ++d) dpus_.emplace_back(geometry, block_size);
  }

  std::size_t size() const { return dpus_.size(); }
  DpuState& operator[](std::size_t i) { return dpus_[i]; }
  const DpuState& operator[](std::size_t i) const { return dpus_[i]; }
  std::span<DpuState> dpus() { return dpus_; }
  std::span<const DpuState> dpus() const { return dpus_; }

  // Applies one plan per DPU; DPUs are independent so workers split them.
  std::vector<AppliedTransfer> apply_all(std::span<const TransferPlan> plans,
                                         std::size_t workers = 1) {
    if (plans.size() != dpus_.size()) throw InvalidArgument("one plan per DPU required");
    std::vector<AppliedTransfer> out(plans.size());
    parallel_ranges(workers, plans.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t d = begin; d < end; ++d) out[d] = dpus_[d].apply(plans[d]);
    });
    return out;
  }

  // Sum of logged payload + offset bytes over every DPU.
  std::uint64_t logged_bytes() const {
    std::uint64_t total = 0;
    for (const auto& d : dpus_) {
      for (const auto& e : d.transfer_log()) total += e.bytes_payload + e.bytes_offsets;
    }
    return total;
  }

 private:
  std::vector<DpuState> dpus_;
};

struct DpuDecompressResult {
  WmramRegion compressed;
  WmramRegion decoded;
  std::uint64_t mram_headroom = 0;  // compressed + decoded bytes held at peak
  std::uint64_t peak_tasklet_staging = 0;
};

// Receives a VByte frame into W-MRAM and decodes it in place: tasklet t owns
// partitions t, t + T, ... Both the frame and the decoded u32 array must fit
// in W-MRAM at once. The frame region can be dropped afterwards with
// reset_wmram() by the caller.
inline DpuDecompressResult decompress_on_dpu(DpuState& dpu, std::span<const std::uint8_t> frame_bytes,
                                             std::uint32_t tasklets = 0) {
  if (tasklets == 0) tasklets = dpu.geometry().tasklets;
  DpuDecompressResult r;
  r.compressed = dpu.wmram_alloc(frame_bytes.size());
  std::memcpy(dpu.wmram(r.compressed).data(), frame_bytes.data(), frame_bytes.size());

  const auto stored = dpu.wmram(r.compressed);
  const auto frame = vbyte::parse(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(stored.data()), stored.size()));
  r.decoded = dpu.wmram_alloc(4 * frame.count);
  r.mram_headroom = r.compressed.bytes + r.decoded.bytes;

  auto dst = dpu.wmram(r.decoded);
  const std::uint64_t slice = dpu.geometry().wram_bytes / tasklets;
  std::uint64_t first = 0;
  std::vector<std::uint64_t> starts(frame.directory.size());
  for (std::size_t p = 0; p < starts.size(); ++p) {
    starts[p] = first;
    first += frame.directory[p].int_count;
  }
  for (std::uint32_t t = 0; t < tasklets; ++t) {
    WramBudget wram(slice);
    // One input and one output staging buffer per tasklet.
    const std::uint64_t half = (slice / 2) & ~std::uint64_t{3};
    wram.charge(2 * half);
    std::vector<std::uint32_t> part;
    for (std::size_t p = t; p < frame.directory.size(); p += tasklets) {
      part.resize(frame.directory[p].int_count);
      vbyte::decode_partition(frame, p, part);
      for (std::size_t i = 0; i < part.size(); ++i) {
        const std::uint32_t v = part[i];
        for (int b = 0; b < 4; ++b) {
          dst[4 * (starts[p] + i) + b] = static_cast<std::byte>(v >> (8 * b));
        }
      }
    }
    r.peak_tasklet_staging = std::max(r.peak_tasklet_staging, wram.peak());
  }
  return r;
}

inline std::vector<std::uint32_t> read_u32(const DpuState& dpu, WmramRegion region) {
  auto src = dpu.wmram(region);
  std::vector<std::uint32_t> v(region.bytes / 4);
  std::memcpy(v.data(), src.data(), v.size() * 4);
  return v;
}

}  // namespace pimcache
