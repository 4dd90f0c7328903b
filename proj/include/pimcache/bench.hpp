#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pimcache/config.hpp"
#include "pimcache/core.hpp"
#include "pimcache/drm.hpp"
#include "pimcache/fingerprint.hpp"
#include "pimcache/parallel.hpp"
#include "pimcache/pim_sim.hpp"
#include "pimcache/vbyte.hpp"
#include "pimcache/workloads.hpp"

namespace pimcache {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// ---- cost model ------------------------------------------------------------

// Serial transfer model: every DPU that receives anything costs one latency
// plus its bytes over the host-DPU bandwidth. A CAC transfer ships tBB and tOB
// in the same per-DPU copy.
inline double modeled_transfer_time(const CostModelParams& cost,
                                    std::span<const std::uint64_t> per_dpu_bytes) {
  // Summed as n * latency + total / bandwidth so equal byte totals give
  // bit-identical times.
  std::uint64_t transfers = 0;
  std::uint64_t total = 0;
  for (auto b : per_dpu_bytes) {
    if (b == 0) continue;
    ++transfers;
    total += b;
  }
  return static_cast<double>(transfers) * cost.per_transfer_latency_s +
         static_cast<double>(total) / cost.host_dpu_bandwidth_bytes_per_s;
}

// Cycles a DPU spends per 32-bit element of vector add (load, add, store).
inline constexpr double kAddCyclesPerElement = 4.0;

// DPUs run concurrently; each is bound by MRAM bandwidth or by its clock.
inline double modeled_kernel_time(const DpuGeometry& geo, const CostModelParams& cost,
                                  std::span<const std::uint64_t> per_dpu_bytes_touched,
                                  std::span<const std::uint64_t> per_dpu_elements) {
  double worst = 0.0;
  for (std::size_t d = 0; d < per_dpu_bytes_touched.size(); ++d) {
    const double mem = static_cast<double>(per_dpu_bytes_touched[d]) /
                       geo.per_dpu_bandwidth_bytes_per_s;
    const double compute = static_cast<double>(per_dpu_elements[d]) * kAddCyclesPerElement /
                           cost.dpu_clock_hz;
    worst = std::max(worst, std::max(mem, compute));
  }
  return worst;
}

// ---- fallback policy -------------------------------------------------------

enum class CopyMode { cac, naive };

inline const char* to_string(CopyMode m) { return m == CopyMode::cac ? "cac" : "naive"; }

struct FallbackState {
  std::size_t window = 8;
  double tau = 30.0;
  std::deque<double> readings;
  CopyMode mode = CopyMode::cac;

  double rolling_mean() const {
    if (readings.empty()) return 0.0;
    return std::accumulate(readings.begin(), readings.end(), 0.0) /
           static_cast<double>(readings.size());
  }
};

// Records one dedup reading. Until the window is full the mode stays cac;
// afterwards it is naive exactly when the window mean is below tau.
inline CopyMode fallback_step(FallbackState& state, double dedup_pct) {
  if (state.window == 0) throw InvalidArgument("fallback window must be >= 1");
  state.readings.push_back(dedup_pct);
  while (state.readings.size() > state.window) state.readings.pop_front();
  if (state.readings.size() < state.window) {
    state.mode = CopyMode::cac;
  } else {
    state.mode = state.rolling_mean() < state.tau ? CopyMode::naive : CopyMode::cac;
  }
  return state.mode;
}

// ---- records and CSV -------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace detail

struct BenchRecord {
  std::string workload;
  double redundancy = 0.0;  // R or overlap f
  std::uint64_t bytes_original = 0;
  std::uint64_t bytes_transferred_cac = 0;
  std::uint64_t bytes_transferred_naive = 0;
  double dedup_pct = 0.0;
  double modeled_time_cac_s = 0.0;
  double modeled_time_naive_s = 0.0;
  double drm_cpu_time_s = 0.0;  // measured
  std::uint64_t workers = 0;
  std::uint64_t dpus = 0;

  static std::string csv_header() {
    return "workload,redundancy,bytes_original,bytes_transferred_cac,bytes_transferred_naive,"
           "dedup_pct,modeled_time_cac_s,modeled_time_naive_s,drm_cpu_time_s,workers,D";
  }

  std::string csv_row(bool timing = true) const {
    using detail::fmt_double;
    return workload + "," + fmt_double(redundancy) + "," + std::to_string(bytes_original) + "," +
           std::to_string(bytes_transferred_cac) + "," + std::to_string(bytes_transferred_naive) +
           "," + fmt_double(dedup_pct) + "," + fmt_double(modeled_time_cac_s) + "," +
           fmt_double(modeled_time_naive_s) + "," + fmt_double(timing ? drm_cpu_time_s : 0.0) +
           "," + std::to_string(workers) + "," + std::to_string(dpus);
  }
};

struct CompressionRecord {
  int group = 1;
  std::uint64_t values = 0;
  std::uint64_t partitions = 0;
  std::uint64_t workers = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t frame_bytes = 0;
  double payload_ratio = 0.0;
  double frame_ratio = 0.0;
  double modeled_time_ratio = 0.0;
  std::uint64_t dpu_headroom_bytes = 0;
  bool roundtrip_ok = false;
  double encode_s = 0.0;  // measured
  double decode_s = 0.0;  // measured

  static std::string csv_header() {
    return "group,values,partitions,workers,payload_bytes,frame_bytes,payload_ratio,frame_ratio,"
           "modeled_time_ratio,dpu_headroom_bytes,roundtrip_ok,encode_s,decode_s";
  }

  std::string csv_row(bool timing = true) const {
    using detail::fmt_double;
    return std::to_string(group) + "," + std::to_string(values) + "," + std::to_string(partitions) +
           "," + std::to_string(workers) + "," + std::to_string(payload_bytes) + "," +
           std::to_string(frame_bytes) + "," + fmt_double(payload_ratio) + "," +
           fmt_double(frame_ratio) + "," + fmt_double(modeled_time_ratio) + "," +
           std::to_string(dpu_headroom_bytes) + "," + (roundtrip_ok ? "1" : "0") + "," +
           fmt_double(timing ? encode_s : 0.0) + "," + fmt_double(timing ? decode_s : 0.0);
  }
};

struct E2eRecord {
  std::string workload;
  double redundancy = 0.0;
  std::string config;  // cpu-1, cpu-N, dpu-naive, dpu-cac
  std::uint64_t bytes_original = 0;
  std::uint64_t bytes_transferred = 0;
  double dedup_pct = 0.0;
  double drm_time_s = 0.0;       // measured
  double transfer_time_s = 0.0;  // modeled
  double kernel_time_s = 0.0;    // measured for CPU, modeled for DPU
  double total_time_s = 0.0;
  bool output_matches = false;
  std::uint64_t workers = 0;
  std::uint64_t dpus = 0;

  bool kernel_is_measured() const { return config.rfind("cpu", 0) == 0; }

  static std::string csv_header() {
    return "workload,redundancy,config,bytes_original,bytes_transferred,dedup_pct,drm_time_s,"
           "transfer_time_s,kernel_time_s,total_time_s,output_matches,workers,D";
  }

  std::string csv_row(bool timing = true) const {
    using detail::fmt_double;
    const double kernel = (timing || !kernel_is_measured()) ? kernel_time_s : 0.0;
    const double drm = timing ? drm_time_s : 0.0;
    const double total = timing ? total_time_s : transfer_time_s + (kernel_is_measured() ? 0.0 : kernel);
    return workload + "," + fmt_double(redundancy) + "," + config + "," +
           std::to_string(bytes_original) + "," + std::to_string(bytes_transferred) + "," +
           fmt_double(dedup_pct) + "," + fmt_double(drm) + "," + fmt_double(transfer_time_s) +
           "," + fmt_double(kernel) + "," + fmt_double(total) + "," +
           (output_matches ? "1" : "0") + "," + std::to_string(workers) + "," +
           std::to_string(dpus);
  }
};

struct FingerprintRecord {
  std::string algo;
  std::uint64_t block_size = 0;
  std::uint64_t workers = 0;
  std::uint64_t total_bytes = 0;
  std::uint64_t bytes_processed = 0;
  std::uint64_t digest_xor = 0;
  double seconds = 0.0;           // measured
  double bytes_per_second = 0.0;  // measured

  static std::string csv_header() {
    return "algo,block_size,workers,total_bytes,bytes_processed,digest_xor,seconds,bytes_per_second";
  }

  std::string csv_row(bool timing = true) const {
    using detail::fmt_double;
    return algo + "," + std::to_string(block_size) + "," + std::to_string(workers) + "," +
           std::to_string(total_bytes) + "," + std::to_string(bytes_processed) + "," +
           std::to_string(digest_xor) + "," + fmt_double(timing ? seconds : 0.0) + "," +
           fmt_double(timing ? bytes_per_second : 0.0);
  }
};

struct FallbackRecord {
  std::uint64_t iteration = 0;
  double redundancy = 0.0;
  std::string mode_used;
  std::uint64_t bytes_original = 0;
  std::uint64_t bytes_sent = 0;
  double dedup_pct = 0.0;  // 0 when the transfer bypassed dedup
  double rolling_mean = 0.0;
  std::string mode_after;

  static std::string csv_header() {
    return "iteration,redundancy,mode_used,bytes_original,bytes_sent,dedup_pct,rolling_mean,"
           "mode_after";
  }

  std::string csv_row(bool = true) const {
    using detail::fmt_double;
    return std::to_string(iteration) + "," + fmt_double(redundancy) + "," + mode_used + "," +
           std::to_string(bytes_original) + "," + std::to_string(bytes_sent) + "," +
           fmt_double(dedup_pct) + "," + fmt_double(rolling_mean) + "," + mode_after;
  }
};

template <typename Record>
void write_csv(std::ostream& out, std::span<const Record> records, bool timing = true) {
  out << Record::csv_header() << '\n';
  for (const auto& r : records) out << r.csv_row(timing) << '\n';
}

template <typename Record>
std::string to_csv(std::span<const Record> records, bool timing = true) {
  std::string s = Record::csv_header() + "\n";
  for (const auto& r : records) s += r.csv_row(timing) + "\n";
  return s;
}

// ---- memory accounting -----------------------------------------------------

struct AccountingLine {
  std::string name;
  long double formula = 0;
  std::uint64_t measured = 0;

  bool matches() const {
    return std::fabs(static_cast<double>(formula - static_cast<long double>(measured))) <= 0.5;
  }
};

struct MemoryReportInput {
  std::uint32_t block_size = kDefaultBlockSize;
  std::uint32_t dpus = 0;
  std::uint64_t bytes_original = 0;          // N
  double dedup_pct = 0.0;                    // d
  std::uint64_t measured_transferred = 0;    // simulator transfer log
  std::uint64_t resident_bytes = 0;          // sum of DPU BRB cursors
  std::uint64_t measured_host_metadata = 0;  // host index footprint + cursors
  std::vector<std::uint64_t> per_dpu_original;   // N_D per DPU
  std::vector<std::uint64_t> per_dpu_tob_bytes;  // measured tOB per DPU
  // Optional VByte decompression accounting on one DPU.
  std::optional<std::uint64_t> decompressed_bytes;  // N_D
  std::optional<std::uint64_t> compressed_bytes;    // N_D / r
  std::optional<std::uint64_t> measured_headroom;
};

struct MemoryReport {
  std::vector<AccountingLine> lines;

  bool ok() const {
    return std::all_of(lines.begin(), lines.end(), [](const auto& l) { return l.matches(); });
  }
};

// Compares measured byte counts with the closed-form overheads:
//   host metadata  = 12 N_res / B + 4 D   (N_res: bytes resident in BRBs)
//   tOB per DPU    = 4 N_D / B
//   total sent     = N (1 - d/100 + 4/B)
//   decompression  = N_D (r + 1) / r
// With B = 1024 these are 12N/1024 + 4D, N_D/256 and N(1 - d/100 + 1/256).
// Throws AccountingViolation on any mismatch.
inline MemoryReport memory_report(const MemoryReportInput& in) {
  const long double bs = in.block_size;
  MemoryReport rep;
  if (in.dpus > 0) {
  rep.lines.push_back({"host_metadata_bytes",
                       12.0L * static_cast<long double>(in.resident_bytes) / bs + 4.0L * in.dpus,
                       in.measured_host_metadata});
  std::uint64_t tob_total = 0;
  for (std::size_t d = 0; d < in.per_dpu_original.size(); ++d) {
    tob_total += in.per_dpu_tob_bytes.at(d);
    AccountingLine l{"tob_bytes_dpu" + std::to_string(d),
                     4.0L * static_cast<long double>(in.per_dpu_original[d]) / bs,
                     in.per_dpu_tob_bytes[d]};
    if (!l.matches()) rep.lines.push_back(l);
  }
  rep.lines.push_back({"tob_bytes_total", 4.0L * static_cast<long double>(in.bytes_original) / bs,
                       tob_total});
  const long double n = static_cast<long double>(in.bytes_original);
  rep.lines.push_back({"total_transferred_bytes",
                       n * (1.0L - static_cast<long double>(in.dedup_pct) / 100.0L + 4.0L / bs),
                       in.measured_transferred});
  }
  if (in.decompressed_bytes && in.compressed_bytes && in.measured_headroom) {
    const long double nd = static_cast<long double>(*in.decompressed_bytes);
    const long double r = nd / static_cast<long double>(*in.compressed_bytes);
    rep.lines.push_back({"decompression_headroom_bytes", nd * (r + 1.0L) / r, *in.measured_headroom});
  }
  for (const auto& l : rep.lines) {
    if (!l.matches()) {
      throw AccountingViolation(l.name + ": formula " + std::to_string(static_cast<double>(l.formula)) +
                                " != measured " + std::to_string(l.measured));
    }
  }
  return rep;
}

// ---- one CAC transfer through host DRM + simulator ---------------------------

struct CacTransfer {
  BufferResult drm;
  std::vector<AppliedTransfer> applied;
  double drm_seconds = 0.0;
};

// Host state for one run: per-DPU indexes plus the simulated DPUs.
class CacSession {
 public:
  explicit CacSession(const Config& cfg, DrmOptions opts = {})
      : cfg_(cfg),
        opts_(opts),
        indexes_(make_indexes(cfg.dpus, cfg.geometry.brb_bytes(cfg.block_size), cfg.block_size)),
        system_(cfg.dpus, cfg.geometry, cfg.block_size) {
    cfg.validate();
    opts_.block_size = cfg.block_size;
  }

  CacTransfer transfer(std::span<const std::byte> buffer, std::size_t workers) {
    CacTransfer t;
    Stopwatch sw;
    t.drm = deduplicate_buffer(buffer, std::span(indexes_), cfg_.fp, opts_, workers);
    t.drm_seconds = sw.seconds();
    t.applied = system_.apply_all(t.drm.plans, workers);
    return t;
  }

  // Reconstructs every DPU chunk of `t` and compares with `buffer`.
  bool verify(const CacTransfer& t, std::span<const std::byte> buffer) const {
    const auto ranges = partition_for_dpus(buffer.size(), cfg_.dpus, cfg_.block_size);
    for (std::size_t d = 0; d < ranges.size(); ++d) {
      const auto got = reconstruct_chunk(system_[d], t.applied[d].tob);
      const auto want = buffer.subspan(ranges[d].begin, ranges[d].size());
      if (got.size() != want.size() ||
          (!got.empty() && std::memcmp(got.data(), want.data(), got.size()) != 0)) {
        return false;
      }
    }
    return true;
  }

  MemoryReportInput report_input(const CacTransfer& t, std::uint64_t bytes_original) const {
    MemoryReportInput in;
    in.block_size = cfg_.block_size;
    in.dpus = cfg_.dpus;
    in.bytes_original = bytes_original;
    in.dedup_pct = dedup_percentage(t.drm.total);
    for (const auto& a : t.applied) in.measured_transferred += a.logged.bytes_payload + a.logged.bytes_offsets;
    for (std::size_t d = 0; d < system_.size(); ++d) in.resident_bytes += system_[d].brb_top_applied();
    in.measured_host_metadata = host_metadata_bytes(indexes_);
    for (const auto& s : t.drm.per_dpu) {
      in.per_dpu_original.push_back(s.bytes_original);
      in.per_dpu_tob_bytes.push_back(s.bytes_offsets);
    }
    return in;
  }

  void reset_wmram() {
    for (auto& d : system_.dpus()) d.reset_wmram();
  }

  const Config& config() const { return cfg_; }
  std::span<DpuIndex> indexes() { return indexes_; }
  PimSystem& system() { return system_; }
  const PimSystem& system() const { return system_; }

 private:
  Config cfg_;
  DrmOptions opts_;
  std::vector<DpuIndex> indexes_;
  PimSystem system_;
};

inline std::vector<std::uint64_t> per_dpu_sent(const CacTransfer& t) {
  std::vector<std::uint64_t> v;
  v.reserve(t.drm.plans.size());
  for (const auto& p : t.drm.plans) v.push_back(p.tbb_bytes() + p.tob_bytes());
  return v;
}

inline std::vector<std::uint64_t> per_dpu_original(const CacTransfer& t) {
  std::vector<std::uint64_t> v;
  v.reserve(t.drm.plans.size());
  for (const auto& p : t.drm.plans) v.push_back(p.original_bytes);
  return v;
}

inline BenchRecord make_record(const Config& cfg, const CacTransfer& t, std::string workload,
                               double redundancy, std::size_t workers) {
  BenchRecord r;
  r.workload = std::move(workload);
  r.redundancy = redundancy;
  r.bytes_original = t.drm.total.bytes_original;
  r.bytes_transferred_cac = t.drm.total.bytes_transferred();
  r.bytes_transferred_naive = r.bytes_original;
  r.dedup_pct = r.bytes_original ? dedup_percentage(t.drm.total) : 0.0;
  r.modeled_time_cac_s = modeled_transfer_time(cfg.cost, per_dpu_sent(t));
  r.modeled_time_naive_s = modeled_transfer_time(cfg.cost, per_dpu_original(t));
  r.drm_cpu_time_s = t.drm_seconds;
  r.workers = workers;
  r.dpus = cfg.dpus;
  return r;
}

// ---- experiments -----------------------------------------------------------

struct SweepOptions {
  std::vector<double> ratios{0.0, 0.25, 0.5, 0.75, 1.0};
  std::uint64_t size = 64 * MiB;
  std::size_t workers = 1;
  std::uint32_t segment_blocks = 256;
  bool verify = true;
  DrmOptions drm;
};

struct SweepResult {
  std::vector<BenchRecord> records;
  std::vector<MemoryReport> reports;
};

// One fresh system per R: generate, deduplicate, transfer, reconstruct and
// check the accounting.
inline SweepResult bench_copy_sweep(const Config& cfg, const SweepOptions& opt) {
  SweepResult out;
  for (double r : opt.ratios) {
    SyntheticSpec spec{opt.size, r, opt.segment_blocks, cfg.seed, cfg.block_size};
    const auto buffer = gen_synthetic(spec, opt.workers);
    CacSession session(cfg, opt.drm);
    const auto t = session.transfer(buffer, opt.workers);
    if (opt.verify && !session.verify(t, buffer)) {
      throw CorruptedPlan("sweep: reconstruction mismatch at R=" + detail::fmt_double(r));
    }
    out.reports.push_back(memory_report(session.report_input(t, buffer.size())));
    out.records.push_back(make_record(cfg, t, "synthetic", r, opt.workers));
  }
  return out;
}

struct GenomeResult {
  std::vector<BenchRecord> records;  // phase A, phase B
  std::vector<std::string> warnings;
};

// Transfers seq_a, then seq_b against the BRB state left by seq_a.
inline GenomeResult bench_genome(const Config& cfg, std::string_view seq_a, std::string_view seq_b,
                                 double overlap, std::size_t workers, const DrmOptions& drm = {}) {
  GenomeResult out;
  for (auto* s : {&seq_a, &seq_b}) {
    if (s->empty()) throw EmptySequence("bench_genome: empty sequence");
    if (blocks_for(s->size(), cfg.block_size) < cfg.dpus) {
      out.warnings.push_back("sequence of " + std::to_string(s->size()) +
                             " bytes has fewer blocks than DPUs; some DPUs stay idle");
    }
  }
  CacSession session(cfg, drm);
  const auto a = session.transfer(as_bytes(seq_a), workers);
  if (!session.verify(a, as_bytes(seq_a))) throw CorruptedPlan("genome: phase A mismatch");
  out.records.push_back(make_record(cfg, a, "genome-A", overlap, workers));
  session.reset_wmram();
  const auto b = session.transfer(as_bytes(seq_b), workers);
  if (!session.verify(b, as_bytes(seq_b))) throw CorruptedPlan("genome: phase B mismatch");
  out.records.push_back(make_record(cfg, b, "genome-B", overlap, workers));
  return out;
}

// Uniform values in [0, 2^7) for group 1 or [2^7, 2^14) for group 2.
inline std::vector<std::uint32_t> compression_group_values(int group, std::uint64_t count,
                                                           std::uint64_t seed) {
  if (group != 1 && group != 2) throw InvalidArgument("compression group must be 1 or 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> dist(group == 1 ? 0u : 128u,
                                                    group == 1 ? 127u : 16383u);
  std::vector<std::uint32_t> v(count);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline CompressionRecord bench_compression(const Config& cfg, int group, std::uint64_t count,
                                           std::size_t partitions, std::size_t workers) {
  const auto values = compression_group_values(group, count, cfg.seed);
  CompressionRecord rec;
  rec.group = group;
  rec.values = count;
  rec.partitions = partitions;
  rec.workers = workers;

  Stopwatch enc;
  const auto frame = vbyte::compress_array(values, partitions, workers);
  rec.encode_s = enc.seconds();
  Stopwatch dec;
  const auto decoded = vbyte::decompress_frame(frame, workers);
  rec.decode_s = dec.seconds();
  rec.roundtrip_ok = decoded == values;

  rec.payload_bytes = frame.payload.size();
  rec.frame_bytes = frame.serialized_size();
  rec.payload_ratio = count ? vbyte::payload_ratio(frame) : 0.0;
  rec.frame_ratio = count ? vbyte::compression_ratio(frame) : 0.0;
  // Linear model with the latency term dropped: time ratio = byte ratio.
  rec.modeled_time_ratio =
      count ? (4.0 * static_cast<double>(count) / cfg.cost.host_dpu_bandwidth_bytes_per_s) /
                  (static_cast<double>(rec.frame_bytes) / cfg.cost.host_dpu_bandwidth_bytes_per_s)
            : 0.0;

  // DPU 0's share, decompressed in the simulator.
  const std::uint64_t share = blocks_for(count, cfg.dpus);
  if (share > 0) {
    const auto slice = std::span(values).first(std::min<std::uint64_t>(share, count));
    const auto bytes = vbyte::serialize(vbyte::compress_array(slice, partitions, workers));
    DpuState dpu(cfg.geometry, cfg.block_size);
    const auto r = decompress_on_dpu(dpu, bytes);
    const auto got = read_u32(dpu, r.decoded);
    rec.roundtrip_ok = rec.roundtrip_ok && std::equal(got.begin(), got.end(), slice.begin(), slice.end());
    rec.dpu_headroom_bytes = r.mram_headroom;
    MemoryReportInput in;
    in.block_size = cfg.block_size;
    in.decompressed_bytes = 4 * slice.size();
    in.compressed_bytes = bytes.size();
    in.measured_headroom = r.mram_headroom;
    auto rep = memory_report(in);
    (void)rep;
  }
  return rec;
}

// Geometry for the naive baseline: no BRB worth mentioning, so the whole
// MRAM (less one block) is working memory.
inline DpuGeometry naive_geometry(DpuGeometry geo, std::uint32_t block_size) {
  geo.brb_fraction = (static_cast<double>(block_size) + 0.5) / static_cast<double>(geo.mram_bytes);
  return geo;
}

struct E2eOptions {
  std::vector<double> ratios{0.0, 0.5, 1.0};
  std::uint64_t size = 16 * MiB;  // both operands together
  std::size_t workers = 1;
  std::uint32_t segment_blocks = 256;
  DrmOptions drm;
};

struct E2eResult {
  std::vector<E2eRecord> records;
  bool all_match = true;
};

namespace detail {
inline std::vector<std::uint32_t> as_u32(std::span<const std::byte> bytes) {
  std::vector<std::uint32_t> v(bytes.size() / 4);
  std::memcpy(v.data(), bytes.data(), v.size() * 4);
  return v;
}

inline void add_range(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b,
                      std::span<std::uint32_t> out, std::size_t threads) {
  parallel_ranges(threads, a.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = a[i] + b[i];
  });
}
}  // namespace detail

// Naive vector add over two plain W-MRAM operands, streamed through each
// tasklet's WRAM slice like the CAC kernel.
inline WmramRegion run_vector_add_naive(DpuState& dpu, WmramRegion a, WmramRegion b,
                                        std::uint32_t tasklets = 0) {
  if (a.bytes != b.bytes || a.bytes % 4 != 0) {
    throw InvalidArgument("vector add operands must be equal whole-u32 lengths");
  }
  if (tasklets == 0) tasklets = dpu.geometry().tasklets;
  const std::uint32_t bs = dpu.block_size();
  const std::uint64_t slice = dpu.geometry().wram_bytes / tasklets;
  const std::uint64_t granule = std::min<std::uint64_t>(bs, (slice / 2) & ~std::uint64_t{7});
  const WmramRegion out = dpu.wmram_alloc(a.bytes);
  std::vector<std::uint32_t> buf_a(granule / 4), buf_b(granule / 4);
  const std::uint64_t blocks = blocks_for(a.bytes, bs);
  for (std::uint32_t t = 0; t < tasklets; ++t) {
    WramBudget wram(slice);
    wram.charge(2 * granule);
    for (std::uint64_t blk = t; blk < blocks; blk += tasklets) {
      const std::uint64_t base = blk * bs;
      const std::uint64_t len = std::min<std::uint64_t>(bs, a.bytes - base);
      for (std::uint64_t g = 0; g < len; g += granule) {
        const std::uint64_t n = std::min(granule, len - g);
        std::memcpy(buf_a.data(), dpu.wmram(a).data() + base + g, n);
        std::memcpy(buf_b.data(), dpu.wmram(b).data() + base + g, n);
        for (std::size_t i = 0; i < n / 4; ++i) buf_a[i] += buf_b[i];
        std::memcpy(dpu.wmram(out).data() + base + g, buf_a.data(), n);
      }
    }
  }
  return out;
}

struct VectorAddOutputs {
  std::vector<std::uint32_t> oracle;
  std::vector<std::uint32_t> cpu_1;
  std::vector<std::uint32_t> cpu_n;
  std::vector<std::uint32_t> dpu_naive;
  std::vector<std::uint32_t> dpu_cac;
};

// Runs the four vector-add configurations on one pair of operands and fills
// one E2eRecord per configuration.
inline VectorAddOutputs run_vector_add_configs(const Config& cfg, std::span<const std::byte> a_bytes,
                                               std::span<const std::byte> b_bytes, double redundancy,
                                               std::size_t workers, const DrmOptions& drm,
                                               std::vector<E2eRecord>* records) {
  if (a_bytes.size() != b_bytes.size() || a_bytes.size() % 4 != 0) {
    throw InvalidArgument("vector add operands must be equal whole-u32 lengths");
  }
  VectorAddOutputs o;
  const auto a = detail::as_u32(a_bytes);
  const auto b = detail::as_u32(b_bytes);
  const std::uint64_t total = a_bytes.size() + b_bytes.size();

  o.oracle.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) o.oracle[i] = a[i] + b[i];

  auto base_record = [&](std::string config) {
    E2eRecord r;
    r.workload = "vector-add";
    r.redundancy = redundancy;
    r.config = std::move(config);
    r.bytes_original = total;
    r.workers = workers;
    r.dpus = cfg.dpus;
    return r;
  };

  o.cpu_1.resize(a.size());
  {
    Stopwatch sw;
    detail::add_range(a, b, o.cpu_1, 1);
    auto r = base_record("cpu-1");
    r.kernel_time_s = r.total_time_s = sw.seconds();
    r.output_matches = o.cpu_1 == o.oracle;
    if (records) records->push_back(r);
  }
  o.cpu_n.resize(a.size());
  {
    Stopwatch sw;
    detail::add_range(a, b, o.cpu_n, cfg.cost.cpu_threads_baseline);
    auto r = base_record("cpu-" + std::to_string(cfg.cost.cpu_threads_baseline));
    r.kernel_time_s = r.total_time_s = sw.seconds();
    r.output_matches = o.cpu_n == o.oracle;
    if (records) records->push_back(r);
  }

  const auto ranges = partition_for_dpus(a_bytes.size(), cfg.dpus, cfg.block_size);
  auto gather = [&](auto&& per_dpu_output) {
    std::vector<std::uint32_t> out;
    out.reserve(a.size());
    for (std::size_t d = 0; d < ranges.size(); ++d) {
      const auto part = per_dpu_output(d);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  };

  {
    PimSystem sys(cfg.dpus, naive_geometry(cfg.geometry, cfg.block_size), cfg.block_size);
    std::vector<WmramRegion> out_regions(cfg.dpus);
    std::vector<std::uint64_t> sent(cfg.dpus), touched(cfg.dpus), elements(cfg.dpus);
    parallel_ranges(workers, cfg.dpus, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t d = begin; d < end; ++d) {
        const auto& rg = ranges[d];
        const auto ra = sys[d].apply_naive(a_bytes.subspan(rg.begin, rg.size()));
        const auto rb = sys[d].apply_naive(b_bytes.subspan(rg.begin, rg.size()));
        out_regions[d] = run_vector_add_naive(sys[d], ra, rb);
        sent[d] = 2 * rg.size();
        touched[d] = 3 * rg.size();
        elements[d] = rg.size() / 4;
      }
    });
    o.dpu_naive = gather([&](std::size_t d) { return read_u32(sys[d], out_regions[d]); });
    auto r = base_record("dpu-naive");
    r.bytes_transferred = total;
    r.transfer_time_s = modeled_transfer_time(cfg.cost, sent);
    r.kernel_time_s = modeled_kernel_time(cfg.geometry, cfg.cost, touched, elements);
    r.total_time_s = r.transfer_time_s + r.kernel_time_s;
    r.output_matches = o.dpu_naive == o.oracle;
    if (records) records->push_back(r);
  }

  {
    CacSession session(cfg, drm);
    const auto ta = session.transfer(a_bytes, workers);
    const auto tb = session.transfer(b_bytes, workers);
    auto& sys = session.system();
    std::vector<WmramRegion> out_regions(cfg.dpus);
    std::vector<std::uint64_t> sent(cfg.dpus), touched(cfg.dpus), elements(cfg.dpus);
    parallel_ranges(workers, cfg.dpus, [&](std::size_t, std::size_t begin, std::size_t end) {
      for (std::size_t d = begin; d < end; ++d) {
        out_regions[d] = run_vector_add(sys[d], ta.applied[d].tob, tb.applied[d].tob);
        const auto& pa = ta.drm.plans[d];
        const auto& pb = tb.drm.plans[d];
        sent[d] = pa.tbb_bytes() + pa.tob_bytes() + pb.tbb_bytes() + pb.tob_bytes();
        touched[d] = 3 * pa.original_bytes + pa.tob_bytes() + pb.tob_bytes();
        elements[d] = pa.original_bytes / 4;
      }
    });
    o.dpu_cac = gather([&](std::size_t d) { return read_u32(sys[d], out_regions[d]); });
    DedupStats both = ta.drm.total;
    both += tb.drm.total;
    auto r = base_record("dpu-cac");
    r.bytes_transferred = both.bytes_transferred();
    r.dedup_pct = dedup_percentage(both);
    r.drm_time_s = ta.drm_seconds + tb.drm_seconds;
    r.transfer_time_s = modeled_transfer_time(cfg.cost, sent);
    r.kernel_time_s = modeled_kernel_time(cfg.geometry, cfg.cost, touched, elements);
    r.total_time_s = r.drm_time_s + r.transfer_time_s + r.kernel_time_s;
    r.output_matches = o.dpu_cac == o.oracle;
    if (records) records->push_back(r);
  }
  return o;
}

inline E2eResult bench_e2e_vector_add(const Config& cfg, const E2eOptions& opt) {
  const std::uint64_t operand = opt.size / 2;
  if (operand == 0 || operand % cfg.block_size != 0) {
    throw InvalidArgument("e2e: each operand (size / 2) must be a non-zero multiple of block_size");
  }
  E2eResult out;
  for (double r : opt.ratios) {
    const auto a = gen_synthetic({operand, r, opt.segment_blocks, cfg.seed, cfg.block_size}, opt.workers);
    const auto b = gen_synthetic({operand, r, opt.segment_blocks, cfg.seed + 1, cfg.block_size},
                                 opt.workers);
    run_vector_add_configs(cfg, a, b, r, opt.workers, opt.drm, &out.records);
  }
  for (const auto& rec : out.records) out.all_match = out.all_match && rec.output_matches;
  return out;
}

struct FingerprintBenchOptions {
  std::vector<FingerprintKind> algos{kAllFingerprintKinds.begin(), kAllFingerprintKinds.end()};
  std::vector<std::uint32_t> block_sizes{512, 1024, 2048, 4096};
  std::vector<std::size_t> workers{1};
  std::uint64_t total_bytes = 64 * MiB;
};

inline std::vector<FingerprintRecord> bench_fingerprint(const Config& cfg,
                                                        const FingerprintBenchOptions& opt) {
  std::vector<std::byte> buffer(opt.total_bytes);
  std::mt19937_64 rng(cfg.seed);
  detail::fill_random(buffer, rng);
  std::vector<FingerprintRecord> out;
  for (auto kind : opt.algos) {
    const FingerprintAlgo algo{kind, cfg.fp.seed};
    for (auto bs : opt.block_sizes) {
      const std::uint64_t usable = opt.total_bytes - opt.total_bytes % bs;
      for (auto w : opt.workers) {
        const auto t = fingerprint_throughput(algo, std::span(buffer).first(usable), bs, w);
        out.push_back({std::string(algo.name()), bs, w, usable, t.bytes_processed, t.digest_xor,
                       t.seconds, t.bytes_per_second});
      }
    }
  }
  return out;
}

struct FallbackOptions {
  std::vector<double> ratios;  // one transfer per entry
  std::uint64_t size = 4 * MiB;
  std::size_t window = 8;
  double tau = 30.0;
  std::size_t workers = 1;
  std::uint32_t segment_blocks = 256;
};

// Successive transfers through one session with the adaptive fallback. In
// naive mode chunks are copied verbatim and the indexes are left alone.
inline std::vector<FallbackRecord> bench_fallback(const Config& cfg, const FallbackOptions& opt) {
  CacSession session(cfg);
  FallbackState state{opt.window, opt.tau, {}, CopyMode::cac};
  std::vector<FallbackRecord> out;
  for (std::size_t i = 0; i < opt.ratios.size(); ++i) {
    const auto buffer = gen_synthetic(
        {opt.size, opt.ratios[i], opt.segment_blocks, cfg.seed + i, cfg.block_size}, opt.workers);
    session.reset_wmram();
    FallbackRecord rec;
    rec.iteration = i;
    rec.redundancy = opt.ratios[i];
    rec.mode_used = to_string(state.mode);
    rec.bytes_original = buffer.size();
    if (state.mode == CopyMode::cac) {
      const auto t = session.transfer(buffer, opt.workers);
      rec.bytes_sent = t.drm.total.bytes_transferred();
      rec.dedup_pct = dedup_percentage(t.drm.total);
      fallback_step(state, rec.dedup_pct);
    } else {
      const auto ranges = partition_for_dpus(buffer.size(), cfg.dpus, cfg.block_size);
      for (const auto& rg : ranges) {
        session.system()[rg.dpu_id].apply_naive(std::span(buffer).subspan(rg.begin, rg.size()));
        rec.bytes_sent += rg.size();
      }
    }
    rec.rolling_mean = state.rolling_mean();
    rec.mode_after = to_string(state.mode);
    out.push_back(rec);
  }
  return out;
}

}  // namespace pimcache
