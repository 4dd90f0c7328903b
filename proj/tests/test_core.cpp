#include <gtest/gtest.h>

#include <sstream>

#include "pimcache/config.hpp"
#include "pimcache/core.hpp"
#include "pimcache/parallel.hpp"

using namespace pimcache;

TEST(Geometry, Defaults) {
  DpuGeometry g;
  EXPECT_EQ(g.mram_bytes, 64 * MiB);
  EXPECT_EQ(g.wram_bytes, 64 * KiB);
  EXPECT_EQ(g.iram_bytes, 24 * KiB);
  EXPECT_EQ(g.tasklets, 24u);
  EXPECT_DOUBLE_EQ(g.brb_fraction, 0.9);
  EXPECT_DOUBLE_EQ(g.per_dpu_bandwidth_bytes_per_s, static_cast<double>(GiB));
}

TEST(Geometry, BrbIsFlooredToWholeBlocks) {
  DpuGeometry g;
  // floor(64 MiB * 0.9) = 60397977, which is not block aligned.
  for (std::uint32_t bs : {512u, 1024u, 2048u, 4096u}) {
    const auto brb = g.brb_bytes(bs);
    EXPECT_EQ(brb % bs, 0u);
    EXPECT_LE(brb, 60397977u);
    EXPECT_GT(brb + bs, 60397977u);
    EXPECT_EQ(brb + g.wmram_bytes(bs), g.mram_bytes);
  }
  EXPECT_EQ(g.brb_bytes(1024), 58982u * 1024u);
}

TEST(Geometry, ValidateRejectsBadValues) {
  DpuGeometry g;
  EXPECT_NO_THROW(g.validate(1024));
  auto bad = g;
  bad.brb_fraction = 1.0;
  EXPECT_THROW(bad.validate(1024), ConfigError);
  bad = g;
  bad.brb_fraction = 0.0;
  EXPECT_THROW(bad.validate(1024), ConfigError);
  bad = g;
  bad.wram_bytes = 2047;
  EXPECT_THROW(bad.validate(1024), ConfigError);
  bad.wram_bytes = 2048;
  EXPECT_NO_THROW(bad.validate(1024));
  bad = g;
  bad.tasklets = 0;
  EXPECT_THROW(bad.validate(1024), ConfigError);
}

TEST(BlockSize, PowerOfTwoInRange) {
  for (std::uint32_t bs : {512u, 1024u, 2048u, 4096u}) EXPECT_NO_THROW(validate_block_size(bs));
  for (std::uint32_t bs : {0u, 256u, 768u, 1000u, 8192u}) {
    EXPECT_THROW(validate_block_size(bs), ConfigError) << bs;
  }
}

TEST(DedupPercentage, Examples) {
  DedupStats s;
  s.bytes_original = 4096;
  s.bytes_staged = 4096;
  EXPECT_DOUBLE_EQ(dedup_percentage(s), 0.0);
  s.bytes_staged = 1024;
  EXPECT_DOUBLE_EQ(dedup_percentage(s), 75.0);
}

TEST(DedupPercentage, ZeroOriginalThrows) {
  DedupStats s;
  EXPECT_THROW(dedup_percentage(s), InvalidArgument);
}

TEST(DedupPercentage, NonIncreasingInStaged) {
  DedupStats s;
  s.bytes_original = 1 << 20;
  double prev = 101.0;
  for (std::uint64_t staged = 0; staged <= s.bytes_original; staged += 4096) {
    s.bytes_staged = staged;
    const double d = dedup_percentage(s);
    EXPECT_LE(d, prev);
    prev = d;
  }
}

TEST(DedupStats, Accumulates) {
  DedupStats a{1, 1, 0, 1024, 1024, 4, 1, 0, 0, 0};
  DedupStats b{2, 1, 1, 2048, 1024, 8, 2, 1, 1, 0};
  a += b;
  EXPECT_EQ(a.blocks_seen, 3u);
  EXPECT_EQ(a.bytes_transferred(), 2048u + 12u);
  EXPECT_EQ(a.shortcut_hits, 1u);
}

TEST(Parallel, CoversRangeOnceForAnyWorkerCount) {
  for (std::size_t workers : {1u, 2u, 3u, 8u, 64u}) {
    std::vector<int> hits(37, 0);
    parallel_ranges(workers, hits.size(), [&](std::size_t, std::size_t b, std::size_t e) {
      for (auto i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(parallel_ranges(0, 4, [](auto, auto, auto) {}), InvalidArgument);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_ranges(4, 8,
                               [](std::size_t w, std::size_t, std::size_t) {
                                 if (w == 2) throw StalePlan("x");
                               }),
               StalePlan);
}

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# geometry\n"
      "mram_bytes = 32M\n"
      "wram_bytes=64K  # scratchpad\n"
      "block_size = 2048\n"
      "dpus = 16\n"
      "seed = 7\n"
      "fp_algo = murmur3-widened\n"
      "fp_seed = 3\n"
      "brb_fraction = 0.8\n"
      "transfer_latency_s = 2e-6\n");
  const Config cfg = parse_config(in);
  EXPECT_EQ(cfg.geometry.mram_bytes, 32 * MiB);
  EXPECT_EQ(cfg.geometry.wram_bytes, 64 * KiB);
  EXPECT_EQ(cfg.block_size, 2048u);
  EXPECT_EQ(cfg.dpus, 16u);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.fp.kind, FingerprintKind::murmur3_widened);
  EXPECT_EQ(cfg.fp.seed, 3u);
  EXPECT_DOUBLE_EQ(cfg.geometry.brb_fraction, 0.8);
  EXPECT_DOUBLE_EQ(cfg.cost.per_transfer_latency_s, 2e-6);
}

TEST(Config, Errors) {
  std::istringstream unknown("nonsense = 1\n");
  EXPECT_THROW(parse_config(unknown), ConfigError);
  std::istringstream no_eq("block_size 1024\n");
  EXPECT_THROW(parse_config(no_eq), ConfigError);
  std::istringstream bad_bs("block_size = 1000\n");
  EXPECT_THROW(parse_config(bad_bs), ConfigError);
  std::istringstream bad_num("brb_fraction = 0.9x\n");
  EXPECT_THROW(parse_config(bad_num), ConfigError);
  std::istringstream bad_algo("fp_algo = sha1\n");
  EXPECT_THROW(parse_config(bad_algo), ConfigError);
  std::istringstream zero_bw("host_bandwidth_bytes_per_s = 0\n");
  EXPECT_THROW(parse_config(zero_bw), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/pimcache.cfg"), ConfigError);
}

TEST(Config, SizeSuffixes) {
  EXPECT_EQ(parse_size("4K"), 4096u);
  EXPECT_EQ(parse_size("2m"), 2 * MiB);
  EXPECT_EQ(parse_size("1G"), GiB);
  EXPECT_EQ(parse_size(" 17 "), 17u);
  EXPECT_THROW(parse_size("M"), ConfigError);
  EXPECT_THROW(parse_size("-1"), ConfigError);
}
