#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "pimcache/drm.hpp"
#include "pimcache/vbyte.hpp"
#include "pimcache/workloads.hpp"

using namespace pimcache;

namespace {

constexpr std::uint32_t kBs = 1024;

// Blocks in [first, first + n) that are byte-equal to an earlier block in the
// same range.
std::uint64_t duplicates_in(std::span<const std::byte> buf, std::uint64_t first, std::uint64_t n) {
  std::map<std::vector<std::byte>, int> seen;
  std::uint64_t dups = 0;
  for (std::uint64_t b = first; b < first + n; ++b) {
    std::vector<std::byte> blk(buf.begin() + static_cast<std::ptrdiff_t>(b * kBs),
                               buf.begin() + static_cast<std::ptrdiff_t>((b + 1) * kBs));
    if (seen[blk]++ > 0) ++dups;
  }
  return dups;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / ("pimcache_" + name);
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

}  // namespace

TEST(RepeatedBlocks, RoundingAndCap) {
  EXPECT_EQ(repeated_blocks(0.0, 256), 0u);
  EXPECT_EQ(repeated_blocks(0.75, 256), 192u);
  EXPECT_EQ(repeated_blocks(0.5, 3), 2u);  // llround rounds half away from zero
  EXPECT_EQ(repeated_blocks(1.0, 256), 255u);
  EXPECT_EQ(repeated_blocks(1.0, 1), 0u);
  EXPECT_EQ(repeated_blocks(0.3, 0), 0u);
}

TEST(Synthetic, PerSegmentDuplicateFraction) {
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto buf = gen_synthetic({8 * 256 * kBs, r, 256, 31, kBs});
    for (std::uint64_t s = 0; s < 8; ++s) {
      EXPECT_EQ(duplicates_in(buf, s * 256, 256), repeated_blocks(r, 256)) << r;
    }
  }
}

TEST(Synthetic, ShortLastSegment) {
  const auto buf = gen_synthetic({300 * kBs, 0.5, 256, 4, kBs});
  EXPECT_EQ(duplicates_in(buf, 0, 256), 128u);
  EXPECT_EQ(duplicates_in(buf, 256, 44), 22u);
}

TEST(Synthetic, DeterministicAndWorkerInvariant) {
  const SyntheticSpec spec{4 * MiB, 0.4, 64, 77, kBs};
  const auto a = gen_synthetic(spec, 1);
  EXPECT_EQ(a, gen_synthetic(spec, 1));
  EXPECT_EQ(a, gen_synthetic(spec, 8));
  auto other = spec;
  other.seed = 78;
  EXPECT_NE(a, gen_synthetic(other));
}

TEST(Synthetic, Errors) {
  EXPECT_THROW(gen_synthetic({4 * kBs, -0.1, 256, 0, kBs}), InvalidArgument);
  EXPECT_THROW(gen_synthetic({4 * kBs, 1.1, 256, 0, kBs}), InvalidArgument);
  EXPECT_THROW(gen_synthetic({4 * kBs + 1, 0.5, 256, 0, kBs}), InvalidArgument);
  EXPECT_THROW(gen_synthetic({4 * kBs, 0.5, 0, 0, kBs}), InvalidArgument);
}

TEST(Synthetic, MeasuredDedupMatchesAnalytic) {
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto buf = gen_synthetic({4 * MiB, r, 256, 8, kBs});
    auto idx = make_indexes(4, 8192 * kBs, kBs);
    const auto res = deduplicate_buffer(buf, std::span(idx), FingerprintAlgo{}, {}, 2);
    const double analytic = 100.0 * static_cast<double>(repeated_blocks(r, 256)) / 256.0;
    EXPECT_DOUBLE_EQ(dedup_percentage(res.total), analytic) << r;
  }
}

TEST(Synthetic, FullRepetitionExceeds98Percent) {
  const auto buf = gen_synthetic({4 * MiB, 1.0, 256, 1, kBs});
  auto idx = make_indexes(4, 8192 * kBs, kBs);
  const auto res = deduplicate_buffer(buf, std::span(idx), FingerprintAlgo{}, {}, 1);
  EXPECT_GE(dedup_percentage(res.total), 98.0);
}

TEST(Fasta, StripsHeaders) {
  const auto s = parse_fasta_string(">h1\nGATT\nACA\n");
  EXPECT_EQ(s.bases, "GATTACA");
  EXPECT_EQ(s.headers_stripped, 1u);
  EXPECT_EQ(s.non_iupac, 0u);
}

TEST(Fasta, ConcatenatesRecordsAndUppercases) {
  const auto s = parse_fasta_string(">r1 chr1\r\nacgt\r\nNN\r\n>r2\ngg\n\nTT");
  EXPECT_EQ(s.bases, "ACGTNNGGTT");
  EXPECT_EQ(s.headers_stripped, 2u);
}

TEST(Fasta, OnlyHeadersIsEmpty) {
  EXPECT_THROW(parse_fasta_string(">a\n>b\n"), EmptySequence);
  EXPECT_THROW(parse_fasta_string(""), EmptySequence);
}

TEST(Fasta, NonIupacKeptAndCounted) {
  const auto s = parse_fasta_string(">x\nAC*GZ\n");
  EXPECT_EQ(s.bases, "AC*GZ");
  EXPECT_EQ(s.non_iupac, 2u);
}

TEST(Fasta, FileRoundTrip) {
  const auto g = make_paired_genomes(10'000, 0.3, 5);
  const auto path = temp_file("roundtrip.fa", to_fasta(g.seq_a, "chrTest"));
  const auto s = load_fasta(path.string());
  EXPECT_EQ(s.bases, g.seq_a);
  EXPECT_EQ(s.source_path, path.string());
  std::filesystem::remove(path);
  EXPECT_THROW(load_fasta("/nonexistent/x.fa"), InvalidArgument);
}

TEST(EncodeBases, Mapping) {
  EXPECT_EQ(encode_bases("GATTACA"), (std::vector<std::uint32_t>{2, 0, 3, 3, 0, 1, 0}));
  EXPECT_TRUE(encode_bases("").empty());
  EXPECT_EQ(encode_bases("ANRNA"), (std::vector<std::uint32_t>{0, 4, 5, 4, 0}));
}

TEST(EncodeBases, AllAFeedsGroupOne) {
  const std::string a(1'000'000, 'A');
  const auto codes = encode_bases(a);
  EXPECT_TRUE(std::all_of(codes.begin(), codes.end(), [](auto c) { return c == 0; }));
  EXPECT_DOUBLE_EQ(vbyte::payload_ratio(vbyte::compress_array(codes, 16)), 4.0);
}

TEST(PairedGenomes, SharesExactBlockCount) {
  for (double f : {0.0, 0.4, 1.0}) {
    const auto g = make_paired_genomes(512 * kBs, f, 9);
    EXPECT_EQ(g.total_blocks, 512u);
    EXPECT_EQ(g.shared_blocks, static_cast<std::uint64_t>(std::llround(f * 512)));
    std::uint64_t same = 0;
    for (std::uint64_t b = 0; b < 512; ++b) {
      same += g.seq_a.compare(b * kBs, kBs, g.seq_b, b * kBs, kBs) == 0;
    }
    EXPECT_EQ(same, g.shared_blocks) << f;
    EXPECT_TRUE(std::all_of(g.seq_b.begin(), g.seq_b.end(),
                            [](char c) { return c == 'A' || c == 'C' || c == 'G' || c == 'T'; }));
  }
  EXPECT_THROW(make_paired_genomes(kBs, 1.5, 0), InvalidArgument);
}

TEST(PairedGenomes, Deterministic) {
  const auto a = make_paired_genomes(64 * kBs, 0.4, 3);
  const auto b = make_paired_genomes(64 * kBs, 0.4, 3);
  EXPECT_EQ(a.seq_a, b.seq_a);
  EXPECT_EQ(a.seq_b, b.seq_b);
}
