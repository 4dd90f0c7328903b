#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <thread>
#include <unordered_set>
#include <vector>

#include "pimcache/fingerprint.hpp"

using namespace pimcache;

namespace {

struct Golden {
  std::size_t len;
  std::uint64_t xxh64_0, xxh64_seed;
  std::uint64_t xxh32_0, xxh32_seed;
  std::uint64_t murmur_0, murmur_seed;
  std::uint64_t farm_0, farm_seed;
};

constexpr Golden kGoldens[] = {
#include "fixtures/hash_goldens.inc"
};

constexpr std::uint64_t kSeed = 0x9E3779B97F4A7C15ULL;
// xxh64 of 1 KiB of zeros, seed 0, from the Python reference binding.
constexpr std::uint64_t kZeroBlockXxh64 = 0x27742888f085accdULL;

std::vector<std::byte> pattern(std::size_t len) {
  std::vector<std::byte> v(len);
  for (std::size_t i = 0; i < len; ++i) v[i] = static_cast<std::byte>((i * 31 + 7) & 0xff);
  return v;
}

}  // namespace

TEST(HashGoldens, Xxh64) {
  for (const auto& g : kGoldens) {
    const auto data = pattern(g.len);
    EXPECT_EQ(hash::xxh64(data, 0), g.xxh64_0) << g.len;
    EXPECT_EQ(hash::xxh64(data, kSeed), g.xxh64_seed) << g.len;
  }
}

TEST(HashGoldens, Xxh32) {
  for (const auto& g : kGoldens) {
    const auto data = pattern(g.len);
    EXPECT_EQ(hash::xxh32(data, 0), g.xxh32_0) << g.len;
    EXPECT_EQ(hash::xxh32(data, static_cast<std::uint32_t>(kSeed)), g.xxh32_seed) << g.len;
  }
}

TEST(HashGoldens, Murmur3) {
  for (const auto& g : kGoldens) {
    const auto data = pattern(g.len);
    EXPECT_EQ(hash::murmur3_32(data, 0), g.murmur_0) << g.len;
    EXPECT_EQ(hash::murmur3_32(data, static_cast<std::uint32_t>(kSeed)), g.murmur_seed) << g.len;
  }
}

TEST(HashGoldens, Farmhash64) {
  for (const auto& g : kGoldens) {
    const auto data = pattern(g.len);
    EXPECT_EQ(hash::farm64(data), g.farm_0) << g.len;
    EXPECT_EQ(hash::farm64(data, kSeed), g.farm_seed) << g.len;
  }
}

TEST(FingerprintBlock, ZeroBlockGolden) {
  const std::vector<std::byte> zeros(1024);
  EXPECT_EQ(fingerprint_block(FingerprintAlgo{}, zeros).digest, kZeroBlockXxh64);
}

TEST(FingerprintBlock, DeterministicForEveryAlgo) {
  const auto block = pattern(1024);
  for (auto kind : kAllFingerprintKinds) {
    for (std::uint64_t seed : {std::uint64_t{0}, std::uint64_t{1}, kSeed}) {
      const FingerprintAlgo algo{kind, seed};
      EXPECT_EQ(algo(block), algo(pattern(1024))) << algo.name();
    }
  }
}

TEST(FingerprintBlock, SeedChangesDigest) {
  const auto block = pattern(1024);
  for (auto kind : kAllFingerprintKinds) {
    EXPECT_NE(FingerprintAlgo(kind, 0)(block), FingerprintAlgo(kind, 12345)(block))
        << to_string(kind);
  }
}

TEST(FingerprintBlock, WidenedAlgosMatchComposition) {
  const auto block = pattern(1024);
  const auto s32 = static_cast<std::uint32_t>(kSeed);
  EXPECT_EQ(FingerprintAlgo(FingerprintKind::xxhash32_widened, kSeed)(block).digest,
            hash::widen32(hash::xxh32(block, s32), kSeed));
  EXPECT_EQ(FingerprintAlgo(FingerprintKind::murmur3_widened, kSeed)(block).digest,
            hash::widen32(hash::murmur3_32(block, s32), kSeed));
}

TEST(FingerprintAlgo, NamesRoundTrip) {
  for (auto kind : kAllFingerprintKinds) {
    EXPECT_EQ(FingerprintAlgo::from_name(to_string(kind)).kind, kind);
  }
  EXPECT_THROW(FingerprintAlgo::from_name("md5"), ConfigError);
  EXPECT_THROW(parse_fingerprint_kind(""), ConfigError);
}

TEST(Widen32, InjectiveOnSample) {
  // mix64 is a bijection; check a dense slice anyway.
  for (std::uint64_t seed : {std::uint64_t{0}, kSeed}) {
    std::unordered_set<std::uint64_t> seen;
    for (std::uint32_t d = 0; d < 200000; ++d) seen.insert(hash::widen32(d, seed));
    EXPECT_EQ(seen.size(), 200000u);
  }
}

TEST(FingerprintBlock, RandomBlocksDoNotCollide) {
  constexpr std::size_t kBlocks = 100000;
  std::mt19937_64 rng(42);
  std::vector<std::byte> block(1024);
  std::vector<std::uint64_t> digests;
  digests.reserve(kBlocks);
  const FingerprintAlgo algo{};
  for (std::size_t i = 0; i < kBlocks; ++i) {
    for (std::size_t j = 0; j < block.size(); j += 8) {
      const auto v = rng();
      std::memcpy(block.data() + j, &v, 8);
    }
    digests.push_back(algo(block).digest);
  }
  std::sort(digests.begin(), digests.end());
  EXPECT_EQ(std::adjacent_find(digests.begin(), digests.end()), digests.end());
}

TEST(Throughput, AccountsEveryByteAndIsWorkerInvariant) {
  const FingerprintAlgo algo{};
  const auto one = fingerprint_throughput(algo, 1024, 4 * MiB, 1, 9);
  const auto many = fingerprint_throughput(algo, 1024, 4 * MiB, 16, 9);
  EXPECT_EQ(one.bytes_processed, 4 * MiB);
  EXPECT_EQ(many.bytes_processed, 4 * MiB);
  EXPECT_EQ(one.digest_xor, many.digest_xor);
}

TEST(Throughput, Errors) {
  const FingerprintAlgo algo{};
  EXPECT_THROW(fingerprint_throughput(algo, 1024, 4096, 0), InvalidArgument);
  EXPECT_THROW(fingerprint_throughput(algo, 1024, 4097, 1), InvalidArgument);
}

TEST(Throughput, BlockSizeDoesNotChangeOrderOfMagnitude) {
  for (auto kind : kAllFingerprintKinds) {
    const FingerprintAlgo algo{kind, 0};
    // Best of three to dampen scheduler noise.
    double small = 0, large = 0;
    for (int i = 0; i < 3; ++i) {
      small = std::max(small, fingerprint_throughput(algo, 512, 16 * MiB, 1).bytes_per_second);
      large = std::max(large, fingerprint_throughput(algo, 4096, 16 * MiB, 1).bytes_per_second);
    }
    EXPECT_LT(std::max(small, large) / std::min(small, large), 4.0) << algo.name();
  }
}

TEST(Throughput, MoreWorkersNotSlower) {
  if (std::thread::hardware_concurrency() < 2) {
    GTEST_SKIP() << "single hardware thread: parallel speedup cannot be observed";
  }
  const FingerprintAlgo algo{};
  double one = 0, many = 0;
  for (int i = 0; i < 3; ++i) {
    one = std::max(one, fingerprint_throughput(algo, 1024, 256 * MiB, 1).bytes_per_second);
    many = std::max(many, fingerprint_throughput(algo, 1024, 256 * MiB, 16).bytes_per_second);
  }
  EXPECT_GE(many, one);
}
