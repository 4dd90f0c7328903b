#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pimcache/core.hpp"
#include "pimcache/parallel.hpp"

namespace pimcache {

struct SyntheticSpec {
  std::uint64_t total_bytes = 0;
  double repetition_ratio = 0.0;   // R in [0, 1]
  std::uint32_t segment_blocks = 256;
  std::uint64_t seed = 0;
  std::uint32_t block_size = kDefaultBlockSize;
};

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

inline void fill_random(std::span<std::byte> out, std::mt19937_64& rng) {
  std::size_t i = 0;
  for (; i + 8 <= out.size(); i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, 8);
  }
  if (i < out.size()) {
    const std::uint64_t v = rng();
    std::memcpy(out.data() + i, &v, out.size() - i);
  }
}

}  // namespace detail

// Number of blocks in a segment of n blocks that repeat the segment's first
// block. Block 0 is always fresh, so at most n - 1 can be copies.
inline std::uint64_t repeated_blocks(double r, std::uint64_t n) {
  if (n == 0) return 0;
  const auto want = static_cast<std::uint64_t>(std::llround(r * static_cast<double>(n)));
  return std::min(want, n - 1);
}

// Segmented random buffer with block-level repetition. In each segment the
// first block is fresh; repeated_blocks(R, n) seeded-random positions among
// the rest copy it; the remaining blocks are fresh. Segments use independent
// RNG streams, so output does not depend on `workers`.
inline std::vector<std::byte> gen_synthetic(const SyntheticSpec& spec, std::size_t workers = 1) {
  if (!(spec.repetition_ratio >= 0.0 && spec.repetition_ratio <= 1.0)) {
    throw InvalidArgument("gen_synthetic: repetition ratio must lie in [0, 1]");
  }
  validate_block_size(spec.block_size);
  if (spec.total_bytes % spec.block_size != 0) {
    throw InvalidArgument("gen_synthetic: total_bytes must be a multiple of block_size");
  }
  if (spec.segment_blocks == 0) throw InvalidArgument("gen_synthetic: segment_blocks must be >= 1");

  const std::uint32_t bs = spec.block_size;
  const std::uint64_t blocks = spec.total_bytes / bs;
  const std::uint64_t segments = blocks_for(blocks, spec.segment_blocks);
  std::vector<std::byte> out(spec.total_bytes);

  parallel_ranges(workers, segments, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> positions;
    for (std::size_t s = begin; s < end; ++s) {
      auto rng = detail::stream_rng(spec.seed, s);
      const std::uint64_t first = s * spec.segment_blocks;
      const std::uint64_t n = std::min<std::uint64_t>(spec.segment_blocks, blocks - first);
      const std::uint64_t copies = repeated_blocks(spec.repetition_ratio, n);

      positions.resize(n - 1);
      std::iota(positions.begin(), positions.end(), 1u);
      std::shuffle(positions.begin(), positions.end(), rng);
      std::vector<bool> is_copy(n, false);
      for (std::uint64_t i = 0; i < copies; ++i) is_copy[positions[i]] = true;

      std::byte* seg = out.data() + first * bs;
      detail::fill_random({seg, bs}, rng);
      for (std::uint64_t b = 1; b < n; ++b) {
        std::byte* dst = seg + b * bs;
        if (is_copy[b]) {
          std::memcpy(dst, seg, bs);
        } else {
          detail::fill_random({dst, bs}, rng);
        }
      }
    }
  });
  return out;
}

struct FastaSequence {
  std::string bases;
  std::string source_path;
  std::uint64_t headers_stripped = 0;
  std::uint64_t non_iupac = 0;  // symbols kept despite not being IUPAC codes
};

inline bool is_iupac_nucleotide(char c) {
  static constexpr std::string_view kCodes = "ACGTURYSWKMBDHVN-.";
  return kCodes.find(c) != std::string_view::npos;
}

// Drops '>' header lines, strips CR/LF, uppercases and concatenates the rest.
inline FastaSequence parse_fasta(std::istream& in, std::string source = {}) {
  FastaSequence seq;
  seq.source_path = std::move(source);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '>') {
      ++seq.headers_stripped;
      continue;
    }
    for (char c : line) {
      if (c == '\r' || c == '\n') continue;
      const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (!is_iupac_nucleotide(u)) ++seq.non_iupac;
      seq.bases.push_back(u);
    }
  }
  if (seq.bases.empty()) {
    throw EmptySequence("FASTA input " + seq.source_path + " contains no bases");
  }
  return seq;
}

inline FastaSequence load_fasta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open FASTA file " + path);
  return parse_fasta(in, path);
}

inline FastaSequence parse_fasta_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

// Canonical FASTA: one header, 60 bases per line.
inline std::string to_fasta(std::string_view bases, std::string_view header = "seq") {
  std::string out = ">" + std::string(header) + "\n";
  for (std::size_t i = 0; i < bases.size(); i += 60) {
    out.append(bases.substr(i, 60));
    out.push_back('\n');
  }
  return out;
}

// A=0, C=1, G=2, T=3; any other symbol gets 4, 5, ... in order of first
// appearance.
inline std::vector<std::uint32_t> encode_bases(std::string_view bases) {
  std::array<std::int64_t, 256> code;
  code.fill(-1);
  code['A'] = 0;
  code['C'] = 1;
  code['G'] = 2;
  code['T'] = 3;
  std::int64_t next = 4;
  std::vector<std::uint32_t> out;
  out.reserve(bases.size());
  for (char c : bases) {
    auto& slot = code[static_cast<unsigned char>(c)];
    if (slot < 0) slot = next++;
    out.push_back(static_cast<std::uint32_t>(slot));
  }
  return out;
}

inline std::vector<std::uint32_t> encode_bases(const FastaSequence& seq) {
  return encode_bases(seq.bases);
}

struct PairedGenomes {
  std::string seq_a;
  std::string seq_b;
  std::uint64_t shared_blocks = 0;
  std::uint64_t total_blocks = 0;
};

// Random ACGT sequence A and a sequence B that copies exactly
// round(f * blocks) block-aligned regions of A at the same offsets; the rest
// of B is independent random bases.
inline PairedGenomes make_paired_genomes(std::uint64_t len_bytes, double overlap, std::uint64_t seed,
                                         std::uint32_t block_size = kDefaultBlockSize) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw InvalidArgument("make_paired_genomes: overlap must lie in [0, 1]");
  }
  static constexpr char kBases[4] = {'A', 'C', 'G', 'T'};
  auto random_bases = [](std::string& s, std::mt19937_64& rng) {
    std::size_t i = 0;
    while (i < s.size()) {
      std::uint64_t v = rng();
      for (int k = 0; k < 32 && i < s.size(); ++k, ++i, v >>= 2) s[i] = kBases[v & 3];
    }
  };

  PairedGenomes g;
  g.total_blocks = blocks_for(len_bytes, block_size);
  g.shared_blocks = static_cast<std::uint64_t>(
      std::llround(overlap * static_cast<double>(g.total_blocks)));
  g.seq_a.resize(len_bytes);
  g.seq_b.resize(len_bytes);
  auto rng_a = detail::stream_rng(seed, 0);
  auto rng_b = detail::stream_rng(seed, 1);
  auto rng_pick = detail::stream_rng(seed, 2);
  random_bases(g.seq_a, rng_a);
  random_bases(g.seq_b, rng_b);

  std::vector<std::uint64_t> order(g.total_blocks);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_pick);
  for (std::uint64_t i = 0; i < g.shared_blocks; ++i) {
    const std::uint64_t begin = order[i] * block_size;
    const std::uint64_t n = std::min<std::uint64_t>(block_size, len_bytes - begin);
    std::memcpy(g.seq_b.data() + begin, g.seq_a.data() + begin, n);
  }
  return g;
}

inline std::span<const std::byte> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

}  // namespace pimcache
