#pragma once

#include <functional>
#include <string>
#include <vector>

#include "forge/bpe.hpp"
#include "forge/rng.hpp"

namespace forge {

// ---- synthetic triangular languages ----
//
// A shared concept inventory (Zipf-distributed) is rendered into three
// artificial languages. Z renders in concept order; X swaps adjacent pairs;
// Y reverses each 3-token chunk and prepends a marker word. Every lexicon is
// bijective and every reordering invertible, so X-Z, Z-Y and X-Y are all
// deterministic, learnable mappings with exact cross-pair consistency.

struct Languages {
    int concepts = 0;
    // per language: concept -> base word, plus parity suffixes
    std::vector<std::string> lex_x, lex_y, lex_z;
    std::string marker_y;

    std::vector<std::string> render(char lang, const std::vector<int>& sentence) const;
    std::vector<int> invert(char lang, const std::vector<std::string>& words) const;
};

Languages build_languages(uint64_t seed, int concepts);

std::vector<int> reorder(char lang, const std::vector<int>& s);
std::vector<int> inverse_reorder(char lang, const std::vector<int>& s);

struct CleanReport {
    int64_t removed_length = 0;
    int64_t removed_ratio = 0;
    int64_t removed_duplicate = 0;
    int64_t kept = 0;
};

using SegmentedPair = std::pair<std::vector<std::string>, std::vector<std::string>>;

// Removes pairs with a side longer than max_subwords, pairs whose subword
// length ratio exceeds max_ratio (boundary inclusive: ratio == max_ratio is
// kept), and exact duplicates. Counted per cause.
std::pair<std::vector<SegmentedPair>, CleanReport> clean_parallel(
    const std::vector<SegmentedPair>& pairs, int max_subwords = 128, double max_ratio = 1.5);

struct ParallelSet {
    std::vector<std::string> src, tgt;  // word-level lines, aligned
    size_t size() const { return src.size(); }
};

struct CorpusSizes {
    int xz = 30000, zy = 30000, xy = 1000;
    int mono = 50000;
    int dev = 500, test = 500;
};

struct GenParams {
    uint64_t seed = 1;
    int concepts = 200;
    int len_min = 4, len_max = 16;
    int bpe_merges = 500;
    int max_subwords = 128;
    double max_ratio = 1.5;
    CorpusSizes sizes;
};

struct TriangleCorpus {
    Languages langs;
    std::vector<std::string> mono_x, mono_y, mono_z;
    ParallelSet xz_train, zy_train, xy_train;
    ParallelSet xz_dev, xz_test, zy_dev, zy_test, xy_dev, xy_test;
    BpeModel bpe_x, bpe_y, bpe_z, bpe_xz_joint;
    CleanReport clean_report;
};

// Deterministic given params.seed. Parallel pools are oversampled, cleaned
// with the per-language BPE, then truncated to the requested sizes; all pools
// are disjoint at the concept-sentence level.
TriangleCorpus generate_triangle(const GenParams& params);

// ---- back-translation data assembly ----

struct BtMix {
    ParallelSet mixed;
    int authentic_total = 0;  // after oversampling
    int synthetic_total = 0;
    bool synthetic_empty_warning = false;
};

// Oversamples authentic pairs (whole copies plus a deterministic prefix)
// until authentic:synthetic matches ratio_a:ratio_b by pair count; already
// large authentic sets are left as they are. Output order is a seeded
// deterministic shuffle.
BtMix make_bt_mix(const ParallelSet& authentic, const ParallelSet& synthetic, int ratio_a = 1,
                  int ratio_b = 2, uint64_t seed = 1);

// For each (z, y) pair emits (translate(z), y); the translate callback is a
// beam-5 decoder in production and a stub in tests.
ParallelSet generate_bt_synthetic(
    const std::function<std::vector<std::string>(const std::vector<std::string>&)>& translate,
    const ParallelSet& zy);

// ---- corpus files ----

void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace forge
