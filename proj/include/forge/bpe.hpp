#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace forge {

// Byte-pair encoding over whitespace-separated words. Subword tokens that do
// not end a word carry a trailing "@@" marker, which makes detokenization an
// exact inverse of segmentation.
struct BpeModel {
    std::vector<std::pair<std::string, std::string>> merges;  // in learned order
    std::vector<std::string> vocab_tokens;                    // surface forms, sorted
    std::string fingerprint;

    std::vector<std::string> segment_word(const std::string& word) const;
    std::vector<std::string> segment(const std::vector<std::string>& words) const;
    std::vector<std::string> segment_line(const std::string& line) const;

    void save(const std::string& path) const;
    static BpeModel load(const std::string& path);

private:
    mutable std::unordered_map<std::string, std::vector<std::string>> cache_;
};

// Greedy pair-merge learning on word frequencies; ties break to the
// lexicographically smallest pair. Stops early when no pair repeats.
BpeModel learn_bpe(const std::vector<std::string>& lines, int merges);

std::vector<std::string> split_words(const std::string& line);
std::string join_words(const std::vector<std::string>& words);

// Inverse of segmentation: glue "@@"-marked subwords back into words.
std::vector<std::string> bpe_detokenize(const std::vector<std::string>& subwords);

}  // namespace forge
