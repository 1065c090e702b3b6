#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "forge/model.hpp"

namespace forge {

extern const char* const kSpecialTokenStrings[kNumSpecials];  // <s> </s> <pad> <mask> <unk>

// Id space: specials at 0..4, then token strings in sorted order.
struct Vocab {
    std::string lang;
    std::vector<std::string> words;
    std::unordered_map<std::string, int> index;
    std::string fingerprint;

    int size() const { return static_cast<int>(words.size()); }
    int id(const std::string& tok) const {
        auto it = index.find(tok);
        return it == index.end() ? kUnk : it->second;
    }
    std::vector<int> encode(const std::vector<std::string>& toks) const {
        std::vector<int> out;
        out.reserve(toks.size());
        for (const auto& t : toks) out.push_back(id(t));
        return out;
    }
    std::vector<std::string> decode(const std::vector<int>& ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (int i : ids) out.push_back(words.at(static_cast<size_t>(i)));
        return out;
    }

    static Vocab build(std::string lang, std::vector<std::string> tokens);
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);
};

}  // namespace forge
