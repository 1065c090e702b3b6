#include "forge/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace forge {

const char* const kSpecialTokenStrings[kNumSpecials] = {"<s>", "</s>", "<pad>", "<mask>", "<unk>"};

Vocab Vocab::build(std::string lang, std::vector<std::string> tokens) {
    Vocab v;
    v.lang = std::move(lang);
    std::set<std::string> uniq(tokens.begin(), tokens.end());
    for (int i = 0; i < kNumSpecials; ++i) uniq.erase(kSpecialTokenStrings[i]);
    for (int i = 0; i < kNumSpecials; ++i) v.words.push_back(kSpecialTokenStrings[i]);
    v.words.insert(v.words.end(), uniq.begin(), uniq.end());
    for (size_t i = 0; i < v.words.size(); ++i) v.index[v.words[i]] = static_cast<int>(i);
    v.fingerprint = vocab_fingerprint(v.words);
    return v;
}

void Vocab::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write vocab file " + path);
    f << "lang=" << lang << "\n";
    for (size_t i = kNumSpecials; i < words.size(); ++i) f << words[i] << "\n";
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read vocab file " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("lang=", 0) != 0)
        throw std::runtime_error("malformed vocab file " + path);
    std::string lang = line.substr(5);
    std::vector<std::string> toks;
    while (std::getline(f, line))
        if (!line.empty()) toks.push_back(line);
    return build(lang, std::move(toks));
}

}  // namespace forge
