#include "forge/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "forge/model.hpp"

namespace forge {

std::vector<std::string> split_words(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

std::string join_words(const std::vector<std::string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

namespace {

std::vector<std::string> to_symbols(const std::string& word) {
    std::vector<std::string> syms;
    for (char c : word) syms.emplace_back(1, c);
    return syms;
}

void merge_in_place(std::vector<std::string>& syms, const std::pair<std::string, std::string>& m) {
    size_t w = 0;
    for (size_t r = 0; r < syms.size(); ++r) {
        if (r + 1 < syms.size() && syms[r] == m.first && syms[r + 1] == m.second) {
            std::string merged = syms[r] + syms[r + 1];
            syms[w++] = std::move(merged);
            ++r;
        } else {
            if (w != r) syms[w] = std::move(syms[r]);
            ++w;
        }
    }
    syms.resize(w);
}

std::vector<std::string> surface_tokens(const std::vector<std::string>& syms) {
    std::vector<std::string> out;
    for (size_t i = 0; i < syms.size(); ++i)
        out.push_back(i + 1 < syms.size() ? syms[i] + "@@" : syms[i]);
    return out;
}

}  // namespace

BpeModel learn_bpe(const std::vector<std::string>& lines, int merges) {
    if (merges < 0) throw std::invalid_argument("learn_bpe: negative merge count");
    std::map<std::string, int64_t> word_freq;
    for (const auto& line : lines)
        for (const auto& w : split_words(line)) ++word_freq[w];
    if (word_freq.empty()) throw std::invalid_argument("learn_bpe: empty corpus");

    std::vector<std::pair<std::vector<std::string>, int64_t>> words;
    words.reserve(word_freq.size());
    for (const auto& [w, f] : word_freq) words.push_back({to_symbols(w), f});

    BpeModel model;
    for (int step = 0; step < merges; ++step) {
        std::map<std::pair<std::string, std::string>, int64_t> pair_freq;
        for (const auto& [syms, f] : words)
            for (size_t i = 0; i + 1 < syms.size(); ++i) pair_freq[{syms[i], syms[i + 1]}] += f;
        if (pair_freq.empty()) break;
        auto best = pair_freq.begin();
        for (auto it = pair_freq.begin(); it != pair_freq.end(); ++it)
            if (it->second > best->second) best = it;  // ties: first in map order (lexicographic)
        if (best->second < 2) break;                   // nothing repeats, stop early
        model.merges.push_back(best->first);
        for (auto& [syms, f] : words) merge_in_place(syms, model.merges.back());
    }

    std::set<std::string> vocab;
    for (const auto& [syms, f] : words)
        for (const auto& t : surface_tokens(syms)) vocab.insert(t);
    // single characters in both surface forms, as segmentation fallback
    for (const auto& [w, f] : word_freq)
        for (char c : w) {
            vocab.insert(std::string(1, c));
            vocab.insert(std::string(1, c) + "@@");
        }
    model.vocab_tokens.assign(vocab.begin(), vocab.end());

    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [a, b] : model.merges) {
        h = fnv1a64(a.data(), a.size(), h);
        h = fnv1a64("+", 1, h);
        h = fnv1a64(b.data(), b.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    for (const auto& t : model.vocab_tokens) {
        h = fnv1a64(t.data(), t.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    model.fingerprint = fnv1a64_hex(h);
    return model;
}

std::vector<std::string> BpeModel::segment_word(const std::string& word) const {
    auto it = cache_.find(word);
    if (it != cache_.end()) return it->second;
    std::vector<std::string> syms = to_symbols(word);
    for (const auto& m : merges) {
        if (syms.size() < 2) break;
        merge_in_place(syms, m);
    }
    std::vector<std::string> out = surface_tokens(syms);
    cache_.emplace(word, out);
    return out;
}

std::vector<std::string> BpeModel::segment(const std::vector<std::string>& words) const {
    std::vector<std::string> out;
    for (const auto& w : words) {
        auto toks = segment_word(w);
        out.insert(out.end(), toks.begin(), toks.end());
    }
    return out;
}

std::vector<std::string> BpeModel::segment_line(const std::string& line) const {
    return segment(split_words(line));
}

std::vector<std::string> bpe_detokenize(const std::vector<std::string>& subwords) {
    std::vector<std::string> out;
    std::string cur;
    for (const auto& t : subwords) {
        if (t.size() >= 2 && t.compare(t.size() - 2, 2, "@@") == 0) {
            cur += t.substr(0, t.size() - 2);
        } else {
            cur += t;
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);  // dangling continuation
    return out;
}

void BpeModel::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write bpe model " + path);
    f << "merges=" << merges.size() << "\n";
    for (const auto& [a, b] : merges) f << a << " " << b << "\n";
    for (const auto& t : vocab_tokens) f << t << "\n";
}

BpeModel BpeModel::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read bpe model " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("merges=", 0) != 0)
        throw std::runtime_error("malformed bpe model " + path);
    size_t n = std::stoul(line.substr(7));
    BpeModel m;
    for (size_t i = 0; i < n; ++i) {
        if (!std::getline(f, line)) throw std::runtime_error("truncated bpe model " + path);
        auto sp = line.find(' ');
        m.merges.push_back({line.substr(0, sp), line.substr(sp + 1)});
    }
    while (std::getline(f, line))
        if (!line.empty()) m.vocab_tokens.push_back(line);

    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [a, b] : m.merges) {
        h = fnv1a64(a.data(), a.size(), h);
        h = fnv1a64("+", 1, h);
        h = fnv1a64(b.data(), b.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    for (const auto& t : m.vocab_tokens) {
        h = fnv1a64(t.data(), t.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    m.fingerprint = fnv1a64_hex(h);
    return m;
}

}  // namespace forge
