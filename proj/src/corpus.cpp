#include "forge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "forge/model.hpp"

namespace forge {

namespace {

std::string make_word(Rng& rng, const std::string& cons, const std::string& vows) {
    int syllables = 2 + static_cast<int>(rng.below(2));  // 2-3 CV syllables
    std::string w;
    for (int i = 0; i < syllables; ++i) {
        w += cons[rng.below(cons.size())];
        w += vows[rng.below(vows.size())];
    }
    return w;
}

std::vector<std::string> make_lexicon(Rng& rng, int concepts, const std::string& cons,
                                      const std::string& vows, const std::string& reserved) {
    std::vector<std::string> lex;
    std::unordered_set<std::string> used{reserved};
    while (static_cast<int>(lex.size()) < concepts) {
        std::string w = make_word(rng, cons, vows);
        if (used.insert(w).second) lex.push_back(w);
    }
    return lex;
}

const char* suffix_for(char lang, int parity) {
    switch (lang) {
        case 'x': return parity == 0 ? "an" : "en";
        case 'y': return parity == 0 ? "os" : "is";
        default: return parity == 0 ? "um" : "il";
    }
}

}  // namespace

std::vector<int> reorder(char lang, const std::vector<int>& s) {
    std::vector<int> out = s;
    if (lang == 'x') {
        for (size_t i = 0; i + 1 < out.size(); i += 2) std::swap(out[i], out[i + 1]);
    } else if (lang == 'y') {
        for (size_t i = 0; i < out.size(); i += 3) {
            size_t j = std::min(i + 3, out.size());
            std::reverse(out.begin() + i, out.begin() + j);
        }
    }
    return out;
}

std::vector<int> inverse_reorder(char lang, const std::vector<int>& s) {
    return reorder(lang, s);  // both reorderings are involutions
}

Languages build_languages(uint64_t seed, int concepts) {
    if (concepts < 1) throw std::invalid_argument("concept inventory must be positive");
    Languages l;
    l.concepts = concepts;
    l.marker_y = "jo";
    Rng rx(Rng(seed).fork(1)), ry(Rng(seed).fork(2)), rz(Rng(seed).fork(3));
    l.lex_x = make_lexicon(rx, concepts, "bdgvz", "aiu", l.marker_y);
    l.lex_y = make_lexicon(ry, concepts, "ptkfs", "eoa", l.marker_y);
    l.lex_z = make_lexicon(rz, concepts, "mnlrh", "iou", l.marker_y);
    return l;
}

std::vector<std::string> Languages::render(char lang, const std::vector<int>& sentence) const {
    const std::vector<std::string>& lex = lang == 'x' ? lex_x : lang == 'y' ? lex_y : lex_z;
    std::vector<int> ordered = reorder(lang, sentence);
    std::vector<std::string> out;
    if (lang == 'y') out.push_back(marker_y);
    for (size_t i = 0; i < ordered.size(); ++i) {
        int c = ordered[i];
        if (c < 0 || c >= concepts) throw std::out_of_range("concept id outside inventory");
        out.push_back(lex[c] + suffix_for(lang, static_cast<int>(i % 2)));
    }
    return out;
}

std::vector<int> Languages::invert(char lang, const std::vector<std::string>& words) const {
    const std::vector<std::string>& lex = lang == 'x' ? lex_x : lang == 'y' ? lex_y : lex_z;
    std::unordered_map<std::string, int> rev;
    for (int i = 0; i < concepts; ++i) rev[lex[i]] = i;
    std::vector<std::string> body = words;
    if (lang == 'y') {
        if (body.empty() || body.front() != marker_y)
            throw std::invalid_argument("missing language-Y marker token");
        body.erase(body.begin());
    }
    std::vector<int> ordered;
    for (size_t i = 0; i < body.size(); ++i) {
        const std::string suffix = suffix_for(lang, static_cast<int>(i % 2));
        const std::string& w = body[i];
        if (w.size() <= suffix.size() || w.compare(w.size() - suffix.size(), suffix.size(), suffix) != 0)
            throw std::invalid_argument("word does not carry the positional suffix: " + w);
        auto it = rev.find(w.substr(0, w.size() - suffix.size()));
        if (it == rev.end()) throw std::invalid_argument("word outside lexicon: " + w);
        ordered.push_back(it->second);
    }
    return inverse_reorder(lang, ordered);
}

std::pair<std::vector<SegmentedPair>, CleanReport> clean_parallel(
    const std::vector<SegmentedPair>& pairs, int max_subwords, double max_ratio) {
    std::vector<SegmentedPair> kept;
    CleanReport rep;
    std::unordered_set<std::string> seen;
    for (const auto& p : pairs) {
        int la = static_cast<int>(p.first.size()), lb = static_cast<int>(p.second.size());
        if (la > max_subwords || lb > max_subwords) {
            ++rep.removed_length;
            continue;
        }
        int hi = std::max(la, lb), lo = std::max(1, std::min(la, lb));
        if (static_cast<double>(hi) / static_cast<double>(lo) > max_ratio) {
            ++rep.removed_ratio;
            continue;
        }
        std::string key = join_words(p.first) + "\t" + join_words(p.second);
        if (!seen.insert(key).second) {
            ++rep.removed_duplicate;
            continue;
        }
        kept.push_back(p);
        ++rep.kept;
    }
    return {std::move(kept), rep};
}

namespace {

struct SentenceSampler {
    const GenParams& params;
    Rng rng;
    std::vector<double> zipf_cdf;
    std::unordered_set<uint64_t> used;  // hash of drawn concept sentences

    SentenceSampler(const GenParams& p, uint64_t seed) : params(p), rng(seed) {
        zipf_cdf.resize(p.concepts);
        double acc = 0;
        for (int k = 0; k < p.concepts; ++k) {
            acc += 1.0 / static_cast<double>(k + 1);
            zipf_cdf[k] = acc;
        }
        for (double& v : zipf_cdf) v /= acc;
    }

    int draw_concept() {
        double u = rng.uniform();
        return static_cast<int>(std::lower_bound(zipf_cdf.begin(), zipf_cdf.end(), u) -
                                zipf_cdf.begin());
    }

    // next unused concept sentence
    std::vector<int> draw_unique() {
        for (int attempt = 0; attempt < 100000; ++attempt) {
            int len = params.len_min +
                      static_cast<int>(rng.below(static_cast<uint64_t>(params.len_max - params.len_min + 1)));
            std::vector<int> s(len);
            for (int& c : s) c = draw_concept();
            uint64_t h = fnv1a64(s.data(), s.size() * sizeof(int));
            if (used.insert(h).second) return s;
        }
        throw std::runtime_error("concept inventory exhausted while sampling unique sentences");
    }
};

ParallelSet render_pairs(const Languages& langs, const std::vector<std::vector<int>>& sents,
                         char src, char tgt) {
    ParallelSet out;
    for (const auto& s : sents) {
        out.src.push_back(join_words(langs.render(src, s)));
        out.tgt.push_back(join_words(langs.render(tgt, s)));
    }
    return out;
}

// oversample, segment, clean, truncate to the requested size
ParallelSet cleaned_pool(SentenceSampler& sampler, const Languages& langs, char src, char tgt,
                         const BpeModel& bpe_src, const BpeModel& bpe_tgt, int want,
                         const GenParams& params, CleanReport& total_report) {
    ParallelSet out;
    while (static_cast<int>(out.size()) < want) {
        int missing = want - static_cast<int>(out.size());
        int batch = missing + missing / 20 + 16;  // slack for cleaning losses
        std::vector<std::vector<int>> sents;
        sents.reserve(batch);
        for (int i = 0; i < batch; ++i) sents.push_back(sampler.draw_unique());
        ParallelSet raw = render_pairs(langs, sents, src, tgt);
        std::vector<SegmentedPair> seg;
        seg.reserve(raw.size());
        for (size_t i = 0; i < raw.size(); ++i)
            seg.push_back({bpe_src.segment_line(raw.src[i]), bpe_tgt.segment_line(raw.tgt[i])});
        auto [kept, rep] = clean_parallel(seg, params.max_subwords, params.max_ratio);
        total_report.removed_length += rep.removed_length;
        total_report.removed_ratio += rep.removed_ratio;
        total_report.removed_duplicate += rep.removed_duplicate;
        for (const auto& p : kept) {
            if (static_cast<int>(out.size()) >= want) break;
            out.src.push_back(join_words(bpe_detokenize(p.first)));
            out.tgt.push_back(join_words(bpe_detokenize(p.second)));
            ++total_report.kept;
        }
    }
    return out;
}

}  // namespace

TriangleCorpus generate_triangle(const GenParams& params) {
    if (params.sizes.xz <= 0 || params.sizes.zy <= 0 || params.sizes.xy <= 0 ||
        params.sizes.mono <= 0 || params.sizes.dev <= 0 || params.sizes.test <= 0)
        throw std::invalid_argument("corpus sizes must be positive");
    TriangleCorpus tc;
    tc.langs = build_languages(params.seed, params.concepts);
    SentenceSampler sampler(params, Rng(params.seed).fork(100).next_u64());

    auto draw_mono = [&](char lang) {
        std::vector<std::string> out;
        out.reserve(params.sizes.mono);
        for (int i = 0; i < params.sizes.mono; ++i)
            out.push_back(join_words(tc.langs.render(lang, sampler.draw_unique())));
        return out;
    };
    tc.mono_x = draw_mono('x');
    tc.mono_y = draw_mono('y');
    tc.mono_z = draw_mono('z');

    tc.bpe_x = learn_bpe(tc.mono_x, params.bpe_merges);
    tc.bpe_y = learn_bpe(tc.mono_y, params.bpe_merges);
    tc.bpe_z = learn_bpe(tc.mono_z, params.bpe_merges);

    tc.xz_train = cleaned_pool(sampler, tc.langs, 'x', 'z', tc.bpe_x, tc.bpe_z, params.sizes.xz,
                               params, tc.clean_report);
    tc.zy_train = cleaned_pool(sampler, tc.langs, 'z', 'y', tc.bpe_z, tc.bpe_y, params.sizes.zy,
                               params, tc.clean_report);
    tc.xy_train = cleaned_pool(sampler, tc.langs, 'x', 'y', tc.bpe_x, tc.bpe_y, params.sizes.xy,
                               params, tc.clean_report);
    tc.xz_dev = cleaned_pool(sampler, tc.langs, 'x', 'z', tc.bpe_x, tc.bpe_z, params.sizes.dev,
                             params, tc.clean_report);
    tc.xz_test = cleaned_pool(sampler, tc.langs, 'x', 'z', tc.bpe_x, tc.bpe_z, params.sizes.test,
                              params, tc.clean_report);
    tc.zy_dev = cleaned_pool(sampler, tc.langs, 'z', 'y', tc.bpe_z, tc.bpe_y, params.sizes.dev,
                             params, tc.clean_report);
    tc.zy_test = cleaned_pool(sampler, tc.langs, 'z', 'y', tc.bpe_z, tc.bpe_y, params.sizes.test,
                              params, tc.clean_report);
    tc.xy_dev = cleaned_pool(sampler, tc.langs, 'x', 'y', tc.bpe_x, tc.bpe_y, params.sizes.dev,
                             params, tc.clean_report);
    tc.xy_test = cleaned_pool(sampler, tc.langs, 'x', 'y', tc.bpe_x, tc.bpe_y, params.sizes.test,
                              params, tc.clean_report);

    // joint source-pivot BPE, learned on the two sides of the X-Z parallel
    // training data (step-wise pre-training's shared vocabulary)
    std::vector<std::string> joint = tc.xz_train.src;
    joint.insert(joint.end(), tc.xz_train.tgt.begin(), tc.xz_train.tgt.end());
    tc.bpe_xz_joint = learn_bpe(joint, params.bpe_merges * 2);
    return tc;
}

BtMix make_bt_mix(const ParallelSet& authentic, const ParallelSet& synthetic, int ratio_a,
                  int ratio_b, uint64_t seed) {
    if (authentic.size() == 0) throw std::invalid_argument("make_bt_mix: empty authentic set");
    if (ratio_a <= 0 || ratio_b <= 0) throw std::invalid_argument("make_bt_mix: invalid ratio");
    BtMix mix;
    mix.synthetic_total = static_cast<int>(synthetic.size());
    if (synthetic.size() == 0) {
        std::cerr << "warning: empty synthetic set, returning authentic data unchanged\n";
        mix.synthetic_empty_warning = true;
        mix.mixed = authentic;
        mix.authentic_total = static_cast<int>(authentic.size());
        return mix;
    }
    int64_t n = static_cast<int64_t>(authentic.size());
    int64_t target = static_cast<int64_t>(synthetic.size()) * ratio_a / ratio_b;
    std::vector<size_t> order;
    if (n >= target) {
        mix.authentic_total = static_cast<int>(n);
        for (size_t i = 0; i < authentic.size(); ++i) order.push_back(i);
    } else {
        mix.authentic_total = static_cast<int>(target);
        int64_t copies = target / n;
        int64_t prefix = target % n;
        for (int64_t c = 0; c < copies; ++c)
            for (int64_t i = 0; i < n; ++i) order.push_back(static_cast<size_t>(i));
        for (int64_t i = 0; i < prefix; ++i) order.push_back(static_cast<size_t>(i));
    }
    ParallelSet combined;
    for (size_t i : order) {
        combined.src.push_back(authentic.src[i]);
        combined.tgt.push_back(authentic.tgt[i]);
    }
    for (size_t i = 0; i < synthetic.size(); ++i) {
        combined.src.push_back(synthetic.src[i]);
        combined.tgt.push_back(synthetic.tgt[i]);
    }
    std::vector<size_t> perm(combined.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng(seed).shuffle(perm);
    for (size_t i : perm) {
        mix.mixed.src.push_back(combined.src[i]);
        mix.mixed.tgt.push_back(combined.tgt[i]);
    }
    return mix;
}

ParallelSet generate_bt_synthetic(
    const std::function<std::vector<std::string>(const std::vector<std::string>&)>& translate,
    const ParallelSet& zy) {
    ParallelSet out;
    out.src.reserve(zy.size());
    out.tgt = zy.tgt;
    for (const auto& z : zy.src) out.src.push_back(join_words(translate(split_words(z))));
    return out;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& l : lines) f << l << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(f, line)) out.push_back(line);
    return out;
}

}  // namespace forge
