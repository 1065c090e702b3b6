#include <doctest.h>

#include <algorithm>
#include <set>

#include "forge/corpus.hpp"

using namespace forge;

TEST_CASE("learn_bpe: most frequent pair merged first") {
    BpeModel m = learn_bpe({"ab ab ab"}, 1);
    REQUIRE(m.merges.size() == 1);
    CHECK(m.merges[0].first == "a");
    CHECK(m.merges[0].second == "b");
    CHECK(m.segment_word("ab") == std::vector<std::string>{"ab"});

    CHECK_THROWS(learn_bpe({"ab"}, -1));
}

TEST_CASE("learn_bpe: zero merges segments to characters with continuation markers") {
    BpeModel m = learn_bpe({"cat sat"}, 0);
    CHECK(m.segment_word("cat") == std::vector<std::string>{"c@@", "a@@", "t"});
    auto line = m.segment_line("cat sat");
    CHECK(line == std::vector<std::string>{"c@@", "a@@", "t", "s@@", "a@@", "t"});
    CHECK(bpe_detokenize(line) == std::vector<std::string>{"cat", "sat"});
}

TEST_CASE("bpe fingerprint changes iff merges or vocabulary change") {
    BpeModel a = learn_bpe({"ab ab ab cd cd"}, 2);
    BpeModel b = learn_bpe({"ab ab ab cd cd"}, 2);
    BpeModel c = learn_bpe({"ab ab ab cd cd"}, 1);
    BpeModel d = learn_bpe({"ab ab ab cd cd xq"}, 2);
    CHECK(a.fingerprint == b.fingerprint);
    CHECK(a.fingerprint != c.fingerprint);
    CHECK(a.fingerprint != d.fingerprint);
}

TEST_CASE("bpe round trip: segment then detokenize is the identity on generated text") {
    Languages langs = build_languages(11, 60);
    Rng rng(5);
    std::vector<std::string> lines;
    for (int i = 0; i < 1000; ++i) {
        int len = 4 + static_cast<int>(rng.below(10));
        std::vector<int> s(len);
        for (int& c : s) c = static_cast<int>(rng.below(60));
        lines.push_back(join_words(langs.render("xyz"[rng.below(3)], s)));
    }
    BpeModel m = learn_bpe(lines, 200);
    for (const auto& line : lines) {
        auto words = split_words(line);
        CHECK(bpe_detokenize(m.segment(words)) == words);
    }
}

TEST_CASE("languages: renderings are invertible and cross-pair consistent") {
    Languages langs = build_languages(42, 100);
    Rng rng(9);
    for (int rep = 0; rep < 200; ++rep) {
        int len = 4 + static_cast<int>(rng.below(13));
        std::vector<int> s(len);
        for (int& c : s) c = static_cast<int>(rng.below(100));

        auto x = langs.render('x', s);
        auto y = langs.render('y', s);
        auto z = langs.render('z', s);
        CHECK(langs.invert('x', x) == s);
        CHECK(langs.invert('y', y) == s);
        CHECK(langs.invert('z', z) == s);

        // X-inverse then Y-forward reproduces the Y side exactly
        CHECK(langs.render('y', langs.invert('x', x)) == y);
        // rendering into X then mapping to Z equals rendering directly into Z
        CHECK(langs.render('z', langs.invert('x', x)) == z);
        // X -> Z -> Y composition equals direct X -> Y
        CHECK(langs.render('y', langs.invert('z', langs.render('z', langs.invert('x', x)))) == y);
    }
}

static GenParams small_params(uint64_t seed = 7) {
    GenParams p;
    p.seed = seed;
    p.concepts = 80;
    p.bpe_merges = 80;
    p.sizes.xz = 300;
    p.sizes.zy = 300;
    p.sizes.xy = 60;
    p.sizes.mono = 500;
    p.sizes.dev = 40;
    p.sizes.test = 40;
    return p;
}

TEST_CASE("generate_triangle: deterministic, sized exactly, pairs consistent") {
    TriangleCorpus a = generate_triangle(small_params());
    TriangleCorpus b = generate_triangle(small_params());
    CHECK(a.mono_x == b.mono_x);
    CHECK(a.xz_train.src == b.xz_train.src);
    CHECK(a.xy_test.tgt == b.xy_test.tgt);
    CHECK(a.bpe_z.fingerprint == b.bpe_z.fingerprint);

    CHECK(a.xz_train.size() == 300);
    CHECK(a.zy_train.size() == 300);
    CHECK(a.xy_train.size() == 60);
    CHECK(a.mono_y.size() == 500);
    CHECK(a.xy_dev.size() == 40);
    CHECK(a.xy_test.size() == 40);

    // every emitted xy pair obeys the generator's mapping
    for (size_t i = 0; i < a.xy_train.size(); ++i) {
        auto xw = split_words(a.xy_train.src[i]);
        auto yw = split_words(a.xy_train.tgt[i]);
        CHECK(a.langs.render('y', a.langs.invert('x', xw)) == yw);
    }
    // train and heldout pools are disjoint
    std::set<std::string> train_x(a.xy_train.src.begin(), a.xy_train.src.end());
    for (const auto& s : a.xy_dev.src) CHECK(train_x.count(s) == 0);
    for (const auto& s : a.xy_test.src) CHECK(train_x.count(s) == 0);
}

TEST_CASE("clean_parallel: length, ratio boundary, duplicates") {
    auto tok = [](int n, const std::string& stem) {
        std::vector<std::string> out;
        for (int i = 0; i < n; ++i) out.push_back(stem + std::to_string(i));
        return out;
    };
    std::vector<SegmentedPair> pairs = {
        {tok(129, "a"), tok(10, "b")},  // removed: length
        {tok(10, "c"), tok(6, "d")},    // removed: ratio 10/6 > 1.5
        {tok(9, "e"), tok(6, "f")},     // kept: 9/6 == 1.5 inclusive
        {tok(4, "g"), tok(4, "h")},     // kept
        {tok(4, "g"), tok(4, "h")},     // removed: duplicate
    };
    auto [kept, rep] = clean_parallel(pairs, 128, 1.5);
    CHECK(kept.size() == 2);
    CHECK(rep.removed_length == 1);
    CHECK(rep.removed_ratio == 1);
    CHECK(rep.removed_duplicate == 1);
    CHECK(rep.kept == 2);

    // order independence of the surviving set
    std::vector<SegmentedPair> perm = {pairs[3], pairs[1], pairs[4], pairs[0], pairs[2]};
    auto [kept2, rep2] = clean_parallel(perm, 128, 1.5);
    auto key = [](const SegmentedPair& p) { return join_words(p.first) + "\t" + join_words(p.second); };
    std::set<std::string> s1, s2;
    for (auto& p : kept) s1.insert(key(p));
    for (auto& p : kept2) s2.insert(key(p));
    CHECK(s1 == s2);
}

static ParallelSet numbered_pairs(int n, const std::string& tag) {
    ParallelSet out;
    for (int i = 0; i < n; ++i) {
        out.src.push_back(tag + "_s" + std::to_string(i));
        out.tgt.push_back(tag + "_t" + std::to_string(i));
    }
    return out;
}

TEST_CASE("make_bt_mix: oversampling to the 1:2 ratio") {
    ParallelSet authentic = numbered_pairs(1000, "a");
    ParallelSet synthetic = numbered_pairs(20000, "s");
    BtMix mix = make_bt_mix(authentic, synthetic, 1, 2, 3);
    CHECK(mix.authentic_total == 10000);
    CHECK(mix.synthetic_total == 20000);
    CHECK(mix.mixed.size() == 30000);
    int authentic_seen = 0;
    for (const auto& s : mix.mixed.src) authentic_seen += s[0] == 'a';
    CHECK(authentic_seen == 10000);

    // already at ratio: no duplication
    BtMix even = make_bt_mix(numbered_pairs(2000, "a"), numbered_pairs(4000, "s"), 1, 2, 3);
    CHECK(even.authentic_total == 2000);
    CHECK(even.mixed.size() == 6000);

    // whole copies plus deterministic prefix
    BtMix frac = make_bt_mix(numbered_pairs(300, "a"), numbered_pairs(2000, "s"), 1, 2, 3);
    CHECK(frac.authentic_total == 1000);  // 3 full copies + first 100

    // degenerate: empty synthetic
    BtMix none = make_bt_mix(authentic, ParallelSet{}, 1, 2, 3);
    CHECK(none.synthetic_empty_warning);
    CHECK(none.mixed.src == authentic.src);

    CHECK_THROWS(make_bt_mix(ParallelSet{}, synthetic, 1, 2, 3));
}

TEST_CASE("generate_bt_synthetic: stub translation model oracle") {
    Languages langs = build_languages(17, 50);
    Rng rng(23);
    std::vector<std::vector<int>> sents;
    ParallelSet zy;
    for (int i = 0; i < 50; ++i) {
        int len = 4 + static_cast<int>(rng.below(8));
        std::vector<int> s(len);
        for (int& c : s) c = static_cast<int>(rng.below(50));
        sents.push_back(s);
        zy.src.push_back(join_words(langs.render('z', s)));
        zy.tgt.push_back(join_words(langs.render('y', s)));
    }
    // stub model: the generator's deterministic Z -> X mapping
    auto stub = [&](const std::vector<std::string>& z) {
        return langs.render('x', langs.invert('z', z));
    };
    ParallelSet synth = generate_bt_synthetic(stub, zy);
    REQUIRE(synth.size() == zy.size());
    CHECK(synth.tgt == zy.tgt);  // y sides pass through untouched
    for (size_t i = 0; i < synth.size(); ++i)
        CHECK(synth.src[i] == join_words(langs.render('x', sents[i])));
}
