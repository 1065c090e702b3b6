#include <doctest.h>

#include <cmath>
#include <map>

#include "forge/trainer.hpp"

using namespace forge;

TEST_CASE("lr_at: inverse sqrt boundary and decay") {
    Schedule s = Schedule::inverse_sqrt(3e-4, 4000);
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 4000) == doctest::Approx(3e-4));
    CHECK(lr_at(s, 16000) == doctest::Approx(1.5e-4));  // sqrt(4000/16000) = 1/2
    // continuity at the warmup boundary
    CHECK(lr_at(s, 3999) == doctest::Approx(3e-4 * 3999.0 / 4000.0));
    CHECK(lr_at(s, 4001) == doctest::Approx(3e-4 * std::sqrt(4000.0 / 4001.0)));
    CHECK_THROWS(lr_at(s, -1));
}

TEST_CASE("lr_at: polynomial reaches end_lr at total_steps") {
    Schedule s = Schedule::polynomial(5e-4, 100, 1000, 1e-5, 1.0);
    CHECK(lr_at(s, 100) == doctest::Approx(5e-4));
    CHECK(lr_at(s, 1000) == doctest::Approx(1e-5));
    CHECK(lr_at(s, 2000) == doctest::Approx(1e-5));
    CHECK(lr_at(s, 550) == doctest::Approx(1e-5 + (5e-4 - 1e-5) * 0.5));
}

TEST_CASE("adam: hand-computed first step on f(x) = x^2/2") {
    ParamTree<float> tree;
    auto p = std::make_shared<Param<float>>(Tens<float>({1, 1}, std::vector<float>{1.0f}));
    tree.named.emplace("x", p);
    Graph<float> g;
    auto* leaf = g.leaf(p.get());
    auto* sq = g.linear(leaf, leaf, nullptr);
    auto* loss = g.scale(sq, 0.5f);
    loss->stored.dims = {1};
    g.backward(loss);
    CHECK(p->grad.v[0] == doctest::Approx(1.0));

    AdamState opt;
    opt.step(tree, 0.1);
    // bias-corrected unit step: m_hat = v_hat = 1, delta = lr / (1 + eps)
    CHECK(std::fabs(p->value.v[0] - 0.9f) < 1e-6f);
    CHECK(opt.has_state("x"));
}

TEST_CASE("adam: zero gradients leave parameters unchanged from fresh state") {
    ParamTree<float> tree;
    auto p = std::make_shared<Param<float>>(Tens<float>({4}, 0.25f));
    tree.named.emplace("w", p);
    p->ensure_grad();  // allocated, all zeros
    AdamState opt;
    opt.step(tree, 0.5);
    for (float v : p->value.v) CHECK(v == 0.25f);
}

TEST_CASE("adam: gradient on a frozen parameter is a contract violation") {
    ParamTree<float> tree;
    auto p = std::make_shared<Param<float>>(Tens<float>({2}, 1.0f));
    tree.named.emplace("w", p);
    p->ensure_grad();
    p->trainable = false;  // freeze after an (illegal) allocation
    AdamState opt;
    CHECK_THROWS_AS(opt.step(tree, 0.1), std::logic_error);
}

static ModelConfig micro_cfg(int vocab = 12) {
    ModelConfig cfg;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.d_model = 16;
    cfg.d_ffn = 32;
    cfg.heads = 2;
    cfg.src_vocab = vocab;
    cfg.tgt_vocab = vocab;
    cfg.max_positions = 16;
    cfg.dropout = 0.1f;
    return cfg;
}

static std::vector<TokenPair> copy_pairs(int n, int vocab, uint64_t seed) {
    Rng rng(seed);
    std::vector<TokenPair> out;
    for (int i = 0; i < n; ++i) {
        int len = 3 + static_cast<int>(rng.below(5));
        std::vector<int> s(len);
        for (int& t : s) t = kNumSpecials + static_cast<int>(rng.below(vocab - kNumSpecials));
        out.push_back({s, s});
    }
    return out;
}

TEST_CASE("early stopping: improving 30 epochs then flat stops at 40, returns epoch 30") {
    Model m = build_model(micro_cfg(), 5);
    auto pairs = copy_pairs(4, 12, 3);
    TrainSettings s;
    s.schedule = Schedule::inverse_sqrt(1e-4, 10);
    s.batch_tokens = 64;
    s.max_epochs = 60;
    s.patience = 10;

    std::vector<float> probe_by_epoch;
    int epoch_counter = 0;
    auto fake_eval = [&](const Model& model, const std::vector<TokenPair>&) {
        ++epoch_counter;
        probe_by_epoch.push_back(model.tree.at("encoder.ln_final.gain")->value.v[0]);
        return epoch_counter <= 30 ? static_cast<double>(epoch_counter) : 30.0;
    };
    TrainResult res = train_translation(m, pairs, pairs, fake_eval, s);
    CHECK(res.history.size() == 40);
    CHECK(res.best_epoch == 30);
    CHECK(res.best_dev == doctest::Approx(30.0));
    CHECK(m.tree.at("encoder.ln_final.gain")->value.v[0] == probe_by_epoch[29]);
    // best-checkpoint contract: returned dev equals the max of history
    double mx = 0;
    for (auto& r : res.history) mx = std::max(mx, r.dev_bleu);
    CHECK(res.best_dev == mx);

    CHECK_THROWS(train_translation(m, pairs, {}, fake_eval, s));  // empty dev set
}

TEST_CASE("training honors the freeze binding bitwise and allocates no state for it") {
    Model m = build_model(micro_cfg(), 6, "X", "Z", "fx", "fz");
    auto frozen = resolve_frozen_set(FreezeStrategy::layer_wise(1), m.config, PivotSide::Decoder);
    apply_freeze(m, frozen);
    std::map<std::string, Tens<float>> before;
    for (const auto& n : frozen) before.emplace(n, m.tree.at(n)->value);

    auto pairs = copy_pairs(6, 12, 4);
    auto batches = make_translation_batches(pairs, 64, m.config.max_positions, Rng(9));
    AdamState opt;
    train_fixed_steps(m, batches, opt, Schedule::inverse_sqrt(5e-4, 20), 0.1, 77, 100);

    for (auto& [n, p] : m.tree.named) {
        if (frozen.count(n)) {
            CHECK(bitwise_equal(before.at(n), p->value));
            CHECK_FALSE(opt.has_state(n));
        }
    }
    CHECK(opt.steps_taken() == 100);
}

TEST_CASE("training reproducibility: same seed, same data, bitwise-equal model") {
    auto pairs = copy_pairs(8, 12, 11);
    auto run = [&]() {
        Model m = build_model(micro_cfg(), 13);
        TrainSettings s;
        s.batch_tokens = 48;
        s.max_epochs = 3;
        s.patience = 10;
        s.seed = 21;
        auto eval = [](const Model&, const std::vector<TokenPair>&) { return 0.0; };
        train_translation(m, pairs, pairs, eval, s);
        return m;
    };
    Model a = run(), b = run();
    for (auto& [n, p] : a.tree.named) CHECK(bitwise_equal(p->value, b.tree.at(n)->value));
}

TEST_CASE("mask_count: deterministic rounding with a floor of one") {
    CHECK(mask_count(100, 0.15) == 15);
    CHECK(mask_count(3, 0.15) == 1);   // floor(0.45 + 0.5) = 0 -> raised to 1
    CHECK(mask_count(10, 0.15) == 2);  // floor(1.5 + 0.5) = 2
    CHECK(mask_count(100, 0.0) == 0);
    Rng rng(5);
    std::vector<int> sent(100);
    for (int i = 0; i < 100; ++i) sent[i] = kNumSpecials + i % 30;
    auto cor = corrupt_tokens(sent, 0.15, rng);
    int masked = 0;
    for (int i = 0; i < 100; ++i) masked += cor[i] == kMask;
    CHECK(masked == 15);
}

TEST_CASE("denoising with mask ratio 0 is a copy task the model solves") {
    ModelConfig cfg = micro_cfg();
    cfg.dropout = 0.0f;
    Model m = build_model(cfg, 31);
    std::vector<std::vector<int>> mono;
    Rng rng(8);
    for (int i = 0; i < 256; ++i) {
        int len = 3 + static_cast<int>(rng.below(5));
        std::vector<int> s(len);
        for (int& t : s) t = kNumSpecials + static_cast<int>(rng.below(7));
        mono.push_back(s);
    }
    TrainSettings s;
    s.schedule = Schedule::inverse_sqrt(3e-3, 40);
    s.label_smoothing = 0.0;
    s.batch_tokens = 128;
    s.seed = 3;
    TrainResult res = pretrain_denoising(m, mono, 0.0, 80, s, DenoisingMode::Bart);
    CHECK(res.history.back().train_loss < 0.1);
}

TEST_CASE("denoising loss decreases; empty corpus rejected") {
    Model m = build_model(micro_cfg(20), 17);
    std::vector<std::vector<int>> mono;
    Rng rng(19);
    for (int i = 0; i < 300; ++i) {
        int len = 4 + static_cast<int>(rng.below(8));
        std::vector<int> s(len);
        for (int& t : s) t = kNumSpecials + static_cast<int>(rng.below(15));
        mono.push_back(s);
    }
    TrainSettings s;
    s.schedule = Schedule::polynomial(5e-4, 50, 600, 0.0, 1.0);
    s.seed = 7;
    TrainResult res = pretrain_denoising(m, mono, 0.15, 6, s);
    CHECK(res.history.back().train_loss < res.history.front().train_loss);
    CHECK_THROWS(pretrain_denoising(m, {}, 0.15, 1, s));
}

TEST_CASE("adapt_embeddings: frozen body is bitwise inherited, embeddings move") {
    ModelConfig cfg = micro_cfg(14);
    Model plm = build_model(cfg, 41, "Z", "Z", "fp_Z", "fp_Z");
    std::vector<std::vector<int>> mono;
    Rng rng(6);
    for (int i = 0; i < 80; ++i) {
        int len = 3 + static_cast<int>(rng.below(6));
        std::vector<int> s(len);
        for (int& t : s) t = kNumSpecials + static_cast<int>(rng.below(9));
        mono.push_back(s);
    }
    TrainSettings s;
    s.batch_tokens = 96;
    s.seed = 5;
    int new_vocab = 18;
    Model adapted = adapt_embeddings(plm, mono, new_vocab, "X", "fp_X", 0.15, 3, s, 777);

    CHECK(adapted.config.src_vocab == new_vocab);
    CHECK(adapted.src_lang == "X");
    for (auto& [n, p] : adapted.tree.named) {
        if (n == "encoder.embed.tokens" || n == "decoder.embed.tokens") continue;
        CHECK(bitwise_equal(p->value, plm.tree.at(n)->value));
    }
    // embeddings differ from their fresh random init (training moved them)
    ParamTree<float> fresh = build_tree(adapted.config, 777);
    CHECK_FALSE(bitwise_equal(adapted.tree.at("encoder.embed.tokens")->value,
                              fresh.at("encoder.embed.tokens")->value));
    CHECK_THROWS(adapt_embeddings(plm, mono, 3, "X", "fp_X", 0.15, 1, s, 1));
}

TEST_CASE("adapted PLM beats a random model on held-out denoising loss") {
    ModelConfig cfg = micro_cfg(14);
    cfg.dropout = 0.0f;
    Model plm = build_model(cfg, 43, "Z", "Z", "fp_Z", "fp_Z");
    Rng rng(61);
    auto draw_corpus = [&](int n, int vocab) {
        std::vector<std::vector<int>> out;
        for (int i = 0; i < n; ++i) {
            int len = 4 + static_cast<int>(rng.below(6));
            std::vector<int> s(len);
            for (int& t : s) t = kNumSpecials + static_cast<int>(rng.below(vocab - kNumSpecials));
            out.push_back(s);
        }
        return out;
    };
    // give the pivot PLM some training so its body is meaningful
    TrainSettings ps;
    ps.seed = 11;
    ps.batch_tokens = 128;
    pretrain_denoising(plm, draw_corpus(200, 14), 0.15, 4, ps);

    int new_vocab = 14;
    auto xmono = draw_corpus(200, new_vocab);
    TrainSettings as;
    as.seed = 12;
    as.batch_tokens = 128;
    Model adapted = adapt_embeddings(plm, xmono, new_vocab, "X", "fp_X", 0.15, 4, as, 55);
    Model random_model = build_model(adapted.config, 56, "X", "X", "fp_X", "fp_X");

    auto heldout = draw_corpus(60, new_vocab);
    auto denoise_loss = [&](const Model& m) {
        Rng crng(999);
        std::vector<TokenPair> pairs;
        for (const auto& sent : heldout) pairs.push_back({corrupt_tokens(sent, 0.15, crng), sent});
        TranslationBatch b = build_translation_batch(pairs, m.config.max_positions);
        Graph<float> g;
        ForwardOpts<float> fo;  // eval mode
        Node<float>* loss = translation_loss(g, m.tree, m.config, b, fo);
        return loss->value().v[0];
    };
    CHECK(denoise_loss(adapted) < denoise_loss(random_model));
}
