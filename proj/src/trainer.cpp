#include "forge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace forge {

void write_history(const std::string& path, const std::vector<EpochRecord>& history) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write history " + path);
    for (const auto& r : history) {
        char buf[128];
        if (std::isnan(r.dev_bleu))
            std::snprintf(buf, sizeof(buf), "%d\t%.6f\t-\t%.8g\n", r.epoch, r.train_loss, r.lr);
        else
            std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.4f\t%.8g\n", r.epoch, r.train_loss,
                          r.dev_bleu, r.lr);
        f << buf;
    }
}

std::vector<TranslationBatch> make_translation_batches(const std::vector<TokenPair>& pairs,
                                                       int batch_tokens, int max_positions,
                                                       Rng rng) {
    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<TranslationBatch> out;
    std::vector<TokenPair> cur;
    int cur_tokens = 0;
    for (size_t idx : order) {
        int tl = static_cast<int>(pairs[idx].tgt.size()) + 1;
        if (!cur.empty() && cur_tokens + tl > batch_tokens) {
            out.push_back(build_translation_batch(cur, max_positions));
            cur.clear();
            cur_tokens = 0;
        }
        cur.push_back(pairs[idx]);
        cur_tokens += tl;
    }
    if (!cur.empty()) out.push_back(build_translation_batch(cur, max_positions));
    return out;
}

double run_translation_steps(Model& m, const std::vector<TranslationBatch>& batches,
                             AdamState& opt, const Schedule& sched, double label_smoothing,
                             Rng& dropout_rng, int64_t& global_step) {
    double loss_sum = 0.0;
    int64_t tokens = 0;
    for (const TranslationBatch& b : batches) {
        Graph<float> g;
        ForwardOpts<float> fo;
        fo.train = m.config.dropout > 0.0f;
        fo.rng = &dropout_rng;
        fo.label_smoothing = static_cast<float>(label_smoothing);
        Node<float>* loss = translation_loss(g, m.tree, m.config, b, fo);
        g.backward(loss);
        opt.step(m.tree, lr_at(sched, ++global_step));
        loss_sum += static_cast<double>(loss->value().v[0]) * b.target_tokens;
        tokens += b.target_tokens;
    }
    return tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
}

void train_fixed_steps(Model& m, const std::vector<TranslationBatch>& batches, AdamState& opt,
                       const Schedule& sched, double label_smoothing, uint64_t seed, int steps) {
    if (batches.empty()) throw std::invalid_argument("train_fixed_steps: no batches");
    Rng dropout_rng(seed);
    int64_t global_step = opt.steps_taken();
    size_t i = 0;
    for (int s = 0; s < steps; ++s, ++i) {
        const TranslationBatch& b = batches[i % batches.size()];
        Graph<float> g;
        ForwardOpts<float> fo;
        fo.train = m.config.dropout > 0.0f;
        fo.rng = &dropout_rng;
        fo.label_smoothing = static_cast<float>(label_smoothing);
        Node<float>* loss = translation_loss(g, m.tree, m.config, b, fo);
        g.backward(loss);
        opt.step(m.tree, lr_at(sched, ++global_step));
    }
}

namespace {

ParamTree<float> snapshot_tree(const ParamTree<float>& tree) { return tree.cast<float>(); }

}  // namespace

TrainResult train_translation(Model& m, const std::vector<TokenPair>& train_pairs,
                              const std::vector<TokenPair>& dev_pairs, const DevEvaluator& dev_eval,
                              const TrainSettings& s) {
    if (train_pairs.empty()) throw std::invalid_argument("train_translation: empty training corpus");
    if (dev_pairs.empty()) throw std::invalid_argument("train_translation: empty dev set");
    TrainResult res;
    AdamState opt(s.adam);
    int64_t global_step = 0;
    ParamTree<float> best;
    Rng root(s.seed);
    for (int epoch = 1; epoch <= s.max_epochs; ++epoch) {
        Rng erng = root.fork(static_cast<uint64_t>(epoch));
        auto batches =
            make_translation_batches(train_pairs, s.batch_tokens, m.config.max_positions, erng);
        Rng drng = erng.fork(0xd20);
        double loss =
            run_translation_steps(m, batches, opt, s.schedule, s.label_smoothing, drng, global_step);
        double dev = dev_eval(m, dev_pairs);
        res.history.push_back({epoch, loss, dev, lr_at(s.schedule, global_step)});
        if (dev > res.best_dev) {
            res.best_dev = dev;
            res.best_epoch = epoch;
            best = snapshot_tree(m.tree);
        } else if (epoch - res.best_epoch >= s.patience) {
            break;
        }
    }
    if (res.best_epoch > 0) m.tree = std::move(best);
    return res;
}

int mask_count(int len, double ratio) {
    if (ratio <= 0.0) return 0;
    int c = static_cast<int>(std::floor(ratio * len + 0.5));
    return std::max(1, c);
}

std::vector<int> corrupt_tokens(const std::vector<int>& tokens, double mask_ratio, Rng& rng) {
    std::vector<int> out = tokens;
    int n = static_cast<int>(tokens.size());
    int want = mask_count(n, mask_ratio);
    if (want <= 0) return out;
    // partial Fisher-Yates over position indices
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < want; ++i) {
        int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
        out[idx[i]] = kMask;
    }
    return out;
}

namespace {

EncoderBatch build_mlm_batch(const std::vector<std::pair<std::vector<int>, std::vector<int>>>& rows,
                             int max_positions) {
    // rows: (corrupted, original)
    EncoderBatch b;
    b.sentences = static_cast<int>(rows.size());
    for (const auto& [cor, orig] : rows) {
        int sl = static_cast<int>(cor.size()) + 1;
        if (sl > max_positions) throw std::invalid_argument("sequence longer than max_positions");
        int s0 = static_cast<int>(b.tokens.size());
        for (size_t i = 0; i < cor.size(); ++i) {
            b.tokens.push_back(cor[i]);
            b.targets.push_back(cor[i] == kMask ? orig[i] : kPad);
        }
        b.tokens.push_back(kEos);
        b.targets.push_back(kPad);
        for (int i = 0; i < sl; ++i) b.pos.push_back(i);
        b.spans.push_back({s0, s0 + sl, s0, s0 + sl});
    }
    return b;
}

}  // namespace

TrainResult pretrain_denoising(Model& m, const std::vector<std::vector<int>>& mono,
                               double mask_ratio, int epochs, const TrainSettings& s,
                               DenoisingMode mode) {
    if (mono.empty()) throw std::invalid_argument("pretrain_denoising: empty corpus");
    if (mask_ratio < 0.0 || mask_ratio >= 1.0)
        throw std::invalid_argument("pretrain_denoising: mask ratio out of range");
    if (mode == DenoisingMode::MaskedLm && mask_ratio == 0.0)
        throw std::invalid_argument("masked-LM pretraining needs mask ratio > 0");
    if (mode == DenoisingMode::MaskedLm && m.config.dec_layers != 0)
        throw std::invalid_argument("masked-LM mode expects an encoder-only model");
    if (mode == DenoisingMode::Bart && m.config.dec_layers == 0)
        throw std::invalid_argument("denoising seq2seq mode expects a decoder");

    TrainResult res;
    AdamState opt(s.adam);
    int64_t global_step = 0;
    Rng root(s.seed);
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        Rng erng = root.fork(static_cast<uint64_t>(epoch));
        std::vector<size_t> order(mono.size());
        std::iota(order.begin(), order.end(), 0);
        erng.shuffle(order);
        Rng drng = erng.fork(0xd20);

        double loss_sum = 0.0;
        int64_t tokens = 0;
        size_t i = 0;
        while (i < order.size()) {
            // pack by token count
            int cur_tokens = 0;
            std::vector<TokenPair> pairs;
            std::vector<std::pair<std::vector<int>, std::vector<int>>> rows;
            while (i < order.size()) {
                const std::vector<int>& sent = mono[order[i]];
                int tl = static_cast<int>(sent.size()) + 1;
                if (!(pairs.empty() && rows.empty()) && cur_tokens + tl > s.batch_tokens) break;
                std::vector<int> cor = corrupt_tokens(sent, mask_ratio, erng);
                if (mode == DenoisingMode::Bart)
                    pairs.push_back({std::move(cor), sent});
                else
                    rows.push_back({std::move(cor), sent});
                cur_tokens += tl;
                ++i;
            }
            Graph<float> g;
            ForwardOpts<float> fo;
            fo.train = m.config.dropout > 0.0f;
            fo.rng = &drng;
            fo.label_smoothing = static_cast<float>(s.label_smoothing);
            Node<float>* loss = nullptr;
            int batch_tokens = 0;
            if (mode == DenoisingMode::Bart) {
                TranslationBatch b = build_translation_batch(pairs, m.config.max_positions);
                loss = translation_loss(g, m.tree, m.config, b, fo);
                batch_tokens = b.target_tokens;
            } else {
                EncoderBatch b = build_mlm_batch(rows, m.config.max_positions);
                loss = masked_lm_loss(g, m.tree, m.config, b, fo);
                for (int t : b.targets) batch_tokens += t != kPad;
            }
            g.backward(loss);
            opt.step(m.tree, lr_at(s.schedule, ++global_step));
            loss_sum += static_cast<double>(loss->value().v[0]) * batch_tokens;
            tokens += batch_tokens;
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = tokens ? loss_sum / static_cast<double>(tokens) : 0.0;
        rec.lr = lr_at(s.schedule, global_step);
        res.history.push_back(rec);
    }
    return res;
}

Model adapt_embeddings(const Model& pivot_plm, const std::vector<std::vector<int>>& mono,
                       int new_vocab_size, const std::string& new_lang, const std::string& new_fp,
                       double mask_ratio, int epochs, const TrainSettings& s, uint64_t init_seed) {
    if (new_vocab_size < kNumSpecials)
        throw std::invalid_argument("adapt_embeddings: vocab smaller than reserved specials");
    ModelConfig cfg = pivot_plm.config;
    cfg.src_vocab = new_vocab_size;
    if (cfg.dec_layers > 0) cfg.tgt_vocab = new_vocab_size;
    Model adapted = build_model(cfg, init_seed, new_lang, cfg.dec_layers > 0 ? new_lang : "",
                                new_fp, cfg.dec_layers > 0 ? new_fp : "");
    GraftPlan plan;
    GraftMapping enc{&pivot_plm, "encoder.", "encoder.", {"encoder.embed.tokens"}};
    plan.mappings.push_back(enc);
    if (cfg.dec_layers > 0)
        plan.mappings.push_back({&pivot_plm, "decoder.", "decoder.", {"decoder.embed.tokens"}});
    plan.policy = GraftPlan::MissingPolicy::Error;
    graft(adapted, plan);

    std::set<std::string> frozen;
    for (const auto& n : canonical_names(cfg))
        if (n != "encoder.embed.tokens" && n != "decoder.embed.tokens") frozen.insert(n);
    apply_freeze(adapted, frozen);

    pretrain_denoising(adapted, mono, mask_ratio, epochs, s,
                       cfg.dec_layers > 0 ? DenoisingMode::Bart : DenoisingMode::MaskedLm);
    return adapted;
}

}  // namespace forge
