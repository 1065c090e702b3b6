#include "forge/model.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace forge {

void ModelConfig::validate() const {
    if (enc_layers < 0 || dec_layers < 0) throw std::invalid_argument("negative layer count");
    if (enc_layers == 0) throw std::invalid_argument("encoder must have at least one layer");
    if (d_model <= 0 || d_ffn <= 0 || heads <= 0) throw std::invalid_argument("invalid dimensions");
    if (d_model % heads != 0) throw std::invalid_argument("d_model not divisible by heads");
    if (src_vocab < kNumSpecials) throw std::invalid_argument("src_vocab smaller than reserved specials");
    if (dec_layers > 0 && tgt_vocab < kNumSpecials)
        throw std::invalid_argument("tgt_vocab smaller than reserved specials");
    if (max_positions < 2) throw std::invalid_argument("max_positions too small");
    if (dropout < 0.0f || dropout >= 1.0f) throw std::invalid_argument("dropout out of range");
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string vocab_fingerprint(const std::vector<std::string>& words) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& w : words) {
        h = fnv1a64(w.data(), w.size(), h);
        h = fnv1a64("\n", 1, h);
    }
    return fnv1a64_hex(h);
}

namespace {

void append_layer_names(std::vector<std::string>& out, const std::string& side, int layer,
                        bool with_cross) {
    std::string lp = side + ".layers." + std::to_string(layer) + ".";
    for (const char* blk : {"self_attn", "cross_attn"}) {
        if (!with_cross && std::string(blk) == "cross_attn") continue;
        for (const char* proj : {"q", "k", "v", "o"})
            for (const char* leaf : {"weight", "bias"})
                out.push_back(lp + blk + "." + proj + "." + leaf);
    }
    for (const char* w : {"w1", "w2"})
        for (const char* leaf : {"weight", "bias"}) out.push_back(lp + "ffn." + w + "." + leaf);
    std::vector<std::string> lns = {"ln_self", "ln_ffn"};
    if (with_cross) lns.push_back("ln_cross");
    for (const auto& ln : lns)
        for (const char* leaf : {"gain", "bias"}) out.push_back(lp + ln + "." + leaf);
}

}  // namespace

std::vector<std::string> canonical_names(const ModelConfig& cfg) {
    std::vector<std::string> out;
    out.push_back("encoder.embed.tokens");
    out.push_back("encoder.embed.positions");
    for (int i = 0; i < cfg.enc_layers; ++i) append_layer_names(out, "encoder", i, false);
    out.push_back("encoder.ln_final.gain");
    out.push_back("encoder.ln_final.bias");
    if (cfg.dec_layers > 0) {
        out.push_back("decoder.embed.tokens");
        out.push_back("decoder.embed.positions");
        for (int i = 0; i < cfg.dec_layers; ++i) append_layer_names(out, "decoder", i, true);
        out.push_back("decoder.ln_final.gain");
        out.push_back("decoder.ln_final.bias");
        if (!cfg.tie_decoder_embeddings) out.push_back("decoder.output_projection");
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> canonical_dims(const ModelConfig& cfg, const std::string& name) {
    auto ends_with = [&](const std::string& sfx) {
        return name.size() >= sfx.size() && name.compare(name.size() - sfx.size(), sfx.size(), sfx) == 0;
    };
    bool enc = name.rfind("encoder.", 0) == 0;
    if (name == "decoder.output_projection") return {cfg.tgt_vocab, cfg.d_model};
    if (ends_with("embed.tokens")) return {enc ? cfg.src_vocab : cfg.tgt_vocab, cfg.d_model};
    if (ends_with("embed.positions")) return {cfg.max_positions, cfg.d_model};
    if (name.find(".ffn.w1.") != std::string::npos)
        return ends_with("weight") ? std::vector<int>{cfg.d_ffn, cfg.d_model}
                                   : std::vector<int>{cfg.d_ffn};
    if (name.find(".ffn.w2.") != std::string::npos)
        return ends_with("weight") ? std::vector<int>{cfg.d_model, cfg.d_ffn}
                                   : std::vector<int>{cfg.d_model};
    if (name.find("_attn.") != std::string::npos)
        return ends_with("weight") ? std::vector<int>{cfg.d_model, cfg.d_model}
                                   : std::vector<int>{cfg.d_model};
    if (name.find(".ln_") != std::string::npos) return {cfg.d_model};
    throw std::invalid_argument("name outside the canonical grammar: " + name);
}

size_t parameter_count(const ModelConfig& cfg) {
    size_t d = cfg.d_model, f = cfg.d_ffn;
    size_t attn = 4 * (d * d + d);
    size_t ffn = f * d + f + d * f + d;
    size_t ln = 2 * d;
    size_t enc_layer = attn + ffn + 2 * ln;
    size_t dec_layer = 2 * attn + ffn + 3 * ln;
    size_t total = static_cast<size_t>(cfg.src_vocab) * d + static_cast<size_t>(cfg.max_positions) * d +
                   static_cast<size_t>(cfg.enc_layers) * enc_layer + ln;
    if (cfg.dec_layers > 0) {
        total += static_cast<size_t>(cfg.tgt_vocab) * d + static_cast<size_t>(cfg.max_positions) * d +
                 static_cast<size_t>(cfg.dec_layers) * dec_layer + ln;
        if (!cfg.tie_decoder_embeddings) total += static_cast<size_t>(cfg.tgt_vocab) * d;
    }
    return total;
}

void init_param_tensor(Tens<float>& t, const ModelConfig& cfg, const std::string& name, Rng rng) {
    const std::vector<int>& dims = t.dims;
    bool is_gain = name.find(".ln_") != std::string::npos && name.size() >= 4 &&
                   name.compare(name.size() - 4, 4, "gain") == 0;
    bool is_bias_like = name.find(".bias") != std::string::npos ||
                        (name.find(".ln_") != std::string::npos && !is_gain);
    if (is_gain) {
        std::fill(t.v.begin(), t.v.end(), 1.0f);
    } else if (is_bias_like) {
        std::fill(t.v.begin(), t.v.end(), 0.0f);
    } else if (name.find("embed.tokens") != std::string::npos ||
               name == "decoder.output_projection") {
        float std_dev = 1.0f / std::sqrt(static_cast<float>(cfg.d_model));
        for (float& x : t.v) x = static_cast<float>(rng.normal(0.0, std_dev));
    } else if (name.find("embed.positions") != std::string::npos) {
        for (float& x : t.v) x = static_cast<float>(rng.normal(0.0, 0.02));
    } else {
        // xavier-uniform for projection weights
        double limit = std::sqrt(6.0 / (dims[0] + dims[1]));
        for (float& x : t.v) x = static_cast<float>((rng.uniform() * 2.0 - 1.0) * limit);
    }
}

ParamTree<float> build_tree(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ParamTree<float> tree;
    Rng root(seed);
    for (const std::string& name : canonical_names(cfg)) {
        Tens<float> t(canonical_dims(cfg, name));
        init_param_tensor(t, cfg, name, root.fork(fnv1a64(name.data(), name.size())));
        tree.named.emplace(name, std::make_shared<Param<float>>(std::move(t)));
    }
    return tree;
}

Model build_model(const ModelConfig& cfg, uint64_t seed, std::string src_lang,
                  std::string tgt_lang, std::string src_fp, std::string tgt_fp) {
    Model m;
    m.config = cfg;
    m.tree = build_tree(cfg, seed);
    m.src_lang = std::move(src_lang);
    m.tgt_lang = std::move(tgt_lang);
    m.src_vocab_fp = std::move(src_fp);
    m.tgt_vocab_fp = std::move(tgt_fp);
    return m;
}

TranslationBatch build_translation_batch(const std::vector<TokenPair>& pairs, int max_positions) {
    TranslationBatch b;
    b.sentences = static_cast<int>(pairs.size());
    for (const TokenPair& p : pairs) {
        int sl = static_cast<int>(p.src.size()) + 1;  // + EOS
        int tl = static_cast<int>(p.tgt.size()) + 1;  // BOS-led input, EOS-capped target
        if (sl > max_positions || tl > max_positions)
            throw std::invalid_argument("sequence longer than max_positions");
        int s0 = static_cast<int>(b.src_tokens.size());
        int t0 = static_cast<int>(b.dec_in.size());
        for (int tok : p.src) b.src_tokens.push_back(tok);
        b.src_tokens.push_back(kEos);
        for (int i = 0; i < sl; ++i) b.src_pos.push_back(i);
        b.dec_in.push_back(kBos);
        for (int tok : p.tgt) b.dec_in.push_back(tok);
        for (int i = 0; i < tl; ++i) b.dec_pos.push_back(i);
        for (int tok : p.tgt) b.targets.push_back(tok);
        b.targets.push_back(kEos);
        b.enc_spans.push_back({s0, s0 + sl, s0, s0 + sl});
        b.dec_spans.push_back({t0, t0 + tl, t0, t0 + tl});
        b.cross_spans.push_back({t0, t0 + tl, s0, s0 + sl});
        b.target_tokens += tl;
    }
    return b;
}

Tens<float> encode(const Model& m, const std::vector<int>& src_tokens,
                   const std::vector<uint8_t>& pad_mask) {
    if (static_cast<int>(src_tokens.size()) > m.config.max_positions)
        throw std::invalid_argument("sequence longer than max_positions");
    if (src_tokens.empty()) throw std::invalid_argument("encode: empty input");
    for (int t : src_tokens)
        if (t < 0 || t >= m.config.src_vocab) throw std::out_of_range("encode: token id out of range");
    if (!pad_mask.empty() && pad_mask.size() != src_tokens.size())
        throw std::invalid_argument("encode: pad mask length mismatch");
    int n = static_cast<int>(src_tokens.size());
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[i] = i;
    std::vector<AttnSpan> spans{{0, n, 0, n}};
    std::vector<uint8_t> valid;
    const std::vector<uint8_t>* vp = nullptr;
    if (!pad_mask.empty()) {
        valid.resize(n);
        for (int i = 0; i < n; ++i) valid[i] = pad_mask[i] ? 0 : 1;
        vp = &valid;
    }
    Graph<float> g;
    ForwardOpts<float> opts;
    TransformerGraph<float> tg(g, m.tree, m.config, opts);
    return tg.encoder(src_tokens, pos, spans, vp)->value();
}

Tens<float> decode_logits(const Model& m, const Tens<float>& encoder_states,
                          const std::vector<int>& tgt_prefix) {
    if (m.config.dec_layers == 0) throw std::logic_error("decode_logits: encoder-only model");
    if (tgt_prefix.empty()) throw std::invalid_argument("decode_logits: empty prefix");
    if (tgt_prefix[0] != kBos) throw std::invalid_argument("decode_logits: prefix must start with BOS");
    if (static_cast<int>(tgt_prefix.size()) > m.config.max_positions)
        throw std::invalid_argument("sequence longer than max_positions");
    if (encoder_states.dims.size() != 2 || encoder_states.dims[1] != m.config.d_model)
        throw std::invalid_argument("decode_logits: bad encoder state shape");
    int n = static_cast<int>(tgt_prefix.size());
    int sn = encoder_states.dims[0];
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[i] = i;
    Graph<float> g;
    ForwardOpts<float> opts;
    TransformerGraph<float> tg(g, m.tree, m.config, opts);
    Node<float>* enc = g.constant(encoder_states);
    std::vector<AttnSpan> self_spans{{0, n, 0, n}};
    std::vector<AttnSpan> cross_spans{{0, n, 0, sn}};
    Node<float>* dec = tg.decoder(tgt_prefix, pos, self_spans, enc, cross_spans);
    return tg.output_logits(dec)->value();
}

}  // namespace forge
