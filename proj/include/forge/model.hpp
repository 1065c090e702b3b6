#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "forge/graph.hpp"
#include "forge/rng.hpp"
#include "forge/tensor.hpp"

namespace forge {

// Reserved indices, identical in every vocabulary so embeddings can be
// grafted across languages without remapping specials.
enum SpecialToken : int { kBos = 0, kEos = 1, kPad = 2, kMask = 3, kUnk = 4 };
constexpr int kNumSpecials = 5;

struct ModelConfig {
    int enc_layers = 4;
    int dec_layers = 4;
    int d_model = 32;
    int d_ffn = 64;
    int heads = 4;
    int src_vocab = 0;
    int tgt_vocab = 0;
    int max_positions = 96;
    float dropout = 0.1f;
    bool tie_decoder_embeddings = true;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL);
std::string fnv1a64_hex(uint64_t h);
// Fingerprint of a vocabulary: FNV-1a over the word list, one word per line.
std::string vocab_fingerprint(const std::vector<std::string>& words);

// Canonical parameter names for a config, sorted ascending. When embeddings
// are tied, decoder.output_projection is an alias of decoder.embed.tokens and
// is not part of the canonical set.
std::vector<std::string> canonical_names(const ModelConfig& cfg);
// Expected dims for one canonical name; throws on a name outside the grammar.
std::vector<int> canonical_dims(const ModelConfig& cfg, const std::string& name);
// Closed-form total parameter count implied by the config.
size_t parameter_count(const ModelConfig& cfg);

template <typename T>
struct ParamTree {
    std::map<std::string, std::shared_ptr<Param<T>>> named;

    Param<T>* at(const std::string& name) const {
        auto it = named.find(name);
        if (it == named.end()) throw std::out_of_range("no parameter named " + name);
        return it->second.get();
    }
    bool has(const std::string& name) const { return named.count(name) != 0; }

    template <typename U>
    ParamTree<U> cast() const {
        ParamTree<U> out;
        std::map<Param<T>*, std::shared_ptr<Param<U>>> seen;  // preserve ties
        for (const auto& [name, p] : named) {
            auto it = seen.find(p.get());
            if (it == seen.end()) {
                auto q = std::make_shared<Param<U>>(p->value.template cast<U>(), p->trainable);
                seen.emplace(p.get(), q);
                out.named.emplace(name, q);
            } else {
                out.named.emplace(name, it->second);
            }
        }
        return out;
    }
};

// A model plus the metadata needed for checkpointing and grafting.
struct Model {
    ModelConfig config;
    ParamTree<float> tree;
    std::string src_lang, tgt_lang;
    std::string src_vocab_fp, tgt_vocab_fp;

    Param<float>* output_projection() const {
        if (config.tie_decoder_embeddings || config.dec_layers == 0)
            return tree.at(config.dec_layers == 0 ? "encoder.embed.tokens"
                                                  : "decoder.embed.tokens");
        return tree.at("decoder.output_projection");
    }
};

// Seeded init values for one canonical tensor (also used to re-randomize
// parameters a graft could not source).
void init_param_tensor(Tens<float>& t, const ModelConfig& cfg, const std::string& name, Rng rng);

// Deterministic seeded initialization; every tensor gets its own substream
// keyed by name so init is independent of map iteration details.
ParamTree<float> build_tree(const ModelConfig& cfg, uint64_t seed);
Model build_model(const ModelConfig& cfg, uint64_t seed, std::string src_lang = "",
                  std::string tgt_lang = "", std::string src_fp = "", std::string tgt_fp = "");

// ---- ragged batches ----

struct TokenPair {
    std::vector<int> src, tgt;
};

struct TranslationBatch {
    std::vector<int> src_tokens, src_pos;
    std::vector<AttnSpan> enc_spans;
    std::vector<int> dec_in, dec_pos;
    std::vector<int> targets;  // pad_index rows carry no loss
    std::vector<AttnSpan> dec_spans, cross_spans;
    int target_tokens = 0;
    int sentences = 0;
};

// src gets EOS appended; decoder input is BOS + tgt, target is tgt + EOS.
TranslationBatch build_translation_batch(const std::vector<TokenPair>& pairs, int max_positions);

struct EncoderBatch {
    std::vector<int> tokens, pos;
    std::vector<AttnSpan> spans;
    std::vector<int> targets;  // for masked-LM; pad_index where no loss
    int sentences = 0;
};

// ---- forward graph builders (templated so checks can run in 64-bit) ----

template <typename T>
struct ForwardOpts {
    bool train = false;   // enables dropout
    Rng* rng = nullptr;   // required when train
    T label_smoothing = T(0);
};

template <typename T>
class TransformerGraph {
public:
    TransformerGraph(Graph<T>& g, const ParamTree<T>& tree, const ModelConfig& cfg,
                     const ForwardOpts<T>& opts)
        : g_(g), tree_(tree), cfg_(cfg), opts_(opts) {}

    Node<T>* leaf(const std::string& name) { return g_.leaf(tree_.at(name)); }

    Node<T>* embed(const std::string& side, const std::vector<int>& tokens,
                   const std::vector<int>& pos) {
        Node<T>* tok = g_.gather_rows(leaf(side + ".embed.tokens"), tokens);
        tok = g_.scale(tok, std::sqrt(T(cfg_.d_model)));
        Node<T>* p = g_.gather_rows(leaf(side + ".embed.positions"), pos);
        return drop(g_.add(tok, p));
    }

    Node<T>* encoder(const std::vector<int>& tokens, const std::vector<int>& pos,
                     const std::vector<AttnSpan>& spans,
                     const std::vector<uint8_t>* key_valid = nullptr) {
        Node<T>* x = embed("encoder", tokens, pos);
        for (int i = 0; i < cfg_.enc_layers; ++i) {
            std::string lp = "encoder.layers." + std::to_string(i) + ".";
            x = attn_block(x, x, lp + "self_attn", lp + "ln_self", spans, false, key_valid);
            x = ffn_block(x, lp);
        }
        return final_norm(x, "encoder");
    }

    Node<T>* decoder(const std::vector<int>& tokens, const std::vector<int>& pos,
                     const std::vector<AttnSpan>& self_spans, Node<T>* enc_out,
                     const std::vector<AttnSpan>& cross_spans,
                     const std::vector<uint8_t>* enc_key_valid = nullptr) {
        Node<T>* x = embed("decoder", tokens, pos);
        for (int i = 0; i < cfg_.dec_layers; ++i) {
            std::string lp = "decoder.layers." + std::to_string(i) + ".";
            x = attn_block(x, x, lp + "self_attn", lp + "ln_self", self_spans, true, nullptr);
            x = attn_block(x, enc_out, lp + "cross_attn", lp + "ln_cross", cross_spans, false,
                           enc_key_valid);
            x = ffn_block(x, lp);
        }
        return final_norm(x, "decoder");
    }

    // Projection onto the target vocabulary (tied to the decoder token table
    // by default). For encoder-only models the head ties to the encoder table.
    Node<T>* output_logits(Node<T>* x) {
        std::string name;
        if (cfg_.dec_layers == 0)
            name = "encoder.embed.tokens";
        else if (cfg_.tie_decoder_embeddings)
            name = "decoder.embed.tokens";
        else
            name = "decoder.output_projection";
        return g_.linear(x, leaf(name), nullptr);
    }

    Node<T>* loss(Node<T>* logits, const std::vector<int>& targets) {
        return g_.cross_entropy(logits, targets, opts_.label_smoothing, kPad);
    }

private:
    Node<T>* drop(Node<T>* x) {
        if (!opts_.train || cfg_.dropout <= 0.0f) return x;
        return g_.dropout(x, cfg_.dropout, *opts_.rng);
    }

    Node<T>* attn_block(Node<T>* x, Node<T>* mem, const std::string& attn,
                        const std::string& ln, const std::vector<AttnSpan>& spans, bool causal,
                        const std::vector<uint8_t>* key_valid) {
        Node<T>* h = g_.layer_norm(x, leaf(ln + ".gain"), leaf(ln + ".bias"), T(1e-5));
        Node<T>* kv_in = (mem == x) ? h : mem;
        Node<T>* q = g_.linear(h, leaf(attn + ".q.weight"), leaf(attn + ".q.bias"));
        Node<T>* k = g_.linear(kv_in, leaf(attn + ".k.weight"), leaf(attn + ".k.bias"));
        Node<T>* v = g_.linear(kv_in, leaf(attn + ".v.weight"), leaf(attn + ".v.bias"));
        Node<T>* a = g_.attention(q, k, v, cfg_.heads, spans, causal, key_valid);
        Node<T>* o = g_.linear(a, leaf(attn + ".o.weight"), leaf(attn + ".o.bias"));
        return g_.add(x, drop(o));
    }

    Node<T>* ffn_block(Node<T>* x, const std::string& lp) {
        Node<T>* h = g_.layer_norm(x, leaf(lp + "ln_ffn.gain"), leaf(lp + "ln_ffn.bias"), T(1e-5));
        Node<T>* f = g_.linear(h, leaf(lp + "ffn.w1.weight"), leaf(lp + "ffn.w1.bias"));
        f = g_.relu(f);
        f = g_.linear(f, leaf(lp + "ffn.w2.weight"), leaf(lp + "ffn.w2.bias"));
        return g_.add(x, drop(f));
    }

    Node<T>* final_norm(Node<T>* x, const std::string& side) {
        return g_.layer_norm(x, leaf(side + ".ln_final.gain"), leaf(side + ".ln_final.bias"),
                             T(1e-5));
    }

    Graph<T>& g_;
    const ParamTree<T>& tree_;
    const ModelConfig& cfg_;
    ForwardOpts<T> opts_;
};

// Full translation loss over a ragged batch.
template <typename T>
Node<T>* translation_loss(Graph<T>& g, const ParamTree<T>& tree, const ModelConfig& cfg,
                          const TranslationBatch& b, const ForwardOpts<T>& opts) {
    TransformerGraph<T> tg(g, tree, cfg, opts);
    Node<T>* enc = tg.encoder(b.src_tokens, b.src_pos, b.enc_spans);
    Node<T>* dec = tg.decoder(b.dec_in, b.dec_pos, b.dec_spans, enc, b.cross_spans);
    return tg.loss(tg.output_logits(dec), b.targets);
}

// Masked-LM loss for encoder-only pretraining.
template <typename T>
Node<T>* masked_lm_loss(Graph<T>& g, const ParamTree<T>& tree, const ModelConfig& cfg,
                        const EncoderBatch& b, const ForwardOpts<T>& opts) {
    TransformerGraph<T> tg(g, tree, cfg, opts);
    Node<T>* enc = tg.encoder(b.tokens, b.pos, b.spans);
    return tg.loss(tg.output_logits(enc), b.targets);
}

// ---- public eval-mode operations ----

// Encoder states for one sentence; pad_mask marks positions to exclude from
// attention (true = padding). Tokens are used exactly as given.
Tens<float> encode(const Model& m, const std::vector<int>& src_tokens,
                   const std::vector<uint8_t>& pad_mask = {});

// Logits for every position of a BOS-led prefix given encoder states
// (for fast incremental decoding see decode.hpp).
Tens<float> decode_logits(const Model& m, const Tens<float>& encoder_states,
                          const std::vector<int>& tgt_prefix);

}  // namespace forge
