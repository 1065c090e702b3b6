#pragma once

// Hand-enumerated golden name lists for a 2+2-layer tied model. These are
// written out literally, independent of the implementation's name generator.

#include <set>
#include <string>
#include <vector>

namespace forge::testing {

inline const std::vector<std::string> kEncEmbed = {
    "encoder.embed.tokens",
    "encoder.embed.positions",
};

inline const std::vector<std::string> kDecEmbed = {
    "decoder.embed.tokens",
    "decoder.embed.positions",
};

inline const std::vector<std::string> kEncLayer0 = {
    "encoder.layers.0.self_attn.q.weight", "encoder.layers.0.self_attn.q.bias",
    "encoder.layers.0.self_attn.k.weight", "encoder.layers.0.self_attn.k.bias",
    "encoder.layers.0.self_attn.v.weight", "encoder.layers.0.self_attn.v.bias",
    "encoder.layers.0.self_attn.o.weight", "encoder.layers.0.self_attn.o.bias",
    "encoder.layers.0.ffn.w1.weight",      "encoder.layers.0.ffn.w1.bias",
    "encoder.layers.0.ffn.w2.weight",      "encoder.layers.0.ffn.w2.bias",
    "encoder.layers.0.ln_self.gain",       "encoder.layers.0.ln_self.bias",
    "encoder.layers.0.ln_ffn.gain",        "encoder.layers.0.ln_ffn.bias",
};

inline const std::vector<std::string> kEncLayer1 = {
    "encoder.layers.1.self_attn.q.weight", "encoder.layers.1.self_attn.q.bias",
    "encoder.layers.1.self_attn.k.weight", "encoder.layers.1.self_attn.k.bias",
    "encoder.layers.1.self_attn.v.weight", "encoder.layers.1.self_attn.v.bias",
    "encoder.layers.1.self_attn.o.weight", "encoder.layers.1.self_attn.o.bias",
    "encoder.layers.1.ffn.w1.weight",      "encoder.layers.1.ffn.w1.bias",
    "encoder.layers.1.ffn.w2.weight",      "encoder.layers.1.ffn.w2.bias",
    "encoder.layers.1.ln_self.gain",       "encoder.layers.1.ln_self.bias",
    "encoder.layers.1.ln_ffn.gain",        "encoder.layers.1.ln_ffn.bias",
};

inline const std::vector<std::string> kEncFinal = {
    "encoder.ln_final.gain",
    "encoder.ln_final.bias",
};

inline const std::vector<std::string> kDecLayer0 = {
    "decoder.layers.0.self_attn.q.weight",  "decoder.layers.0.self_attn.q.bias",
    "decoder.layers.0.self_attn.k.weight",  "decoder.layers.0.self_attn.k.bias",
    "decoder.layers.0.self_attn.v.weight",  "decoder.layers.0.self_attn.v.bias",
    "decoder.layers.0.self_attn.o.weight",  "decoder.layers.0.self_attn.o.bias",
    "decoder.layers.0.cross_attn.q.weight", "decoder.layers.0.cross_attn.q.bias",
    "decoder.layers.0.cross_attn.k.weight", "decoder.layers.0.cross_attn.k.bias",
    "decoder.layers.0.cross_attn.v.weight", "decoder.layers.0.cross_attn.v.bias",
    "decoder.layers.0.cross_attn.o.weight", "decoder.layers.0.cross_attn.o.bias",
    "decoder.layers.0.ffn.w1.weight",       "decoder.layers.0.ffn.w1.bias",
    "decoder.layers.0.ffn.w2.weight",       "decoder.layers.0.ffn.w2.bias",
    "decoder.layers.0.ln_self.gain",        "decoder.layers.0.ln_self.bias",
    "decoder.layers.0.ln_cross.gain",       "decoder.layers.0.ln_cross.bias",
    "decoder.layers.0.ln_ffn.gain",         "decoder.layers.0.ln_ffn.bias",
};

inline const std::vector<std::string> kDecLayer1 = {
    "decoder.layers.1.self_attn.q.weight",  "decoder.layers.1.self_attn.q.bias",
    "decoder.layers.1.self_attn.k.weight",  "decoder.layers.1.self_attn.k.bias",
    "decoder.layers.1.self_attn.v.weight",  "decoder.layers.1.self_attn.v.bias",
    "decoder.layers.1.self_attn.o.weight",  "decoder.layers.1.self_attn.o.bias",
    "decoder.layers.1.cross_attn.q.weight", "decoder.layers.1.cross_attn.q.bias",
    "decoder.layers.1.cross_attn.k.weight", "decoder.layers.1.cross_attn.k.bias",
    "decoder.layers.1.cross_attn.v.weight", "decoder.layers.1.cross_attn.v.bias",
    "decoder.layers.1.cross_attn.o.weight", "decoder.layers.1.cross_attn.o.bias",
    "decoder.layers.1.ffn.w1.weight",       "decoder.layers.1.ffn.w1.bias",
    "decoder.layers.1.ffn.w2.weight",       "decoder.layers.1.ffn.w2.bias",
    "decoder.layers.1.ln_self.gain",        "decoder.layers.1.ln_self.bias",
    "decoder.layers.1.ln_cross.gain",       "decoder.layers.1.ln_cross.bias",
    "decoder.layers.1.ln_ffn.gain",         "decoder.layers.1.ln_ffn.bias",
};

inline const std::vector<std::string> kDecFinal = {
    "decoder.ln_final.gain",
    "decoder.ln_final.bias",
};

// Parts of the layer blocks, for composing the LNA golden sets.
inline const std::vector<std::string> kEncSelfAttn = {
    "encoder.layers.0.self_attn.q.weight", "encoder.layers.0.self_attn.q.bias",
    "encoder.layers.0.self_attn.k.weight", "encoder.layers.0.self_attn.k.bias",
    "encoder.layers.0.self_attn.v.weight", "encoder.layers.0.self_attn.v.bias",
    "encoder.layers.0.self_attn.o.weight", "encoder.layers.0.self_attn.o.bias",
    "encoder.layers.1.self_attn.q.weight", "encoder.layers.1.self_attn.q.bias",
    "encoder.layers.1.self_attn.k.weight", "encoder.layers.1.self_attn.k.bias",
    "encoder.layers.1.self_attn.v.weight", "encoder.layers.1.self_attn.v.bias",
    "encoder.layers.1.self_attn.o.weight", "encoder.layers.1.self_attn.o.bias",
};

inline const std::vector<std::string> kEncFfn = {
    "encoder.layers.0.ffn.w1.weight", "encoder.layers.0.ffn.w1.bias",
    "encoder.layers.0.ffn.w2.weight", "encoder.layers.0.ffn.w2.bias",
    "encoder.layers.1.ffn.w1.weight", "encoder.layers.1.ffn.w1.bias",
    "encoder.layers.1.ffn.w2.weight", "encoder.layers.1.ffn.w2.bias",
};

inline const std::vector<std::string> kDecSelfAttn = {
    "decoder.layers.0.self_attn.q.weight", "decoder.layers.0.self_attn.q.bias",
    "decoder.layers.0.self_attn.k.weight", "decoder.layers.0.self_attn.k.bias",
    "decoder.layers.0.self_attn.v.weight", "decoder.layers.0.self_attn.v.bias",
    "decoder.layers.0.self_attn.o.weight", "decoder.layers.0.self_attn.o.bias",
    "decoder.layers.1.self_attn.q.weight", "decoder.layers.1.self_attn.q.bias",
    "decoder.layers.1.self_attn.k.weight", "decoder.layers.1.self_attn.k.bias",
    "decoder.layers.1.self_attn.v.weight", "decoder.layers.1.self_attn.v.bias",
    "decoder.layers.1.self_attn.o.weight", "decoder.layers.1.self_attn.o.bias",
};

inline const std::vector<std::string> kDecFfn = {
    "decoder.layers.0.ffn.w1.weight", "decoder.layers.0.ffn.w1.bias",
    "decoder.layers.0.ffn.w2.weight", "decoder.layers.0.ffn.w2.bias",
    "decoder.layers.1.ffn.w1.weight", "decoder.layers.1.ffn.w1.bias",
    "decoder.layers.1.ffn.w2.weight", "decoder.layers.1.ffn.w2.bias",
};

inline std::set<std::string> golden_union(std::initializer_list<const std::vector<std::string>*> parts) {
    std::set<std::string> out;
    for (const auto* p : parts) out.insert(p->begin(), p->end());
    return out;
}

inline std::set<std::string> golden_all_names() {
    return golden_union({&kEncEmbed, &kEncLayer0, &kEncLayer1, &kEncFinal, &kDecEmbed, &kDecLayer0,
                         &kDecLayer1, &kDecFinal});
}

// frozen set per strategy for the 2+2 tied model, pivot side encoder
inline std::set<std::string> golden_layerwise_enc(int l) {
    switch (l) {
        case 0: return golden_union({&kEncEmbed});
        case 1: return golden_union({&kEncEmbed, &kEncLayer0});
        default: return golden_union({&kEncEmbed, &kEncLayer0, &kEncLayer1, &kEncFinal});
    }
}

inline std::set<std::string> golden_layerwise_dec(int l) {
    switch (l) {
        case 0: return golden_union({&kDecEmbed});
        case 1: return golden_union({&kDecEmbed, &kDecLayer0});
        default: return golden_union({&kDecEmbed, &kDecLayer0, &kDecLayer1, &kDecFinal});
    }
}

inline std::set<std::string> golden_lna_ed() {
    // finetunable: all layer norms, encoder self attn, decoder cross attn
    return golden_union({&kEncEmbed, &kDecEmbed, &kEncFfn, &kDecSelfAttn, &kDecFfn});
}

inline std::set<std::string> golden_lna_d() {
    // finetunable: entire encoder, decoder layer norms and cross attn
    return golden_union({&kDecEmbed, &kDecSelfAttn, &kDecFfn});
}

inline std::set<std::string> golden_lna_ed_lower(bool pivot_is_encoder) {
    std::set<std::string> s = golden_lna_d();
    if (pivot_is_encoder) s.insert(kEncEmbed.begin(), kEncEmbed.end());
    return s;
}

}  // namespace forge::testing
