#include <algorithm>

#include "forge/surgery.hpp"

namespace forge {

FreezeStrategy FreezeStrategy::parse(const std::string& text) {
    if (text == "none") return {Kind::FreezeNone, 0};
    if (text == "all") return {Kind::FreezeAll, 0};
    if (text == "LNA-E,D") return {Kind::LNA_ED, 0};
    if (text == "LNA-D") return {Kind::LNA_D, 0};
    if (text == "LNA-e,D") return {Kind::LNA_eD, 0};
    if (text.rfind("layerwise:", 0) == 0) {
        int l = std::stoi(text.substr(10));
        if (l < 0) throw std::invalid_argument("layerwise freeze count must be >= 0");
        return layer_wise(l);
    }
    throw std::invalid_argument("unknown freeze strategy: " + text);
}

std::string FreezeStrategy::str() const {
    switch (kind) {
        case Kind::LayerWise: return "layerwise:" + std::to_string(layers);
        case Kind::LNA_ED: return "LNA-E,D";
        case Kind::LNA_D: return "LNA-D";
        case Kind::LNA_eD: return "LNA-e,D";
        case Kind::FreezeAll: return "all";
        case Kind::FreezeNone: return "none";
    }
    return "none";
}

namespace {

bool has_segment(const std::string& name, const std::string& seg) {
    return name.find(seg) != std::string::npos;
}

bool in_layer_below(const std::string& name, const std::string& side, int l_bound) {
    std::string prefix = side + ".layers.";
    if (name.rfind(prefix, 0) != 0) return false;
    size_t pos = prefix.size();
    size_t dot = name.find('.', pos);
    int layer = std::stoi(name.substr(pos, dot - pos));
    return layer < l_bound;
}

}  // namespace

std::set<std::string> resolve_frozen_set(const FreezeStrategy& s, const ModelConfig& cfg,
                                         PivotSide pivot_side) {
    std::vector<std::string> names = canonical_names(cfg);
    std::set<std::string> frozen;
    const std::string side = pivot_side == PivotSide::Encoder ? "encoder" : "decoder";
    const int side_layers = pivot_side == PivotSide::Encoder ? cfg.enc_layers : cfg.dec_layers;

    switch (s.kind) {
        case FreezeStrategy::Kind::FreezeNone:
            return frozen;
        case FreezeStrategy::Kind::FreezeAll:
            return std::set<std::string>(names.begin(), names.end());
        case FreezeStrategy::Kind::LayerWise: {
            if (s.layers < 0 || s.layers > side_layers)
                throw std::invalid_argument("layerwise L exceeds layer count of the " + side);
            for (const auto& n : names) {
                if (n == side + ".embed.tokens" || n == side + ".embed.positions")
                    frozen.insert(n);
                else if (in_layer_below(n, side, s.layers))
                    frozen.insert(n);
                else if (s.layers == side_layers && n.rfind(side + ".ln_final.", 0) == 0)
                    frozen.insert(n);  // the entire stack, final norm included
            }
            return frozen;
        }
        case FreezeStrategy::Kind::LNA_ED: {
            // finetunable: all layer norms, encoder self attention, decoder
            // cross attention; everything else frozen
            for (const auto& n : names) {
                bool tunable = has_segment(n, ".ln_") ||
                               (n.rfind("encoder.layers.", 0) == 0 && has_segment(n, ".self_attn.")) ||
                               (n.rfind("decoder.layers.", 0) == 0 && has_segment(n, ".cross_attn."));
                if (!tunable) frozen.insert(n);
            }
            return frozen;
        }
        case FreezeStrategy::Kind::LNA_D:
        case FreezeStrategy::Kind::LNA_eD: {
            // finetunable: all encoder parameters, decoder layer norms,
            // decoder cross attention
            for (const auto& n : names) {
                bool tunable = n.rfind("encoder.", 0) == 0 || has_segment(n, ".cross_attn.") ||
                               (n.rfind("decoder.", 0) == 0 && has_segment(n, ".ln_"));
                if (!tunable) frozen.insert(n);
            }
            if (s.kind == FreezeStrategy::Kind::LNA_eD && pivot_side == PivotSide::Encoder) {
                // extra clause applies when training the pivot-target model only
                frozen.insert("encoder.embed.tokens");
                frozen.insert("encoder.embed.positions");
            }
            return frozen;
        }
    }
    return frozen;
}

void apply_freeze(Model& m, const std::set<std::string>& frozen) {
    for (const auto& n : frozen)
        if (!m.tree.has(n)) throw std::invalid_argument("freeze binding names unknown tensor " + n);
    for (auto& [name, p] : m.tree.named) p->trainable = frozen.count(name) == 0;
}

}  // namespace forge
