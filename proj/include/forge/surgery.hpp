#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/model.hpp"

namespace forge {

// ---- checkpoint files ----
//
// Format (bit-exact): UTF-8 header of key=value lines (format_version, the
// model config fields, language tags, vocab fingerprints as lowercase hex of
// 64-bit FNV-1a over the newline-joined vocabulary word list), one blank
// line, then per-tensor records sorted ascending by canonical name:
//   <name>\n<dims space-separated>\n<raw little-endian f32 payload>\n

constexpr int kCheckpointFormatVersion = 1;

struct CheckpointVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointTruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointInconsistentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

// ---- freezing strategies ----

enum class PivotSide { Encoder, Decoder };

struct FreezeStrategy {
    enum class Kind { LayerWise, LNA_ED, LNA_D, LNA_eD, FreezeAll, FreezeNone };
    Kind kind = Kind::FreezeNone;
    int layers = 0;  // LayerWise only

    static FreezeStrategy layer_wise(int l) { return {Kind::LayerWise, l}; }
    static FreezeStrategy parse(const std::string& text);
    std::string str() const;
};

// The exact set of frozen canonical names for a strategy applied to a model
// in the given pivot-side role. LayerWise(L) freezes the pivot side's token
// and positional embeddings plus its lowest L layers (the whole stack,
// final norm included, at L == layer count). LNA variants freeze the
// complement of their finetunable component list over the whole model;
// LNA-e,D adds encoder-embedding freezing only in the pivot-target role
// (pivot side = encoder).
std::set<std::string> resolve_frozen_set(const FreezeStrategy& s, const ModelConfig& cfg,
                                         PivotSide pivot_side);

// Marks the tree: names in `frozen` become non-trainable, all others
// trainable. Throws if a name is not canonical for the tree.
void apply_freeze(Model& m, const std::set<std::string>& frozen);

// ---- grafting ----

struct GraftMapping {
    const Model* source = nullptr;
    std::string src_prefix;
    std::string dst_prefix;
    std::vector<std::string> exclude;  // exact destination names to skip
};

struct GraftPlan {
    enum class MissingPolicy { RandomInitReport, Error };
    std::vector<GraftMapping> mappings;
    MissingPolicy policy = MissingPolicy::RandomInitReport;
    uint64_t reinit_seed = 0;
};

struct GraftReport {
    std::vector<std::string> grafted;
    std::vector<std::string> random_initialized;
    std::vector<std::string> untouched;
};

struct GraftError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Copies mapped tensors bitwise from the sources into dst. Embedding and
// output-projection tensors require equal vocabulary fingerprints between
// the corresponding model sides. Missing source tensors follow the plan
// policy. Unmapped destination tensors are untouched.
GraftReport graft(Model& dst, const GraftPlan& plan);

}  // namespace forge
