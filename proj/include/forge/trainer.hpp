#pragma once

#include <functional>
#include <string>
#include <vector>

#include "forge/optim.hpp"
#include "forge/surgery.hpp"

namespace forge {

struct TrainSettings {
    Schedule schedule = Schedule::inverse_sqrt(5e-4, 200);
    AdamConfig adam;
    double label_smoothing = 0.1;
    int batch_tokens = 2000;
    uint64_t seed = 1;
    int max_epochs = 40;
    int patience = 10;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_bleu = std::nan("");  // NaN for stages without dev decoding
    double lr = 0.0;
};

// `epoch<TAB>train_loss<TAB>dev_bleu<TAB>lr`; dev_bleu prints "-" when absent.
void write_history(const std::string& path, const std::vector<EpochRecord>& history);

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_dev = -1.0;
};

// Deterministic composition: seeded shuffle, then greedy packing by target
// token count (at least one pair per batch).
std::vector<TranslationBatch> make_translation_batches(const std::vector<TokenPair>& pairs,
                                                       int batch_tokens, int max_positions,
                                                       Rng rng);

// One optimizer step per batch; returns the token-weighted mean loss.
double run_translation_steps(Model& m, const std::vector<TranslationBatch>& batches,
                             AdamState& opt, const Schedule& sched, double label_smoothing,
                             Rng& dropout_rng, int64_t& global_step);

// Cycles through the batches until `steps` updates have been applied.
void train_fixed_steps(Model& m, const std::vector<TranslationBatch>& batches, AdamState& opt,
                       const Schedule& sched, double label_smoothing, uint64_t seed, int steps);

using DevEvaluator = std::function<double(const Model&, const std::vector<TokenPair>&)>;

// Supervised translation with epoch-level early stopping on dev BLEU.
// Returns the best-dev model in `m` (not the last), with per-epoch history.
TrainResult train_translation(Model& m, const std::vector<TokenPair>& train_pairs,
                              const std::vector<TokenPair>& dev_pairs, const DevEvaluator& dev_eval,
                              const TrainSettings& s);

enum class DenoisingMode { Bart, MaskedLm };

// Deterministic mask count: floor(ratio*len + 0.5), at least 1 when ratio>0.
int mask_count(int len, double ratio);
std::vector<int> corrupt_tokens(const std::vector<int>& tokens, double mask_ratio, Rng& rng);

// Denoising pretraining over a monolingual corpus for a fixed epoch budget.
// Bart mode reconstructs the full sentence from a masked input; MaskedLm mode
// (encoder-only models) predicts the masked positions only.
TrainResult pretrain_denoising(Model& m, const std::vector<std::vector<int>>& mono,
                               double mask_ratio, int epochs, const TrainSettings& s,
                               DenoisingMode mode = DenoisingMode::Bart);

// New-language PLM: fresh token embeddings trained with the denoising
// objective against the frozen body of the pivot PLM.
Model adapt_embeddings(const Model& pivot_plm, const std::vector<std::vector<int>>& mono,
                       int new_vocab_size, const std::string& new_lang, const std::string& new_fp,
                       double mask_ratio, int epochs, const TrainSettings& s, uint64_t init_seed);

}  // namespace forge
