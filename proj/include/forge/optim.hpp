#pragma once

#include <map>
#include <string>

#include "forge/model.hpp"

namespace forge {

struct Schedule {
    enum class Kind { InverseSqrt, Polynomial };
    Kind kind = Kind::InverseSqrt;
    double peak_lr = 5e-4;
    int warmup_steps = 200;
    // polynomial decay only
    int64_t total_steps = 0;
    double end_lr = 0.0;
    double power = 1.0;

    static Schedule inverse_sqrt(double peak, int warmup) {
        return {Kind::InverseSqrt, peak, warmup, 0, 0.0, 1.0};
    }
    static Schedule polynomial(double peak, int warmup, int64_t total, double end = 0.0,
                               double pw = 1.0) {
        return {Kind::Polynomial, peak, warmup, total, end, pw};
    }
};

// Linear warmup to peak, then inverse-sqrt decay or polynomial interpolation
// down to end_lr at total_steps. Continuous at the warmup boundary.
double lr_at(const Schedule& s, int64_t step);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
};

// Bias-corrected Adam. Moment state exists only for trainable parameters and
// is created lazily at the first step a parameter is seen.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Applies one update from the gradients accumulated in the tree, then
    // clears them. A gradient on a frozen parameter is a contract violation.
    void step(ParamTree<float>& tree, double lr);

    bool has_state(const std::string& name) const { return moments_.count(name) != 0; }
    int64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Moments {
        std::vector<float> m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Moments> moments_;
    int64_t t_ = 0;
};

}  // namespace forge
