#include "forge/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace forge {

double lr_at(const Schedule& s, int64_t step) {
    if (step < 0) throw std::invalid_argument("lr_at: negative step");
    if (s.warmup_steps < 1) throw std::invalid_argument("schedule warmup_steps must be >= 1");
    if (s.peak_lr <= 0) throw std::invalid_argument("schedule peak_lr must be positive");
    if (step <= s.warmup_steps)
        return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    if (s.kind == Schedule::Kind::InverseSqrt)
        return s.peak_lr * std::sqrt(static_cast<double>(s.warmup_steps) / static_cast<double>(step));
    if (step >= s.total_steps) return s.end_lr;
    double frac = static_cast<double>(step - s.warmup_steps) /
                  static_cast<double>(s.total_steps - s.warmup_steps);
    return s.end_lr + (s.peak_lr - s.end_lr) * std::pow(1.0 - frac, s.power);
}

void AdamState::step(ParamTree<float>& tree, double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : tree.named) {
        if (!p->trainable) {
            if (p->grad_allocated)
                throw std::logic_error("gradient present for frozen parameter " + name);
            continue;
        }
        auto [it, fresh] = moments_.try_emplace(name);
        Moments& mo = it->second;
        if (fresh) {
            mo.m.assign(p->value.numel(), 0.0f);
            mo.v.assign(p->value.numel(), 0.0f);
        }
        const bool has_grad = p->grad_allocated;
        float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
        for (size_t i = 0; i < p->value.numel(); ++i) {
            float g = has_grad ? p->grad.v[i] : 0.0f;
            mo.m[i] = b1 * mo.m[i] + (1.0f - b1) * g;
            mo.v[i] = b2 * mo.v[i] + (1.0f - b2) * g * g;
            double mhat = mo.m[i] / bc1;
            double vhat = mo.v[i] / bc2;
            p->value.v[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
        p->zero_grad();
    }
}

}  // namespace forge
