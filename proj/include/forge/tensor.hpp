#pragma once

#include <cmath>
#include <cstddef>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge {

// 64-byte aligned storage. Eigen's vectorized kernels peel differently for
// differently aligned buffers; pinning the alignment keeps results bitwise
// reproducible across runs.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::size_t kAlign = 64;
    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(kAlign)));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t(kAlign)); }
    bool operator==(const AlignedAllocator&) const { return true; }
};

template <typename T>
using AlignedVec = std::vector<T, AlignedAllocator<T>>;

// Dense row-major tensor. Flat storage, explicit dims, no broadcasting
// machinery beyond what the ops need.
template <typename T>
struct Tens {
    std::vector<int> dims;
    AlignedVec<T> v;

    Tens() = default;
    explicit Tens(std::vector<int> d, T fill = T(0)) : dims(std::move(d)) {
        v.assign(numel_of(dims), fill);
    }
    Tens(std::vector<int> d, AlignedVec<T> data) : dims(std::move(d)), v(std::move(data)) {
        if (v.size() != numel_of(dims))
            throw std::invalid_argument("tensor data length does not match dims");
    }
    Tens(std::vector<int> d, const std::vector<T>& data)
        : dims(std::move(d)), v(data.begin(), data.end()) {
        if (v.size() != numel_of(dims))
            throw std::invalid_argument("tensor data length does not match dims");
    }

    static size_t numel_of(const std::vector<int>& d) {
        size_t n = 1;
        for (int x : d) {
            if (x <= 0) throw std::invalid_argument("tensor dims must be positive");
            n *= static_cast<size_t>(x);
        }
        return n;
    }

    size_t numel() const { return v.size(); }
    int rows() const { return dims.size() == 2 ? dims[0] : (dims.size() == 1 ? 1 : 0); }
    int cols() const { return dims.size() == 2 ? dims[1] : (dims.size() == 1 ? dims[0] : 0); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    bool same_shape(const Tens& o) const { return dims == o.dims; }

    template <typename U>
    Tens<U> cast() const {
        Tens<U> out;
        out.dims = dims;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

// A learnable tensor. Gradient storage is only ever allocated when the
// parameter is trainable; frozen parameters never receive a grad buffer.
template <typename T>
struct Param {
    Tens<T> value;
    Tens<T> grad;
    bool trainable = true;
    bool grad_allocated = false;

    Param() = default;
    explicit Param(Tens<T> val, bool train = true) : value(std::move(val)), trainable(train) {}

    void ensure_grad() {
        if (!trainable) throw std::logic_error("gradient storage requested for frozen parameter");
        if (!grad_allocated) {
            grad = Tens<T>(value.dims, T(0));
            grad_allocated = true;
        }
    }
    void zero_grad() {
        if (grad_allocated) std::fill(grad.v.begin(), grad.v.end(), T(0));
    }
    void drop_grad() {
        grad = Tens<T>();
        grad_allocated = false;
    }
};

template <typename T>
inline bool bitwise_equal(const Tens<T>& a, const Tens<T>& b) {
    return a.dims == b.dims &&
           std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(T)) == 0;
}

// ---- kernels shared by the public ops and the autodiff graph ----

template <typename T>
inline void softmax_inplace(T* x, int n) {
    T mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    T sum = T(0);
    for (int i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    T inv = T(1) / sum;
    for (int i = 0; i < n; ++i) x[i] *= inv;
}

// Max-subtracted, in place: x <- log_softmax(x). Returns logsumexp shift-free.
template <typename T>
inline void log_softmax_inplace(T* x, int n) {
    T mx = x[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    T sum = T(0);
    for (int i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
    T lse = mx + std::log(sum);
    for (int i = 0; i < n; ++i) x[i] -= lse;
}

template <typename T>
inline void layer_norm_row(const T* x, const T* gain, const T* bias, T eps, int n, T* out) {
    T mean = T(0);
    for (int i = 0; i < n; ++i) mean += x[i];
    mean /= T(n);
    T var = T(0);
    for (int i = 0; i < n; ++i) {
        T d = x[i] - mean;
        var += d * d;
    }
    var /= T(n);
    T inv = T(1) / std::sqrt(var + eps);
    for (int i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv * gain[i] + bias[i];
}

// ---- public vector/matrix ops ----

template <typename T>
inline std::vector<T> softmax(const std::vector<T>& x) {
    if (x.empty()) throw std::invalid_argument("softmax: empty input");
    for (T e : x)
        if (!std::isfinite(static_cast<double>(e)))
            throw std::invalid_argument("softmax: non-finite input");
    std::vector<T> out = x;
    softmax_inplace(out.data(), static_cast<int>(out.size()));
    return out;
}

template <typename T>
inline std::vector<T> layer_norm(const std::vector<T>& x, const std::vector<T>& gain,
                                 const std::vector<T>& bias, T eps = T(1e-5)) {
    if (gain.size() != x.size() || bias.size() != x.size())
        throw std::invalid_argument("layer_norm: shape mismatch");
    std::vector<T> out(x.size());
    layer_norm_row(x.data(), gain.data(), bias.data(), eps, static_cast<int>(x.size()), out.data());
    return out;
}

// Label-smoothed cross entropy, mean over non-pad positions. The smoothed
// target distribution is (1-eps)*onehot + eps/V uniform over the whole
// vocabulary (target included). Rows whose target equals pad_index
// contribute nothing.
template <typename T>
inline T cross_entropy_smoothed(const Tens<T>& logits, const std::vector<int>& targets,
                                T eps, int pad_index) {
    if (logits.dims.size() != 2) throw std::invalid_argument("cross_entropy: logits must be 2-d");
    int n = logits.dims[0], vocab = logits.dims[1];
    if (static_cast<int>(targets.size()) != n)
        throw std::invalid_argument("cross_entropy: target count mismatch");
    if (eps < T(0) || eps >= T(1)) throw std::invalid_argument("cross_entropy: eps out of range");
    std::vector<T> row(vocab);
    T total = T(0);
    int live = 0;
    for (int i = 0; i < n; ++i) {
        if (targets[i] == pad_index) continue;
        if (targets[i] < 0 || targets[i] >= vocab)
            throw std::invalid_argument("cross_entropy: target index out of range");
        std::memcpy(row.data(), logits.data() + static_cast<size_t>(i) * vocab, vocab * sizeof(T));
        log_softmax_inplace(row.data(), vocab);
        T sum_logp = T(0);
        for (int c = 0; c < vocab; ++c) sum_logp += row[c];
        total += -((T(1) - eps) * row[targets[i]] + eps / T(vocab) * sum_logp);
        ++live;
    }
    if (live == 0) throw std::invalid_argument("cross_entropy: no non-pad target positions");
    return total / T(live);
}

}  // namespace forge
