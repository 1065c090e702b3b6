#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <unordered_map>
#include <vector>

#include "forge/rng.hpp"
#include "forge/tensor.hpp"

namespace forge {

template <typename T>
using EigenRowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<EigenRowMat<T>>;
template <typename T>
using CMatMap = Eigen::Map<const EigenRowMat<T>>;
// Per-head views into an [N x d] buffer need an outer stride of d.
template <typename T>
using HeadMap = Eigen::Map<EigenRowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CHeadMap = Eigen::Map<const EigenRowMat<T>, 0, Eigen::OuterStride<>>;

// Row ranges of one sentence inside a ragged (concatenated) batch.
// Queries live in [q0,q1), keys/values in [k0,k1).
struct AttnSpan {
    int q0, q1, k0, k1;
};

template <typename T>
class Graph;

template <typename T>
struct Node {
    Tens<T> stored;             // owned value (non-leaf)
    Param<T>* param = nullptr;  // leaf binding; value lives in the parameter
    Tens<T> grad;
    bool has_grad = false;
    bool needs_grad = false;
    std::function<void()> back;

    const Tens<T>& value() const { return param ? param->value : stored; }
};

// Define-by-run reverse-mode tape. Forward values are computed eagerly as ops
// are recorded; creation order is the topological order. A Graph is confined
// to the thread that builds it.
template <typename T>
class Graph {
public:
    using N = Node<T>;

    N* leaf(Param<T>* p) {
        auto it = leaves_.find(p);
        if (it != leaves_.end()) return it->second;
        N* n = fresh();
        n->param = p;
        n->needs_grad = p->trainable;
        leaves_[p] = n;
        return n;
    }

    N* constant(Tens<T> v) {
        N* n = fresh();
        n->stored = std::move(v);
        return n;
    }

    N* gather_rows(N* table, std::vector<int> idx) {
        const Tens<T>& tv = table->value();
        if (tv.dims.size() != 2) throw std::invalid_argument("gather_rows: table must be 2-d");
        int d = tv.dims[1], rows = tv.dims[0];
        N* n = fresh();
        n->stored = Tens<T>({static_cast<int>(idx.size()), d});
        for (size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] < 0 || idx[i] >= rows)
                throw std::out_of_range("gather_rows: index out of range");
            std::memcpy(n->stored.data() + i * d, tv.data() + static_cast<size_t>(idx[i]) * d,
                        d * sizeof(T));
        }
        n->needs_grad = table->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, table, idx = std::move(idx), d]() {
                Tens<T>* tg = grad_buf(table);
                if (!tg) return;
                for (size_t i = 0; i < idx.size(); ++i) {
                    T* dst = tg->data() + static_cast<size_t>(idx[i]) * d;
                    const T* src = n->grad.data() + i * d;
                    for (int c = 0; c < d; ++c) dst[c] += src[c];
                }
            };
        }
        return n;
    }

    N* add(N* a, N* b) {
        if (!a->value().same_shape(b->value())) throw std::invalid_argument("add: shape mismatch");
        N* n = fresh();
        n->stored = a->value();
        const T* bp = b->value().data();
        for (size_t i = 0; i < n->stored.numel(); ++i) n->stored.v[i] += bp[i];
        n->needs_grad = a->needs_grad || b->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, a, b]() {
                for (N* in : {a, b}) {
                    if (Tens<T>* g = grad_buf(in))
                        for (size_t i = 0; i < g->numel(); ++i) g->v[i] += n->grad.v[i];
                }
            };
        }
        return n;
    }

    N* scale(N* a, T c) {
        N* n = fresh();
        n->stored = a->value();
        for (T& x : n->stored.v) x *= c;
        n->needs_grad = a->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, a, c]() {
                if (Tens<T>* g = grad_buf(a))
                    for (size_t i = 0; i < g->numel(); ++i) g->v[i] += c * n->grad.v[i];
            };
        }
        return n;
    }

    // y = x * W^T + b with x:[N x in], W:[out x in], b:[out] (b may be null).
    N* linear(N* x, N* W, N* b) {
        const Tens<T>& xv = x->value();
        const Tens<T>& wv = W->value();
        if (xv.dims.size() != 2 || wv.dims.size() != 2 || xv.dims[1] != wv.dims[1])
            throw std::invalid_argument("linear: shape mismatch");
        int rows = xv.dims[0], in = xv.dims[1], out = wv.dims[0];
        N* n = fresh();
        n->stored = Tens<T>({rows, out});
        CMatMap<T> X(xv.data(), rows, in), Wm(wv.data(), out, in);
        MatMap<T> Y(n->stored.data(), rows, out);
        Y.noalias() = X * Wm.transpose();
        if (b) {
            const Tens<T>& bv = b->value();
            if (static_cast<int>(bv.numel()) != out) throw std::invalid_argument("linear: bias mismatch");
            Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bv.data(), out);
        }
        n->needs_grad = x->needs_grad || W->needs_grad || (b && b->needs_grad);
        if (n->needs_grad) {
            n->back = [this, n, x, W, b, rows, in, out]() {
                CMatMap<T> dY(n->grad.data(), rows, out);
                if (Tens<T>* gx = grad_buf(x)) {
                    CMatMap<T> Wm(W->value().data(), out, in);
                    MatMap<T>(gx->data(), rows, in).noalias() += dY * Wm;
                }
                if (Tens<T>* gw = grad_buf(W)) {
                    CMatMap<T> X(x->value().data(), rows, in);
                    MatMap<T>(gw->data(), out, in).noalias() += dY.transpose() * X;
                }
                if (b) {
                    if (Tens<T>* gb = grad_buf(b)) {
                        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> g(gb->data(), out);
                        g += dY.colwise().sum();
                    }
                }
            };
        }
        return n;
    }

    N* relu(N* a) {
        N* n = fresh();
        n->stored = a->value();
        for (T& x : n->stored.v)
            if (x < T(0)) x = T(0);
        n->needs_grad = a->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, a]() {
                if (Tens<T>* g = grad_buf(a)) {
                    const Tens<T>& av = a->value();
                    for (size_t i = 0; i < g->numel(); ++i)
                        if (av.v[i] > T(0)) g->v[i] += n->grad.v[i];
                }
            };
        }
        return n;
    }

    // Rowwise layer norm over the last dimension of a [N x d] input.
    N* layer_norm(N* x, N* gain, N* bias, T eps) {
        const Tens<T>& xv = x->value();
        if (xv.dims.size() != 2) throw std::invalid_argument("layer_norm: input must be 2-d");
        int rows = xv.dims[0], d = xv.dims[1];
        if (static_cast<int>(gain->value().numel()) != d ||
            static_cast<int>(bias->value().numel()) != d)
            throw std::invalid_argument("layer_norm: gain/bias mismatch");
        N* n = fresh();
        n->stored = Tens<T>({rows, d});
        auto stats = std::make_shared<std::vector<T>>(2 * rows);  // mean, inv-std per row
        const T* g = gain->value().data();
        const T* bvec = bias->value().data();
        for (int r = 0; r < rows; ++r) {
            const T* xr = xv.data() + static_cast<size_t>(r) * d;
            T mean = T(0);
            for (int c = 0; c < d; ++c) mean += xr[c];
            mean /= T(d);
            T var = T(0);
            for (int c = 0; c < d; ++c) {
                T dd = xr[c] - mean;
                var += dd * dd;
            }
            var /= T(d);
            T inv = T(1) / std::sqrt(var + eps);
            (*stats)[2 * r] = mean;
            (*stats)[2 * r + 1] = inv;
            T* yr = n->stored.data() + static_cast<size_t>(r) * d;
            for (int c = 0; c < d; ++c) yr[c] = (xr[c] - mean) * inv * g[c] + bvec[c];
        }
        n->needs_grad = x->needs_grad || gain->needs_grad || bias->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, x, gain, bias, stats, rows, d]() {
                const Tens<T>& xv = x->value();
                const T* g = gain->value().data();
                Tens<T>* gx = grad_buf(x);
                Tens<T>* gg = grad_buf(gain);
                Tens<T>* gb = grad_buf(bias);
                std::vector<T> xhat(d), dxh(d);
                for (int r = 0; r < rows; ++r) {
                    const T* xr = xv.data() + static_cast<size_t>(r) * d;
                    const T* dy = n->grad.data() + static_cast<size_t>(r) * d;
                    T mean = (*stats)[2 * r], inv = (*stats)[2 * r + 1];
                    for (int c = 0; c < d; ++c) xhat[c] = (xr[c] - mean) * inv;
                    if (gg)
                        for (int c = 0; c < d; ++c) gg->v[c] += dy[c] * xhat[c];
                    if (gb)
                        for (int c = 0; c < d; ++c) gb->v[c] += dy[c];
                    if (gx) {
                        T m1 = T(0), m2 = T(0);
                        for (int c = 0; c < d; ++c) {
                            dxh[c] = dy[c] * g[c];
                            m1 += dxh[c];
                            m2 += dxh[c] * xhat[c];
                        }
                        m1 /= T(d);
                        m2 /= T(d);
                        T* out = gx->data() + static_cast<size_t>(r) * d;
                        for (int c = 0; c < d; ++c) out[c] += inv * (dxh[c] - m1 - xhat[c] * m2);
                    }
                }
            };
        }
        return n;
    }

    // Inverted dropout with a seeded mask stream; rate 0 is the identity.
    N* dropout(N* a, double rate, Rng& rng) {
        if (rate <= 0.0) return a;
        if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
        N* n = fresh();
        n->stored = a->value();
        auto mask = std::make_shared<std::vector<T>>(n->stored.numel());
        T keep_scale = T(1.0 / (1.0 - rate));
        for (size_t i = 0; i < mask->size(); ++i) {
            (*mask)[i] = rng.uniform() < rate ? T(0) : keep_scale;
            n->stored.v[i] *= (*mask)[i];
        }
        n->needs_grad = a->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, a, mask]() {
                if (Tens<T>* g = grad_buf(a))
                    for (size_t i = 0; i < g->numel(); ++i) g->v[i] += n->grad.v[i] * (*mask)[i];
            };
        }
        return n;
    }

    // Multi-head scaled dot-product attention over ragged spans.
    // q:[Nq x d], k,v:[Nk x d]. key_valid (optional) marks usable key rows;
    // causal restricts span-relative key j to <= query i.
    N* attention(N* q, N* k, N* v, int heads, std::vector<AttnSpan> spans, bool causal,
                 const std::vector<uint8_t>* key_valid = nullptr) {
        const Tens<T>& qv = q->value();
        const Tens<T>& kv = k->value();
        const Tens<T>& vv = v->value();
        int d = qv.dims[1];
        if (d % heads != 0) throw std::invalid_argument("attention: d_model not divisible by heads");
        if (kv.dims != vv.dims || kv.dims[1] != d)
            throw std::invalid_argument("attention: k/v shape mismatch");
        int dk = d / heads;
        T scl = T(1) / std::sqrt(T(dk));
        N* n = fresh();
        n->stored = Tens<T>({qv.dims[0], d});
        // Softmax matrices are kept for the backward pass, one per (span, head).
        auto probs = std::make_shared<std::vector<EigenRowMat<T>>>();
        probs->reserve(spans.size() * heads);
        const T neg_inf = -std::numeric_limits<T>::infinity();
        for (const AttnSpan& s : spans) {
            int lq = s.q1 - s.q0, lk = s.k1 - s.k0;
            for (int h = 0; h < heads; ++h) {
                CHeadMap<T> Q(qv.data() + static_cast<size_t>(s.q0) * d + h * dk, lq, dk,
                              Eigen::OuterStride<>(d));
                CHeadMap<T> K(kv.data() + static_cast<size_t>(s.k0) * d + h * dk, lk, dk,
                              Eigen::OuterStride<>(d));
                CHeadMap<T> V(vv.data() + static_cast<size_t>(s.k0) * d + h * dk, lk, dk,
                              Eigen::OuterStride<>(d));
                EigenRowMat<T> S(lq, lk);
                S.noalias() = Q * K.transpose() * scl;
                if (causal)
                    for (int i = 0; i < lq; ++i)
                        for (int j = i + 1; j < lk; ++j) S(i, j) = neg_inf;
                if (key_valid)
                    for (int j = 0; j < lk; ++j)
                        if (!(*key_valid)[s.k0 + j]) S.col(j).setConstant(neg_inf);
                for (int i = 0; i < lq; ++i) softmax_inplace(S.row(i).data(), lk);
                HeadMap<T> O(n->stored.data() + static_cast<size_t>(s.q0) * d + h * dk, lq, dk,
                             Eigen::OuterStride<>(d));
                O.noalias() = S * V;
                probs->push_back(std::move(S));
            }
        }
        n->needs_grad = q->needs_grad || k->needs_grad || v->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, q, k, v, heads, dk, d, scl, spans = std::move(spans), probs]() {
                Tens<T>* gq = grad_buf(q);
                Tens<T>* gk = grad_buf(k);
                Tens<T>* gv = grad_buf(v);
                size_t pi = 0;
                for (const AttnSpan& s : spans) {
                    int lq = s.q1 - s.q0, lk = s.k1 - s.k0;
                    for (int h = 0; h < heads; ++h, ++pi) {
                        const EigenRowMat<T>& P = (*probs)[pi];
                        CHeadMap<T> dO(n->grad.data() + static_cast<size_t>(s.q0) * d + h * dk,
                                       lq, dk, Eigen::OuterStride<>(d));
                        CHeadMap<T> V(v->value().data() + static_cast<size_t>(s.k0) * d + h * dk,
                                      lk, dk, Eigen::OuterStride<>(d));
                        if (gv) {
                            HeadMap<T> dV(gv->data() + static_cast<size_t>(s.k0) * d + h * dk, lk,
                                          dk, Eigen::OuterStride<>(d));
                            dV.noalias() += P.transpose() * dO;
                        }
                        if (!gq && !gk) continue;
                        EigenRowMat<T> dP(lq, lk);
                        dP.noalias() = dO * V.transpose();
                        // dS = P .* (dP - rowsum(dP .* P))
                        EigenRowMat<T> dS = P.cwiseProduct(dP);
                        Eigen::Matrix<T, Eigen::Dynamic, 1> rs = dS.rowwise().sum();
                        dS = P.cwiseProduct(dP.colwise() - rs);
                        CHeadMap<T> Q(q->value().data() + static_cast<size_t>(s.q0) * d + h * dk,
                                      lq, dk, Eigen::OuterStride<>(d));
                        CHeadMap<T> K(k->value().data() + static_cast<size_t>(s.k0) * d + h * dk,
                                      lk, dk, Eigen::OuterStride<>(d));
                        if (gq) {
                            HeadMap<T> dQ(gq->data() + static_cast<size_t>(s.q0) * d + h * dk, lq,
                                          dk, Eigen::OuterStride<>(d));
                            dQ.noalias() += dS * K * scl;
                        }
                        if (gk) {
                            HeadMap<T> dK(gk->data() + static_cast<size_t>(s.k0) * d + h * dk, lk,
                                          dk, Eigen::OuterStride<>(d));
                            dK.noalias() += dS.transpose() * Q * scl;
                        }
                    }
                }
            };
        }
        return n;
    }

    // Scalar label-smoothed cross entropy (mean over rows whose target is not
    // pad_index). Softmax is recomputed in backward to avoid keeping a second
    // [N x V] buffer alive.
    N* cross_entropy(N* logits, std::vector<int> targets, T eps, int pad_index) {
        const Tens<T>& lv = logits->value();
        if (lv.dims.size() != 2) throw std::invalid_argument("cross_entropy: logits must be 2-d");
        int rows = lv.dims[0], vocab = lv.dims[1];
        if (static_cast<int>(targets.size()) != rows)
            throw std::invalid_argument("cross_entropy: target count mismatch");
        N* n = fresh();
        int live = 0;
        std::vector<T> lp(vocab);
        T total = T(0);
        for (int r = 0; r < rows; ++r) {
            if (targets[r] == pad_index) continue;
            if (targets[r] < 0 || targets[r] >= vocab)
                throw std::invalid_argument("cross_entropy: target out of range");
            std::memcpy(lp.data(), lv.data() + static_cast<size_t>(r) * vocab, vocab * sizeof(T));
            log_softmax_inplace(lp.data(), vocab);
            T sum_logp = T(0);
            for (int c = 0; c < vocab; ++c) sum_logp += lp[c];
            total += -((T(1) - eps) * lp[targets[r]] + eps / T(vocab) * sum_logp);
            ++live;
        }
        if (live == 0) throw std::invalid_argument("cross_entropy: no non-pad target positions");
        n->stored = Tens<T>({1});
        n->stored.v[0] = total / T(live);
        n->needs_grad = logits->needs_grad;
        if (n->needs_grad) {
            n->back = [this, n, logits, targets = std::move(targets), eps, pad_index, rows, vocab,
                       live]() {
                Tens<T>* gl = grad_buf(logits);
                if (!gl) return;
                const Tens<T>& lv = logits->value();
                T gscale = n->grad.v[0] / T(live);
                std::vector<T> p(vocab);
                for (int r = 0; r < rows; ++r) {
                    if (targets[r] == pad_index) continue;
                    std::memcpy(p.data(), lv.data() + static_cast<size_t>(r) * vocab,
                                vocab * sizeof(T));
                    softmax_inplace(p.data(), vocab);
                    T* out = gl->data() + static_cast<size_t>(r) * vocab;
                    T u = eps / T(vocab);
                    for (int c = 0; c < vocab; ++c) out[c] += gscale * (p[c] - u);
                    out[targets[r]] -= gscale * (T(1) - eps);
                }
            };
        }
        return n;
    }

    // Reverse pass from a scalar loss node. Gradients accumulate into
    // trainable parameter buffers; frozen leaves are never touched.
    void backward(N* loss) {
        if (loss->value().dims != std::vector<int>{1})
            throw std::invalid_argument("backward: loss must be a scalar node");
        if (!loss->needs_grad) return;
        loss->grad = Tens<T>({1}, std::vector<T>{T(1)});
        loss->has_grad = true;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            N* n = it->get();
            if (n->has_grad && n->back) n->back();
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    N* fresh() {
        nodes_.push_back(std::make_unique<N>());
        return nodes_.back().get();
    }

    // Returns the accumulation buffer for a node, or nullptr when no gradient
    // should flow there (frozen leaf or constant).
    Tens<T>* grad_buf(N* n) {
        if (!n->needs_grad) return nullptr;
        if (n->param) {
            n->param->ensure_grad();
            return &n->param->grad;
        }
        if (!n->has_grad) {
            n->grad = Tens<T>(n->value().dims, T(0));
            n->has_grad = true;
        }
        return &n->grad;
    }

    std::deque<std::unique_ptr<N>> nodes_;
    std::unordered_map<Param<T>*, N*> leaves_;
};

}  // namespace forge
