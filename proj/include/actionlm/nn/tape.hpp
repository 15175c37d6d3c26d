#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "actionlm/errors.hpp"
#include "actionlm/nn/param.hpp"
#include "actionlm/nn/tensor.hpp"

namespace actionlm::nn {

// Reverse-mode gradient tape over tensor-granularity operations.
//
// Every op appends one node holding the forward value, parent links and a
// backward closure. Node ids grow monotonically, so descending id order is a
// valid reverse topological order and backward() is a single sweep that
// visits each reached node exactly once. Gradients flow only through nodes
// whose ancestry contains a parameter leaf.
template <class Real>
class Tape {
 public:
  struct Node {
    Tensor<Real> value;                       // owned forward value
    const Tensor<Real>* external = nullptr;   // set for parameter leaves
    Tensor<Real> grad;                        // allocated during backward
    std::array<int, 3> parents{-1, -1, -1};
    int n_parents = 0;
    bool tracked = false;
    std::function<void(Tape&, int)> backward_fn;
  };

  const Tensor<Real>& value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
  }

  const std::vector<long>& shape(int id) const { return value(id).shape(); }

  bool tracked(int id) const { return nodes_[static_cast<std::size_t>(id)].tracked; }

  // Gradient buffer for a node, allocated on first touch. Returns nullptr for
  // untracked nodes so backward closures skip them.
  Tensor<Real>* grad_if_tracked(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.tracked) return nullptr;
    if (n.grad.numel() != value(id).numel()) n.grad = Tensor<Real>(value(id).shape());
    return &n.grad;
  }

  const Tensor<Real>& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

  std::size_t size() const { return nodes_.size(); }

  void reset() {
    nodes_.clear();
    param_refs_.clear();
    param_nodes_.clear();
  }

  // ---- leaves ----

  int leaf(Tensor<Real> v, bool track = false) {
    return push(std::move(v), {}, track, nullptr);
  }

  int param(Parameter<Real>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return it->second;
    Node n;
    n.external = &p.value;
    n.tracked = true;
    nodes_.push_back(std::move(n));
    int id = static_cast<int>(nodes_.size()) - 1;
    param_refs_.push_back({id, &p});
    param_nodes_.emplace(&p, id);
    return id;
  }

  // ---- ops ----

  int matmul(int a, int b) {
    const Tensor<Real>&A = value(a), &B = value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0))
      throw ShapeError("matmul: " + A.shape_str() + " x " + B.shape_str());
    const long m = A.dim(0), p = A.dim(1), n = B.dim(1);
    Tensor<Real> out({m, n});
    matmul_acc(A.data(), B.data(), out.data(), m, p, n);
    return push(std::move(out), {a, b}, tracked(a) || tracked(b), [m, p, n](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* ga = t.grad_if_tracked(t.parent(self, 0)))
        matmul_nt_acc(g.data(), t.value(t.parent(self, 1)).data(), ga->data(), m, n, p);
      if (auto* gb = t.grad_if_tracked(t.parent(self, 1)))
        matmul_tn_acc(t.value(t.parent(self, 0)).data(), g.data(), gb->data(), m, p, n);
    });
  }

  int add(int a, int b) {
    const Tensor<Real>&A = value(a), &B = value(b);
    if (!A.same_shape(B)) throw ShapeError("add: " + A.shape_str() + " vs " + B.shape_str());
    Tensor<Real> out(A.shape());
    for (long i = 0; i < A.numel(); ++i) out[i] = A[i] + B[i];
    return push(std::move(out), {a, b}, tracked(a) || tracked(b), [](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      for (int s = 0; s < 2; ++s)
        if (auto* gp = t.grad_if_tracked(t.parent(self, s)))
          for (long i = 0; i < g.numel(); ++i) (*gp)[i] += g[i];
    });
  }

  // x:[m,n] + bias:[n], broadcast over rows.
  int add_bias(int x, int bias) {
    const Tensor<Real>&X = value(x), &B = value(bias);
    if (X.rank() != 2 || B.rank() != 1 || X.dim(1) != B.dim(0))
      throw ShapeError("add_bias: " + X.shape_str() + " vs " + B.shape_str());
    const long m = X.dim(0), n = X.dim(1);
    Tensor<Real> out({m, n});
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < n; ++j) out.at(i, j) = X.at(i, j) + B[j];
    return push(std::move(out), {x, bias}, tracked(x) || tracked(bias), [m, n](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < m * n; ++i) (*gx)[i] += g[i];
      if (auto* gb = t.grad_if_tracked(t.parent(self, 1)))
        for (long i = 0; i < m; ++i)
          for (long j = 0; j < n; ++j) (*gb)[j] += g.at(i, j);
    });
  }

  // x:[m,n] + rows[r % cycle], used to add positional encodings across a
  // window-major batch. rows is a constant; no gradient flows to it.
  int add_cycled_rows(int x, Tensor<Real> rows) {
    const Tensor<Real>& X = value(x);
    if (X.rank() != 2 || rows.rank() != 2 || X.dim(1) != rows.dim(1) || X.dim(0) % rows.dim(0) != 0)
      throw ShapeError("add_cycled_rows: " + X.shape_str() + " vs " + rows.shape_str());
    const long m = X.dim(0), n = X.dim(1), cycle = rows.dim(0);
    Tensor<Real> out({m, n});
    for (long i = 0; i < m; ++i) {
      const Real* rrow = rows.data() + (i % cycle) * n;
      for (long j = 0; j < n; ++j) out.at(i, j) = X.at(i, j) + rrow[j];
    }
    return push(std::move(out), {x}, tracked(x), [](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
    });
  }

  int scale(int a, Real c) {
    const Tensor<Real>& A = value(a);
    Tensor<Real> out(A.shape());
    for (long i = 0; i < A.numel(); ++i) out[i] = A[i] * c;
    return push(std::move(out), {a}, tracked(a), [c](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* ga = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < g.numel(); ++i) (*ga)[i] += c * g[i];
    });
  }

  int relu(int a) {
    const Tensor<Real>& A = value(a);
    Tensor<Real> out(A.shape());
    for (long i = 0; i < A.numel(); ++i) out[i] = A[i] > Real(0) ? A[i] : Real(0);
    return push(std::move(out), {a}, tracked(a), [](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      const Tensor<Real>& in = t.value(t.parent(self, 0));
      if (auto* ga = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < g.numel(); ++i)
          if (in[i] > Real(0)) (*ga)[i] += g[i];
    });
  }

  int mul(int a, int b) {
    const Tensor<Real>&A = value(a), &B = value(b);
    if (!A.same_shape(B)) throw ShapeError("mul: " + A.shape_str() + " vs " + B.shape_str());
    Tensor<Real> out(A.shape());
    for (long i = 0; i < A.numel(); ++i) out[i] = A[i] * B[i];
    return push(std::move(out), {a, b}, tracked(a) || tracked(b), [](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      const Tensor<Real>&A = t.value(t.parent(self, 0)), &B = t.value(t.parent(self, 1));
      if (auto* ga = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < g.numel(); ++i) (*ga)[i] += g[i] * B[i];
      if (auto* gb = t.grad_if_tracked(t.parent(self, 1)))
        for (long i = 0; i < g.numel(); ++i) (*gb)[i] += g[i] * A[i];
    });
  }

  int sum(int a) {
    const Tensor<Real>& A = value(a);
    double s = 0;
    for (long i = 0; i < A.numel(); ++i) s += static_cast<double>(A[i]);
    return push(Tensor<Real>::scalar(static_cast<Real>(s)), {a}, tracked(a), [](Tape& t, int self) {
      const Real g = t.grad(self)[0];
      if (auto* ga = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < ga->numel(); ++i) (*ga)[i] += g;
    });
  }

  // Row gather from an embedding table: out[r] = table[ids[r]].
  int embedding(int table, std::vector<int> ids) {
    const Tensor<Real>& T = value(table);
    if (T.rank() != 2) throw ShapeError("embedding: table must be 2-d, got " + T.shape_str());
    const long d = T.dim(1), v = T.dim(0);
    for (int id : ids)
      if (id < 0 || id >= v) throw RangeError("embedding: id " + std::to_string(id) + " outside table of " + std::to_string(v));
    Tensor<Real> out({static_cast<long>(ids.size()), d});
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy_n(T.data() + static_cast<long>(ids[r]) * d, d, out.data() + static_cast<long>(r) * d);
    return push(std::move(out), {table}, tracked(table), [ids = std::move(ids), d](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* gt = t.grad_if_tracked(t.parent(self, 0)))
        for (std::size_t r = 0; r < ids.size(); ++r) {
          Real* dst = gt->data() + static_cast<long>(ids[r]) * d;
          const Real* src = g.data() + static_cast<long>(r) * d;
          for (long j = 0; j < d; ++j) dst[j] += src[j];
        }
    });
  }

  // Row-wise layer norm with learned gain and bias.
  int layer_norm(int x, int gain, int bias, Real eps) {
    const Tensor<Real>&X = value(x), &G = value(gain), &B = value(bias);
    if (X.rank() != 2 || G.rank() != 1 || B.rank() != 1 || G.dim(0) != X.dim(1) || B.dim(0) != X.dim(1))
      throw ShapeError("layer_norm: " + X.shape_str() + " with gain " + G.shape_str());
    const long m = X.dim(0), n = X.dim(1);
    Tensor<Real> out({m, n});
    auto xhat = std::make_shared<Tensor<Real>>(std::vector<long>{m, n});
    auto inv_sd = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(m));
    for (long i = 0; i < m; ++i) {
      const Real* row = X.data() + i * n;
      double mean = 0;
      for (long j = 0; j < n; ++j) mean += row[j];
      mean /= n;
      double var = 0;
      for (long j = 0; j < n; ++j) {
        double dlt = row[j] - mean;
        var += dlt * dlt;
      }
      var /= n;
      const double isd = 1.0 / std::sqrt(var + static_cast<double>(eps));
      (*inv_sd)[static_cast<std::size_t>(i)] = static_cast<Real>(isd);
      for (long j = 0; j < n; ++j) {
        Real xh = static_cast<Real>((row[j] - mean) * isd);
        xhat->at(i, j) = xh;
        out.at(i, j) = G[j] * xh + B[j];
      }
    }
    return push(std::move(out), {x, gain, bias}, tracked(x) || tracked(gain) || tracked(bias),
                [xhat, inv_sd, m, n](Tape& t, int self) {
                  const Tensor<Real>& g = t.grad(self);
                  const Tensor<Real>& G = t.value(t.parent(self, 1));
                  if (auto* gg = t.grad_if_tracked(t.parent(self, 1)))
                    for (long i = 0; i < m; ++i)
                      for (long j = 0; j < n; ++j) (*gg)[j] += g.at(i, j) * xhat->at(i, j);
                  if (auto* gb = t.grad_if_tracked(t.parent(self, 2)))
                    for (long i = 0; i < m; ++i)
                      for (long j = 0; j < n; ++j) (*gb)[j] += g.at(i, j);
                  if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
                    for (long i = 0; i < m; ++i) {
                      double mean_dxh = 0, mean_dxh_xh = 0;
                      for (long j = 0; j < n; ++j) {
                        double dxh = static_cast<double>(g.at(i, j)) * G[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xhat->at(i, j);
                      }
                      mean_dxh /= n;
                      mean_dxh_xh /= n;
                      const double isd = (*inv_sd)[static_cast<std::size_t>(i)];
                      for (long j = 0; j < n; ++j) {
                        double dxh = static_cast<double>(g.at(i, j)) * G[j];
                        gx->at(i, j) += static_cast<Real>(isd * (dxh - mean_dxh - xhat->at(i, j) * mean_dxh_xh));
                      }
                    }
                });
  }

  int softmax_rows(int x) {
    const Tensor<Real>& X = value(x);
    if (X.rank() != 2) throw ShapeError("softmax_rows: need 2-d, got " + X.shape_str());
    const long m = X.dim(0), n = X.dim(1);
    Tensor<Real> out({m, n});
    for (long i = 0; i < m; ++i) softmax_row(X.data() + i * n, out.data() + i * n, n);
    return push(std::move(out), {x}, tracked(x), [m, n](Tape& t, int self) {
      const Tensor<Real>&g = t.grad(self), &y = t.value(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < m; ++i) {
          double dot = 0;
          for (long j = 0; j < n; ++j) dot += static_cast<double>(g.at(i, j)) * y.at(i, j);
          for (long j = 0; j < n; ++j)
            gx->at(i, j) += static_cast<Real>(y.at(i, j) * (static_cast<double>(g.at(i, j)) - dot));
        }
    });
  }

  int log_softmax_rows(int x) {
    const Tensor<Real>& X = value(x);
    if (X.rank() != 2) throw ShapeError("log_softmax_rows: need 2-d, got " + X.shape_str());
    const long m = X.dim(0), n = X.dim(1);
    Tensor<Real> out({m, n});
    for (long i = 0; i < m; ++i) {
      const Real* row = X.data() + i * n;
      const double lse = log_sum_exp(row, n);
      for (long j = 0; j < n; ++j) out.at(i, j) = static_cast<Real>(row[j] - lse);
    }
    return push(std::move(out), {x}, tracked(x), [m, n](Tape& t, int self) {
      const Tensor<Real>&g = t.grad(self), &y = t.value(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < m; ++i) {
          double gsum = 0;
          for (long j = 0; j < n; ++j) gsum += g.at(i, j);
          for (long j = 0; j < n; ++j)
            gx->at(i, j) += static_cast<Real>(g.at(i, j) - std::exp(static_cast<double>(y.at(i, j))) * gsum);
        }
    });
  }

  // Mean over the batch of -log_softmax(logits)[target].
  int cross_entropy(int logits, std::vector<int> targets) {
    const Tensor<Real>& X = value(logits);
    if (X.rank() != 2 || X.dim(0) != static_cast<long>(targets.size()))
      throw ShapeError("cross_entropy: logits " + X.shape_str() + " vs " + std::to_string(targets.size()) + " targets");
    const long b = X.dim(0), n = X.dim(1);
    for (int tgt : targets)
      if (tgt < 0 || tgt >= n) throw RangeError("cross_entropy: target out of range");
    double loss = 0;
    for (long i = 0; i < b; ++i) {
      const Real* row = X.data() + i * n;
      loss += log_sum_exp(row, n) - static_cast<double>(row[targets[static_cast<std::size_t>(i)]]);
    }
    loss /= static_cast<double>(b);
    return push(Tensor<Real>::scalar(static_cast<Real>(loss)), {logits}, tracked(logits),
                [targets = std::move(targets), b, n](Tape& t, int self) {
                  const double gout = static_cast<double>(t.grad(self)[0]) / static_cast<double>(b);
                  const Tensor<Real>& X = t.value(t.parent(self, 0));
                  if (auto* gx = t.grad_if_tracked(t.parent(self, 0))) {
                    std::vector<Real> p(static_cast<std::size_t>(n));
                    for (long i = 0; i < b; ++i) {
                      softmax_row(X.data() + i * n, p.data(), n);
                      Real* grow = gx->data() + i * n;
                      for (long j = 0; j < n; ++j) grow[j] += static_cast<Real>(gout * p[static_cast<std::size_t>(j)]);
                      grow[targets[static_cast<std::size_t>(i)]] -= static_cast<Real>(gout);
                    }
                  }
                });
  }

  // Multi-head scaled dot-product attention with a strict causal mask.
  // q, k, v: [batch*len, d] in window-major row order; head h occupies the
  // column slice [h*dh, (h+1)*dh). Position t attends to positions <= t of
  // its own window only.
  int causal_attention(int q, int k, int v, long batch, long len, long heads) {
    const Tensor<Real>&Q = value(q), &K = value(k), &V = value(v);
    if (Q.rank() != 2 || !Q.same_shape(K) || !Q.same_shape(V))
      throw ShapeError("causal_attention: q " + Q.shape_str() + " k " + K.shape_str() + " v " + V.shape_str());
    if (Q.dim(0) != batch * len) throw ShapeError("causal_attention: rows != batch*len");
    const long d = Q.dim(1);
    if (heads <= 0 || d % heads != 0)
      throw ConfigError("causal_attention: width " + std::to_string(d) + " not divisible by " + std::to_string(heads) + " heads");
    const long dh = d / heads;
    const Real inv_scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dh)));

    Tensor<Real> out({batch * len, d});
    // Attention weights saved for backward: per (window, head) an LxL
    // row-major block, strictly lower-triangular-plus-diagonal.
    auto attn = std::make_shared<Tensor<Real>>(std::vector<long>{batch * heads, len * len});
    std::vector<Real> srow(static_cast<std::size_t>(len));
    for (long w = 0; w < batch; ++w) {
      const long base = w * len;
      for (long h = 0; h < heads; ++h) {
        const long off = h * dh;
        Real* a = attn->data() + (w * heads + h) * len * len;
        for (long t = 0; t < len; ++t) {
          const Real* qt = Q.data() + (base + t) * d + off;
          for (long j = 0; j <= t; ++j) {
            const Real* kj = K.data() + (base + j) * d + off;
            Real s = 0;
            for (long c = 0; c < dh; ++c) s += qt[c] * kj[c];
            srow[static_cast<std::size_t>(j)] = s * inv_scale;
          }
          softmax_row(srow.data(), a + t * len, t + 1);
          for (long j = t + 1; j < len; ++j) a[t * len + j] = Real(0);
          Real* orow = out.data() + (base + t) * d + off;
          for (long j = 0; j <= t; ++j) {
            const Real aw = a[t * len + j];
            const Real* vj = V.data() + (base + j) * d + off;
            for (long c = 0; c < dh; ++c) orow[c] += aw * vj[c];
          }
        }
      }
    }
    return push(std::move(out), {q, k, v}, tracked(q) || tracked(k) || tracked(v),
                [attn, batch, len, heads, dh, inv_scale](Tape& t, int self) {
                  const long d = heads * dh;
                  const Tensor<Real>& g = t.grad(self);
                  const Tensor<Real>&Q = t.value(t.parent(self, 0)), &K = t.value(t.parent(self, 1)),
                                    &V = t.value(t.parent(self, 2));
                  Tensor<Real>* gq = t.grad_if_tracked(t.parent(self, 0));
                  Tensor<Real>* gk = t.grad_if_tracked(t.parent(self, 1));
                  Tensor<Real>* gv = t.grad_if_tracked(t.parent(self, 2));
                  std::vector<double> da(static_cast<std::size_t>(len)), ds(static_cast<std::size_t>(len));
                  for (long w = 0; w < batch; ++w) {
                    const long base = w * len;
                    for (long h = 0; h < heads; ++h) {
                      const long off = h * dh;
                      const Real* a = attn->data() + (w * heads + h) * len * len;
                      for (long tpos = 0; tpos < len; ++tpos) {
                        const Real* go = g.data() + (base + tpos) * d + off;
                        // dV and dA.
                        double dot = 0;
                        for (long j = 0; j <= tpos; ++j) {
                          const Real* vj = V.data() + (base + j) * d + off;
                          double s = 0;
                          for (long c = 0; c < dh; ++c) s += static_cast<double>(go[c]) * vj[c];
                          da[static_cast<std::size_t>(j)] = s;
                          dot += s * a[tpos * len + j];
                          if (gv) {
                            Real* gvj = gv->data() + (base + j) * d + off;
                            const Real aw = a[tpos * len + j];
                            for (long c = 0; c < dh; ++c) gvj[c] += aw * go[c];
                          }
                        }
                        // Softmax backward restricted to the causal support.
                        for (long j = 0; j <= tpos; ++j)
                          ds[static_cast<std::size_t>(j)] =
                              a[tpos * len + j] * (da[static_cast<std::size_t>(j)] - dot);
                        const Real* qt = Q.data() + (base + tpos) * d + off;
                        for (long j = 0; j <= tpos; ++j) {
                          const Real dsj = static_cast<Real>(ds[static_cast<std::size_t>(j)] * inv_scale);
                          const Real* kj = K.data() + (base + j) * d + off;
                          if (gq) {
                            Real* gqt = gq->data() + (base + tpos) * d + off;
                            for (long c = 0; c < dh; ++c) gqt[c] += dsj * kj[c];
                          }
                          if (gk) {
                            Real* gkj = gk->data() + (base + j) * d + off;
                            for (long c = 0; c < dh; ++c) gkj[c] += dsj * qt[c];
                          }
                        }
                      }
                    }
                  }
                });
  }

  int select_rows(int x, std::vector<long> rows) {
    const Tensor<Real>& X = value(x);
    if (X.rank() != 2) throw ShapeError("select_rows: need 2-d, got " + X.shape_str());
    const long n = X.dim(1);
    for (long r : rows)
      if (r < 0 || r >= X.dim(0)) throw RangeError("select_rows: row out of range");
    Tensor<Real> out({static_cast<long>(rows.size()), n});
    for (std::size_t i = 0; i < rows.size(); ++i)
      std::copy_n(X.data() + rows[i] * n, n, out.data() + static_cast<long>(i) * n);
    return push(std::move(out), {x}, tracked(x), [rows = std::move(rows), n](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (std::size_t i = 0; i < rows.size(); ++i) {
          Real* dst = gx->data() + rows[i] * n;
          const Real* src = g.data() + static_cast<long>(i) * n;
          for (long j = 0; j < n; ++j) dst[j] += src[j];
        }
    });
  }

  // Metadata reshape; data is row-major contiguous so this is a copy with a
  // new shape.
  int reshape(int x, std::vector<long> new_shape) {
    const Tensor<Real>& X = value(x);
    if (Tensor<Real>::count(new_shape) != X.numel())
      throw ShapeError("reshape: " + X.shape_str() + " to incompatible shape");
    Tensor<Real> out(new_shape, std::vector<Real>(X.values()));
    return push(std::move(out), {x}, tracked(x), [](Tape& t, int self) {
      const Tensor<Real>& g = t.grad(self);
      if (auto* gx = t.grad_if_tracked(t.parent(self, 0)))
        for (long i = 0; i < g.numel(); ++i) (*gx)[i] += g[i];
    });
  }

  // ---- reverse sweep ----

  // Populates gradients on every parameter registered in this graph.
  void backward(int loss_id) {
    if (value(loss_id).numel() != 1)
      throw ValidationError("backward: loss must be scalar, got " + value(loss_id).shape_str());
    std::vector<char> reached(nodes_.size(), 0);
    reached[static_cast<std::size_t>(loss_id)] = 1;
    if (auto* g = grad_if_tracked(loss_id)) (*g)[0] = Real(1);
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!reached[static_cast<std::size_t>(id)] || !n.tracked) continue;
      for (int s = 0; s < n.n_parents; ++s) reached[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(s)])] = 1;
      if (n.backward_fn) n.backward_fn(*this, id);
    }
    for (auto& ref : param_refs_) {
      Node& n = nodes_[static_cast<std::size_t>(ref.node)];
      if (n.grad.numel() == ref.param->value.numel()) {
        Real* dst = ref.param->grad.data();
        const Real* src = n.grad.data();
        for (long i = 0; i < n.grad.numel(); ++i) dst[i] += src[i];
      }
      ref.param->grad_ready = true;
    }
  }

  int parent(int id, int slot) const { return nodes_[static_cast<std::size_t>(id)].parents[static_cast<std::size_t>(slot)]; }

  // Numerically stabilized helpers shared by ops and the metric path.
  static void softmax_row(const Real* x, Real* out, long n) {
    Real mx = x[0];
    for (long j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double total = 0;
    for (long j = 0; j < n; ++j) {
      double e = std::exp(static_cast<double>(x[j] - mx));
      out[j] = static_cast<Real>(e);
      total += e;
    }
    const double inv = 1.0 / total;
    for (long j = 0; j < n; ++j) out[j] = static_cast<Real>(out[j] * inv);
  }

  static double log_sum_exp(const Real* x, long n) {
    Real mx = x[0];
    for (long j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double total = 0;
    for (long j = 0; j < n; ++j) total += std::exp(static_cast<double>(x[j] - mx));
    return static_cast<double>(mx) + std::log(total);
  }

 private:
  struct ParamRef {
    int node;
    Parameter<Real>* param;
  };

  int push(Tensor<Real> value, std::initializer_list<int> parents, bool tracked,
           std::function<void(Tape&, int)> backward_fn) {
#ifndef NDEBUG
    if (!value.all_finite()) throw StateError("non-finite value produced by forward op");
#endif
    Node n;
    n.value = std::move(value);
    n.tracked = tracked;
    for (int p : parents) n.parents[static_cast<std::size_t>(n.n_parents++)] = p;
    n.backward_fn = std::move(backward_fn);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::vector<ParamRef> param_refs_;
  std::unordered_map<const void*, int> param_nodes_;
};

}  // namespace actionlm::nn
