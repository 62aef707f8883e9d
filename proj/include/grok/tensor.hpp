#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grok/common.hpp"
#include "grok/kernels.hpp"

// Dense row-major tensors with reverse-mode autodiff. Ops record their parents
// and a pullback; backward() walks the graph in reverse creation order, then
// frees the recorded graph so only leaf grads survive. Templated on the scalar
// so training runs in 32-bit floats while gradient checks instantiate the same
// code in 64-bit.
namespace grok::nn {

using Shape = std::vector<long>;

inline long numel(const Shape& s) {
  long n = 1;
  for (long d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s);

template <class S>
class Tensor;

template <class S>
struct Node {
  Shape shape;
  std::vector<S> value;
  std::vector<S> grad;  // allocated on first touch, same length as value
  bool requires_grad = false;
  long id = 0;
  std::vector<Tensor<S>> parents;
  std::function<void(Node<S>&)> pullback;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), S(0));
  }
};

namespace detail {
long next_node_id();
}

template <class S>
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), S(0), requires_grad);
  }

  static Tensor filled(Shape shape, S v, bool requires_grad = false) {
    Tensor t;
    t.n_ = std::make_shared<Node<S>>();
    t.n_->shape = std::move(shape);
    t.n_->value.assign(numel(t.n_->shape), v);
    t.n_->requires_grad = requires_grad;
    t.n_->id = detail::next_node_id();
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<S> data, bool requires_grad = false) {
    check(numel(shape) == static_cast<long>(data.size()), Err::ShapeMismatch,
          "data length does not match shape " + shape_str(shape));
    Tensor t;
    t.n_ = std::make_shared<Node<S>>();
    t.n_->shape = std::move(shape);
    t.n_->value = std::move(data);
    t.n_->requires_grad = requires_grad;
    t.n_->id = detail::next_node_id();
    return t;
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  long size() const { return static_cast<long>(n_->value.size()); }
  long dim(int i) const { return n_->shape[i]; }
  int rank() const { return static_cast<int>(n_->shape.size()); }

  std::span<S> data() { return n_->value; }
  std::span<const S> data() const { return n_->value; }
  S item() const {
    check(size() == 1, Err::NotScalar, "item() on tensor of shape " + shape_str(shape()));
    return n_->value[0];
  }

  bool has_grad() const { return !n_->grad.empty(); }
  std::span<S> grad() {
    n_->ensure_grad();
    return n_->grad;
  }
  std::span<const S> grad_view() const { return n_->grad; }
  void zero_grad() {
    if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), S(0));
  }

  bool requires_grad() const { return n_->requires_grad; }
  void set_requires_grad(bool v) { n_->requires_grad = v; }

  Node<S>* node() const { return n_.get(); }

private:
  std::shared_ptr<Node<S>> n_;
};

// Evaluation without bookkeeping: while disabled, ops record no graph, so
// intermediates free as soon as their handles drop. Thread-local because
// distinct graphs may run on distinct threads.
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}
inline bool grad_enabled() { return grad_enabled_flag(); }
inline void set_grad_enabled(bool on) { grad_enabled_flag() = on; }

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Shared op plumbing: the output requires grad iff any parent does, and only
// then is the graph edge recorded.
template <class S>
Tensor<S> make_op(Shape shape, std::vector<Tensor<S>> parents,
                  std::function<void(Node<S>&)> pullback) {
  Tensor<S> out = Tensor<S>::zeros(std::move(shape));
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs && grad_enabled()) {
    out.set_requires_grad(true);
    out.node()->parents = std::move(parents);
    out.node()->pullback = std::move(pullback);
  }
  return out;
}

template <class S>
void backward(const Tensor<S>& loss);

// ---- ops ----

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

// b's shape must equal a trailing suffix of a's shape (same-shape included)
template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);

template <class S>
Tensor<S> scale(const Tensor<S>& x, S c);

template <class S>
Tensor<S> sum(const Tensor<S>& x);

template <class S>
Tensor<S> softmax_rows(const Tensor<S>& x);

template <class S>
Tensor<S> causal_mask(const Tensor<S>& scores);

template <class S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias,
                     S eps = S(1e-5));

template <class S>
Tensor<S> gelu(const Tensor<S>& x);

template <class S>
Tensor<S> relu(const Tensor<S>& x);

template <class S>
Tensor<S> embedding_gather(const Tensor<S>& table, const std::vector<int>& ids,
                           Shape ids_shape);

template <class S>
Tensor<S> transpose(const Tensor<S>& x, int d0, int d1);

template <class S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape);

// x: [B, T, D] -> [B, D] picking one time index
template <class S>
Tensor<S> take_position(const Tensor<S>& x, long t);

template <class S>
Tensor<S> cross_entropy_from_logits(const Tensor<S>& logits, const std::vector<int>& targets);

// ---- implementation ----

template <class S>
void backward(const Tensor<S>& loss) {
  check(loss.defined(), Err::NotScalar, "backward on undefined tensor");
  check(loss.size() == 1, Err::NotScalar,
        "backward needs a scalar, got shape " + shape_str(loss.shape()));
  check(loss.requires_grad(), Err::NotScalar, "loss does not depend on any parameter");

  // Reachable subgraph; reverse creation order is a valid topological order.
  // order holds owning handles: clearing a child's parents below must not
  // destroy a node whose pullback has yet to run.
  std::vector<Tensor<S>> order;
  std::vector<Tensor<S>> stack{loss};
  auto seen = [&](const Node<S>* n) {
    for (const auto& t : order) {
      if (t.node() == n) return true;
    }
    return false;
  };
  while (!stack.empty()) {
    Tensor<S> t = stack.back();
    stack.pop_back();
    if (seen(t.node())) continue;
    order.push_back(t);
    for (const auto& p : t.node()->parents) {
      if (p.requires_grad()) stack.push_back(p);
    }
  }
  std::sort(order.begin(), order.end(), [](const Tensor<S>& x, const Tensor<S>& y) {
    return x.node()->id > y.node()->id;
  });

  loss.node()->ensure_grad();
  loss.node()->grad[0] += S(1);
  for (auto& t : order) {
    Node<S>* n = t.node();
    if (n->pullback) {
      n->pullback(*n);
      n->pullback = nullptr;
      n->parents.clear();  // free the graph; leaf grads stay
    }
  }
}

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  check(a.rank() >= 2 && b.rank() >= 2, Err::ShapeMismatch, "matmul needs rank >= 2");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  long m = sa[a.rank() - 2], k = sa[a.rank() - 1];
  long kb = sb[b.rank() - 2], n = sb[b.rank() - 1];
  check(k == kb, Err::ShapeMismatch,
        "matmul inner dims disagree: " + shape_str(sa) + " x " + shape_str(sb));
  bool b_batched = b.rank() > 2;
  if (b_batched) {
    check(std::equal(sa.begin(), sa.end() - 2, sb.begin(), sb.end() - 2),
          Err::ShapeMismatch, "matmul batch dims disagree");
  }
  long batch = 1;
  for (int i = 0; i + 2 < a.rank(); ++i) batch *= sa[i];

  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);

  auto out = make_op<S>(out_shape, {a, b}, [m, k, n, batch, b_batched](Node<S>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const S* g = self.grad.data();
    const S* av = pa.data().data();
    const S* bv = pb.data().data();
    if (pa.requires_grad()) {
      S* da = pa.grad().data();
      for (long gidx = 0; gidx < batch; ++gidx) {
        kernels::gemm_nt(da + gidx * m * k, g + gidx * m * n,
                         bv + (b_batched ? gidx * k * n : 0), m, n, k);
      }
    }
    if (pb.requires_grad()) {
      S* db = pb.grad().data();
      if (b_batched) {
        for (long gidx = 0; gidx < batch; ++gidx) {
          kernels::gemm_tn(db + gidx * k * n, av + gidx * m * k, g + gidx * m * n, m, k, n);
        }
      } else {
        kernels::gemm_tn(db, av, g, batch * m, k, n);
      }
    }
  });
  const S* av = a.data().data();
  const S* bv = b.data().data();
  S* ov = out.data().data();
  for (long gidx = 0; gidx < batch; ++gidx) {
    kernels::gemm_nn(ov + gidx * m * n, av + gidx * m * k,
                     bv + (b_batched ? gidx * k * n : 0), m, k, n);
  }
  return out;
}

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  check(sb.size() <= sa.size() &&
            std::equal(sb.begin(), sb.end(), sa.end() - sb.size()),
        Err::ShapeMismatch,
        "add: " + shape_str(sb) + " is not a trailing suffix of " + shape_str(sa));
  long inner = numel(sb);
  long outer = numel(sa) / std::max<long>(inner, 1);

  auto out = make_op<S>(sa, {a, b}, [outer, inner](Node<S>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const S* g = self.grad.data();
    if (pa.requires_grad()) {
      S* da = pa.grad().data();
      kernels::parallel_for(outer * inner, [=](long i) { da[i] += g[i]; });
    }
    if (pb.requires_grad()) {
      S* db = pb.grad().data();
      kernels::parallel_for(inner, [=](long j) {
        S acc = 0;
        for (long o = 0; o < outer; ++o) acc += g[o * inner + j];
        db[j] += acc;
      });
    }
  });
  const S* av = a.data().data();
  const S* bv = b.data().data();
  S* ov = out.data().data();
  kernels::parallel_for(outer, [=](long o) {
    for (long j = 0; j < inner; ++j) ov[o * inner + j] = av[o * inner + j] + bv[j];
  });
  return out;
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  check(a.shape() == b.shape(), Err::ShapeMismatch, "mul needs identical shapes");
  long n = a.size();
  auto out = make_op<S>(a.shape(), {a, b}, [n](Node<S>& self) {
    auto& pa = self.parents[0];
    auto& pb = self.parents[1];
    const S* g = self.grad.data();
    const S* av = pa.data().data();
    const S* bv = pb.data().data();
    if (pa.requires_grad()) {
      S* da = pa.grad().data();
      kernels::parallel_for(n, [=](long i) { da[i] += g[i] * bv[i]; });
    }
    if (pb.requires_grad()) {
      S* db = pb.grad().data();
      kernels::parallel_for(n, [=](long i) { db[i] += g[i] * av[i]; });
    }
  });
  const S* av = a.data().data();
  const S* bv = b.data().data();
  S* ov = out.data().data();
  kernels::parallel_for(n, [=](long i) { ov[i] = av[i] * bv[i]; });
  return out;
}

template <class S>
Tensor<S> scale(const Tensor<S>& x, S c) {
  long n = x.size();
  auto out = make_op<S>(x.shape(), {x}, [n, c](Node<S>& self) {
    auto& px = self.parents[0];
    const S* g = self.grad.data();
    S* dx = px.grad().data();
    kernels::parallel_for(n, [=](long i) { dx[i] += c * g[i]; });
  });
  const S* xv = x.data().data();
  S* ov = out.data().data();
  kernels::parallel_for(n, [=](long i) { ov[i] = c * xv[i]; });
  return out;
}

template <class S>
Tensor<S> sum(const Tensor<S>& x) {
  long n = x.size();
  auto out = make_op<S>(Shape{1}, {x}, [n](Node<S>& self) {
    auto& px = self.parents[0];
    S g = self.grad[0];
    S* dx = px.grad().data();
    kernels::parallel_for(n, [=](long i) { dx[i] += g; });
  });
  const S* xv = x.data().data();
  S acc = 0;
  for (long i = 0; i < n; ++i) acc += xv[i];
  out.data()[0] = acc;
  return out;
}

template <class S>
Tensor<S> softmax_rows(const Tensor<S>& x) {
  check(x.rank() >= 1, Err::ShapeMismatch, "softmax needs rank >= 1");
  long cols = x.dim(x.rank() - 1);
  long rows = x.size() / cols;
  auto out = make_op<S>(x.shape(), {x}, [rows, cols](Node<S>& self) {
    auto& px = self.parents[0];
    kernels::softmax_rows_bwd(px.grad().data(), self.value.data(), self.grad.data(),
                              rows, cols);
  });
  kernels::softmax_rows_fwd(out.data().data(), x.data().data(), rows, cols);
  return out;
}

template <class S>
Tensor<S> causal_mask(const Tensor<S>& scores) {
  check(scores.rank() >= 2, Err::ShapeMismatch, "causal_mask needs rank >= 2");
  long t1 = scores.dim(scores.rank() - 2);
  long t2 = scores.dim(scores.rank() - 1);
  check(t1 == t2, Err::ShapeMismatch, "causal_mask needs square trailing dims");
  long mats = scores.size() / (t1 * t2);
  const S ninf = -std::numeric_limits<S>::infinity();

  auto out = make_op<S>(scores.shape(), {scores}, [mats, t1, t2](Node<S>& self) {
    auto& px = self.parents[0];
    const S* g = self.grad.data();
    S* dx = px.grad().data();
    kernels::parallel_for(mats * t1, [=](long r) {
      long i = r % t1;
      const S* gr = g + r * t2;
      S* dr = dx + r * t2;
      for (long j = 0; j <= i; ++j) dr[j] += gr[j];
    });
  });
  const S* xv = scores.data().data();
  S* ov = out.data().data();
  kernels::parallel_for(mats * t1, [=](long r) {
    long i = r % t1;
    const S* xr = xv + r * t2;
    S* orow = ov + r * t2;
    for (long j = 0; j < t2; ++j) orow[j] = j <= i ? xr[j] : ninf;
  });
  return out;
}

template <class S>
Tensor<S> layer_norm(const Tensor<S>& x, const Tensor<S>& gain, const Tensor<S>& bias,
                     S eps) {
  long cols = x.dim(x.rank() - 1);
  check(gain.rank() == 1 && gain.dim(0) == cols && bias.rank() == 1 && bias.dim(0) == cols,
        Err::ShapeMismatch, "layer_norm gain/bias must be [cols]");
  long rows = x.size() / cols;
  auto mean = std::make_shared<std::vector<S>>(rows);
  auto rstd = std::make_shared<std::vector<S>>(rows);

  auto out = make_op<S>(x.shape(), {x, gain, bias}, [rows, cols, mean, rstd](Node<S>& self) {
    auto& px = self.parents[0];
    auto& pg = self.parents[1];
    auto& pb = self.parents[2];
    const S* xv = px.data().data();
    const S* g = self.grad.data();
    if (pg.requires_grad() || pb.requires_grad()) {
      kernels::layer_norm_bwd_gb(pg.grad().data(), pb.grad().data(), xv, mean->data(),
                                 rstd->data(), g, rows, cols);
    }
    if (px.requires_grad()) {
      kernels::layer_norm_bwd_x(px.grad().data(), xv, mean->data(), rstd->data(),
                                pg.data().data(), g, rows, cols);
    }
  });
  kernels::layer_norm_fwd(out.data().data(), mean->data(), rstd->data(), x.data().data(),
                          gain.data().data(), bias.data().data(), rows, cols, eps);
  return out;
}

template <class S>
Tensor<S> gelu(const Tensor<S>& x) {
  long n = x.size();
  auto out = make_op<S>(x.shape(), {x}, [n](Node<S>& self) {
    auto& px = self.parents[0];
    kernels::gelu_bwd(px.grad().data(), px.data().data(), self.grad.data(), n);
  });
  kernels::gelu_fwd(out.data().data(), x.data().data(), n);
  return out;
}

template <class S>
Tensor<S> relu(const Tensor<S>& x) {
  long n = x.size();
  auto out = make_op<S>(x.shape(), {x}, [n](Node<S>& self) {
    auto& px = self.parents[0];
    kernels::relu_bwd(px.grad().data(), px.data().data(), self.grad.data(), n);
  });
  kernels::relu_fwd(out.data().data(), x.data().data(), n);
  return out;
}

template <class S>
Tensor<S> embedding_gather(const Tensor<S>& table, const std::vector<int>& ids,
                           Shape ids_shape) {
  check(table.rank() == 2, Err::ShapeMismatch, "embedding table must be rank 2");
  check(numel(ids_shape) == static_cast<long>(ids.size()), Err::ShapeMismatch,
        "ids length does not match ids_shape");
  long vocab = table.dim(0), dim = table.dim(1);
  for (int id : ids) {
    check(id >= 0 && id < vocab, Err::IndexOutOfRange,
          "token id " + std::to_string(id) + " outside vocab of " + std::to_string(vocab));
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(dim);
  long n_ids = static_cast<long>(ids.size());
  auto ids_copy = std::make_shared<std::vector<int>>(ids);

  auto out = make_op<S>(out_shape, {table}, [n_ids, dim, ids_copy](Node<S>& self) {
    auto& pt = self.parents[0];
    kernels::embedding_scatter_add(pt.grad().data(), ids_copy->data(), self.grad.data(),
                                   n_ids, dim);
  });
  kernels::embedding_gather(out.data().data(), table.data().data(), ids_copy->data(),
                            n_ids, dim);
  return out;
}

namespace detail {

// dst gets src_shape with d0 and d1 swapped; generic strided gather. The
// accumulate variant is the adjoint used for the gradient.
template <class S, bool Accumulate>
void permute_impl(S* dst, const S* src, const Shape& src_shape, int d0, int d1) {
  int r = static_cast<int>(src_shape.size());
  Shape dst_shape = src_shape;
  std::swap(dst_shape[d0], dst_shape[d1]);
  std::vector<long> src_strides(r, 1), dst_strides(r, 1);
  for (int i = r - 2; i >= 0; --i) src_strides[i] = src_strides[i + 1] * src_shape[i + 1];
  for (int i = r - 2; i >= 0; --i) dst_strides[i] = dst_strides[i + 1] * dst_shape[i + 1];
  long n = numel(src_shape);
  kernels::parallel_for(n, [=](long di) {
    long rem = di;
    long si = 0;
    for (int ax = 0; ax < r; ++ax) {
      long idx = rem / dst_strides[ax];
      rem %= dst_strides[ax];
      int src_ax = ax == d0 ? d1 : (ax == d1 ? d0 : ax);
      si += idx * src_strides[src_ax];
    }
    if constexpr (Accumulate) {
      dst[di] += src[si];
    } else {
      dst[di] = src[si];
    }
  });
}

template <class S>
void permute_copy(S* dst, const S* src, const Shape& src_shape, int d0, int d1) {
  permute_impl<S, false>(dst, src, src_shape, d0, d1);
}

template <class S>
void permute_copy_add(S* dst, const S* src, const Shape& src_shape, int d0, int d1) {
  permute_impl<S, true>(dst, src, src_shape, d0, d1);
}

}  // namespace detail

template <class S>
Tensor<S> transpose(const Tensor<S>& x, int d0, int d1) {
  int r = x.rank();
  check(d0 >= 0 && d0 < r && d1 >= 0 && d1 < r && d0 != d1, Err::ShapeMismatch,
        "transpose axes out of range");
  Shape out_shape = x.shape();
  std::swap(out_shape[d0], out_shape[d1]);
  Shape in_shape = x.shape();

  auto out = make_op<S>(out_shape, {x}, [out_shape, d0, d1](Node<S>& self) {
    auto& px = self.parents[0];
    // transposing the grad back is the exact adjoint
    detail::permute_copy_add(px.grad().data(), self.grad.data(), out_shape, d0, d1);
  });
  detail::permute_copy(out.data().data(), x.data().data(), in_shape, d0, d1);
  return out;
}

template <class S>
Tensor<S> reshape(const Tensor<S>& x, Shape shape) {
  check(numel(shape) == x.size(), Err::ShapeMismatch,
        "reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) + " changes size");
  long n = x.size();
  auto out = make_op<S>(shape, {x}, [n](Node<S>& self) {
    auto& px = self.parents[0];
    const S* g = self.grad.data();
    S* dx = px.grad().data();
    kernels::parallel_for(n, [=](long i) { dx[i] += g[i]; });
  });
  std::copy(x.data().begin(), x.data().end(), out.data().begin());
  return out;
}

template <class S>
Tensor<S> take_position(const Tensor<S>& x, long t) {
  check(x.rank() == 3, Err::ShapeMismatch, "take_position expects [batch, time, dim]");
  long b = x.dim(0), tt = x.dim(1), d = x.dim(2);
  check(t >= 0 && t < tt, Err::IndexOutOfRange, "position out of range");
  auto out = make_op<S>(Shape{b, d}, {x}, [b, tt, d, t](Node<S>& self) {
    auto& px = self.parents[0];
    const S* g = self.grad.data();
    S* dx = px.grad().data();
    kernels::parallel_for(b, [=](long i) {
      for (long j = 0; j < d; ++j) dx[(i * tt + t) * d + j] += g[i * d + j];
    });
  });
  const S* xv = x.data().data();
  S* ov = out.data().data();
  kernels::parallel_for(b, [=](long i) {
    for (long j = 0; j < d; ++j) ov[i * d + j] = xv[(i * tt + t) * d + j];
  });
  return out;
}

template <class S>
Tensor<S> cross_entropy_from_logits(const Tensor<S>& logits, const std::vector<int>& targets) {
  check(logits.rank() == 2, Err::ShapeMismatch, "logits must be [batch, vocab]");
  long rows = logits.dim(0), cols = logits.dim(1);
  check(rows == static_cast<long>(targets.size()), Err::ShapeMismatch,
        "target count does not match batch");
  for (int t : targets) {
    check(t >= 0 && t < cols, Err::IndexOutOfRange, "target outside vocab");
  }
  auto lse = std::make_shared<std::vector<S>>(rows);
  auto tgt = std::make_shared<std::vector<int>>(targets);

  auto out = make_op<S>(Shape{1}, {logits}, [rows, cols, lse, tgt](Node<S>& self) {
    auto& pl = self.parents[0];
    S gscale = self.grad[0] / static_cast<S>(rows);
    kernels::cross_entropy_bwd(pl.grad().data(), pl.data().data(), lse->data(),
                               tgt->data(), rows, cols, gscale);
  });
  std::vector<S> row_loss(rows);
  kernels::cross_entropy_fwd(row_loss.data(), lse->data(), logits.data().data(),
                             tgt->data(), rows, cols);
  S acc = 0;
  for (long i = 0; i < rows; ++i) acc += row_loss[i];
  out.data()[0] = acc / static_cast<S>(rows);
  return out;
}

}  // namespace grok::nn
