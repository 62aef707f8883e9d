#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "grok/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

// Dense kernels behind the tensor ops. Every kernel exists in one body that
// runs either serially or OpenMP-parallel over independent output rows, and
// per output element the summation order is identical in both modes, so
// results are bitwise equal no matter the thread count. The ref namespace
// keeps naive loop-nest versions with the same per-element order; tests
// compare the fast paths against them bitwise.
namespace grok::kernels {

enum class Exec { serial, parallel };

Exec execution();
void set_execution(Exec e);

// Resolves GROK_THREADS (if set) into the OpenMP thread count. Called once
// lazily; safe to call again after changing the environment.
void init_threads();
int thread_count();

template <class F>
void parallel_for(long n, F&& f) {
  if (execution() == Exec::parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) f(i);
    return;
#endif
  }
  for (long i = 0; i < n; ++i) f(i);
}

// C[m,n] += A[m,k] * B[k,n]
template <class S>
void gemm_nn(S* c, const S* a, const S* b, long m, long k, long n) {
  parallel_for(m, [=](long i) {
    S* crow = c + i * n;
    const S* arow = a + i * k;
    for (long t = 0; t < k; ++t) {
      S av = arow[t];
      const S* brow = b + t * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  });
}

// C[m,k] += A[m,n] * B[k,n]^T. Runs as gemm_nn against a transposed copy of B
// so the inner loop stays unit-stride; the per-element sum order (ascending t)
// matches the naive dot-product version.
template <class S>
void gemm_nt(S* c, const S* a, const S* b, long m, long n, long k) {
  std::vector<S> bt(static_cast<size_t>(n) * k);
  parallel_for(k, [&](long j) {
    for (long t = 0; t < n; ++t) bt[t * k + j] = b[j * n + t];
  });
  const S* btp = bt.data();
  parallel_for(m, [=](long i) {
    S* crow = c + i * k;
    const S* arow = a + i * n;
    for (long t = 0; t < n; ++t) {
      S av = arow[t];
      const S* brow = btp + t * k;
      for (long j = 0; j < k; ++j) crow[j] += av * brow[j];
    }
  });
}

// C[k,n] += A[m,k]^T * B[m,n]
template <class S>
void gemm_tn(S* c, const S* a, const S* b, long m, long k, long n) {
  parallel_for(k, [=](long t) {
    S* crow = c + t * n;
    for (long i = 0; i < m; ++i) {
      S av = a[i * k + t];
      const S* brow = b + i * n;
      for (long j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  });
}

template <class S>
void softmax_rows_fwd(S* y, const S* x, long rows, long cols) {
  parallel_for(rows, [=](long i) {
    const S* xr = x + i * cols;
    S* yr = y + i * cols;
    S mx = xr[0];
    for (long j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
    S sum = 0;
    for (long j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    S inv = S(1) / sum;
    for (long j = 0; j < cols; ++j) yr[j] *= inv;
  });
}

template <class S>
void softmax_rows_bwd(S* dx, const S* y, const S* dy, long rows, long cols) {
  parallel_for(rows, [=](long i) {
    const S* yr = y + i * cols;
    const S* gr = dy + i * cols;
    S* dr = dx + i * cols;
    S dot = 0;
    for (long j = 0; j < cols; ++j) dot += yr[j] * gr[j];
    for (long j = 0; j < cols; ++j) dr[j] += yr[j] * (gr[j] - dot);
  });
}

template <class S>
void layer_norm_fwd(S* y, S* mean, S* rstd, const S* x, const S* gain, const S* bias,
                    long rows, long cols, S eps) {
  parallel_for(rows, [=](long i) {
    const S* xr = x + i * cols;
    S* yr = y + i * cols;
    S mu = 0;
    for (long j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<S>(cols);
    S var = 0;
    for (long j = 0; j < cols; ++j) {
      S d = xr[j] - mu;
      var += d * d;
    }
    var /= static_cast<S>(cols);
    S r = S(1) / std::sqrt(var + eps);
    mean[i] = mu;
    rstd[i] = r;
    for (long j = 0; j < cols; ++j) yr[j] = (xr[j] - mu) * r * gain[j] + bias[j];
  });
}

template <class S>
void layer_norm_bwd_x(S* dx, const S* x, const S* mean, const S* rstd, const S* gain,
                      const S* dy, long rows, long cols) {
  parallel_for(rows, [=](long i) {
    const S* xr = x + i * cols;
    const S* gr = dy + i * cols;
    S* dr = dx + i * cols;
    S mu = mean[i], r = rstd[i];
    S m1 = 0, m2 = 0;
    for (long j = 0; j < cols; ++j) {
      S xh = (xr[j] - mu) * r;
      S dxh = gr[j] * gain[j];
      m1 += dxh;
      m2 += dxh * xh;
    }
    m1 /= static_cast<S>(cols);
    m2 /= static_cast<S>(cols);
    for (long j = 0; j < cols; ++j) {
      S xh = (xr[j] - mu) * r;
      S dxh = gr[j] * gain[j];
      dr[j] += r * (dxh - m1 - xh * m2);
    }
  });
}

// gain/bias grads reduce over rows; parallel across columns keeps each sum's
// order fixed (ascending rows).
template <class S>
void layer_norm_bwd_gb(S* dgain, S* dbias, const S* x, const S* mean, const S* rstd,
                       const S* dy, long rows, long cols) {
  parallel_for(cols, [=](long j) {
    S sg = 0, sb = 0;
    for (long i = 0; i < rows; ++i) {
      S xh = (x[i * cols + j] - mean[i]) * rstd[i];
      sg += dy[i * cols + j] * xh;
      sb += dy[i * cols + j];
    }
    dgain[j] += sg;
    dbias[j] += sb;
  });
}

template <class S>
void gelu_fwd(S* y, const S* x, long n) {
  parallel_for(n, [=](long i) {
    S v = x[i];
    y[i] = S(0.5) * v * (S(1) + std::erf(v * S(0.70710678118654752440)));
  });
}

template <class S>
void gelu_bwd(S* dx, const S* x, const S* dy, long n) {
  parallel_for(n, [=](long i) {
    S v = x[i];
    S cdf = S(0.5) * (S(1) + std::erf(v * S(0.70710678118654752440)));
    S pdf = std::exp(S(-0.5) * v * v) * S(0.39894228040143267794);
    dx[i] += dy[i] * (cdf + v * pdf);
  });
}

template <class S>
void relu_fwd(S* y, const S* x, long n) {
  parallel_for(n, [=](long i) { y[i] = x[i] > S(0) ? x[i] : S(0); });
}

template <class S>
void relu_bwd(S* dx, const S* x, const S* dy, long n) {
  parallel_for(n, [=](long i) { dx[i] += x[i] > S(0) ? dy[i] : S(0); });
}

// loss contributions per row: lse(logits_i) - logits_i[target_i]
template <class S>
void cross_entropy_fwd(S* row_loss, S* lse, const S* logits, const int* targets,
                       long rows, long cols) {
  parallel_for(rows, [=](long i) {
    const S* lr = logits + i * cols;
    S mx = lr[0];
    for (long j = 1; j < cols; ++j) mx = lr[j] > mx ? lr[j] : mx;
    S sum = 0;
    for (long j = 0; j < cols; ++j) sum += std::exp(lr[j] - mx);
    S l = mx + std::log(sum);
    lse[i] = l;
    row_loss[i] = l - lr[targets[i]];
  });
}

template <class S>
void cross_entropy_bwd(S* dlogits, const S* logits, const S* lse, const int* targets,
                       long rows, long cols, S gscale) {
  parallel_for(rows, [=](long i) {
    const S* lr = logits + i * cols;
    S* dr = dlogits + i * cols;
    for (long j = 0; j < cols; ++j) {
      S p = std::exp(lr[j] - lse[i]);
      dr[j] += gscale * (p - (j == targets[i] ? S(1) : S(0)));
    }
  });
}

template <class S>
void embedding_gather(S* y, const S* table, const int* ids, long n_ids, long dim) {
  parallel_for(n_ids, [=](long i) {
    const S* src = table + static_cast<long>(ids[i]) * dim;
    S* dst = y + i * dim;
    for (long d = 0; d < dim; ++d) dst[d] = src[d];
  });
}

// Scatter-add transpose of the gather. Parallel across the feature dimension:
// duplicate ids collide on the same table row, never on the same element.
template <class S>
void embedding_scatter_add(S* dtable, const int* ids, const S* dy, long n_ids, long dim) {
  parallel_for(dim, [=](long d) {
    for (long i = 0; i < n_ids; ++i) {
      dtable[static_cast<long>(ids[i]) * dim + d] += dy[i * dim + d];
    }
  });
}

// Decoupled weight decay, then the bias-corrected Adam step. row_mask (when
// non-null, one flag per row of row_len elements) gates both: masked-off rows
// must stay bitwise untouched.
template <class S>
void adamw_update(S* w, const S* g, S* m, S* v, long n, S lr, S wd, S beta1, S beta2,
                  S eps, long t, const uint8_t* row_mask, long row_len) {
  S bc1 = S(1) - std::pow(beta1, static_cast<S>(t));
  S bc2 = S(1) - std::pow(beta2, static_cast<S>(t));
  parallel_for(n, [=](long i) {
    if (row_mask && row_mask[i / row_len] == 0) return;
    w[i] -= lr * wd * w[i];
    S gi = g[i];
    m[i] = beta1 * m[i] + (S(1) - beta1) * gi;
    v[i] = beta2 * v[i] + (S(1) - beta2) * gi * gi;
    S mhat = m[i] / bc1;
    S vhat = v[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  });
}

// Naive loop nests with the same per-element summation order as the fast
// kernels; the equivalence tests and the benchmark run against these.
namespace ref {

template <class S>
void gemm_nn(S* c, const S* a, const S* b, long m, long k, long n) {
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < n; ++j) {
      S acc = c[i * n + j];
      for (long t = 0; t < k; ++t) acc += a[i * k + t] * b[t * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <class S>
void gemm_nt(S* c, const S* a, const S* b, long m, long n, long k) {
  for (long i = 0; i < m; ++i) {
    for (long j = 0; j < k; ++j) {
      S acc = c[i * k + j];
      for (long t = 0; t < n; ++t) acc += a[i * n + t] * b[j * n + t];
      c[i * k + j] = acc;
    }
  }
}

template <class S>
void gemm_tn(S* c, const S* a, const S* b, long m, long k, long n) {
  for (long t = 0; t < k; ++t) {
    for (long j = 0; j < n; ++j) {
      S acc = c[t * n + j];
      for (long i = 0; i < m; ++i) acc += a[i * k + t] * b[i * n + j];
      c[t * n + j] = acc;
    }
  }
}

template <class S>
void softmax_rows_fwd(S* y, const S* x, long rows, long cols) {
  for (long i = 0; i < rows; ++i) {
    const S* xr = x + i * cols;
    S* yr = y + i * cols;
    S mx = xr[0];
    for (long j = 1; j < cols; ++j) mx = xr[j] > mx ? xr[j] : mx;
    S sum = 0;
    for (long j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    S inv = S(1) / sum;
    for (long j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

}  // namespace ref

}  // namespace grok::kernels
