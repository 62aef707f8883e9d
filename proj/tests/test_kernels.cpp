#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "grok/common.hpp"
#include "grok/kernels.hpp"

using namespace grok;
using kernels::Exec;

namespace {

void force_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

std::vector<float> random_vec(size_t n, Rng& rng, float scale = 1.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = float(rng.normal(0.0, scale));
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

// The compiler may contract mul+add into fma in one loop shape and not the
// other, so fast vs ref is near-equality; serial vs parallel stays bitwise.
double max_rel_diff(const std::vector<float>& a, const std::vector<float>& b) {
  REQUIRE(a.size() == b.size());
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(double(a[i]) - double(b[i]));
    double denom = std::max({std::abs(double(a[i])), std::abs(double(b[i])), 1.0});
    worst = std::max(worst, d / denom);
  }
  return worst;
}

// Runs fn once serial and once parallel into zeroed buffers of out_n floats.
template <class Fn>
std::pair<std::vector<float>, std::vector<float>> both_modes(size_t out_n, Fn&& fn) {
  std::vector<float> serial(out_n, 0.0f), parallel(out_n, 0.0f);
  kernels::set_execution(Exec::serial);
  fn(serial);
  kernels::set_execution(Exec::parallel);
  fn(parallel);
  kernels::set_execution(Exec::parallel);
  return {serial, parallel};
}

}  // namespace

TEST_CASE("gemm variants agree bitwise across serial, parallel and reference") {
  force_threads(3);
  Rng rng(100);
  long m = 17, k = 23, n = 13;
  auto a = random_vec(m * k, rng);   // [m,k]
  auto b = random_vec(k * n, rng);   // [k,n]
  auto an = random_vec(m * n, rng);  // [m,n] lhs for nt
  auto bn = random_vec(k * n, rng);  // [k,n] rhs for nt (transposed use)

  SUBCASE("gemm_nn") {
    auto [s, p] = both_modes(m * n, [&](std::vector<float>& c) {
      kernels::gemm_nn(c.data(), a.data(), b.data(), m, k, n);
    });
    CHECK(bitwise_equal(s, p));
    std::vector<float> r(m * n, 0.0f);
    kernels::ref::gemm_nn(r.data(), a.data(), b.data(), m, k, n);
    CHECK(max_rel_diff(s, r) < 1e-5);
  }
  SUBCASE("gemm_nt") {
    auto [s, p] = both_modes(m * k, [&](std::vector<float>& c) {
      kernels::gemm_nt(c.data(), an.data(), bn.data(), m, n, k);
    });
    CHECK(bitwise_equal(s, p));
    std::vector<float> r(m * k, 0.0f);
    kernels::ref::gemm_nt(r.data(), an.data(), bn.data(), m, n, k);
    CHECK(max_rel_diff(s, r) < 1e-5);
  }
  SUBCASE("gemm_tn accumulates into the output") {
    auto seed = random_vec(k * n, rng);
    auto [s, p] = both_modes(k * n, [&](std::vector<float>& c) {
      c = seed;
      kernels::gemm_tn(c.data(), a.data(), an.data(), m, k, n);
    });
    CHECK(bitwise_equal(s, p));
    std::vector<float> r = seed;
    kernels::ref::gemm_tn(r.data(), a.data(), an.data(), m, k, n);
    CHECK(max_rel_diff(s, r) < 1e-5);
    CHECK_FALSE(bitwise_equal(s, seed));
  }
}

TEST_CASE("softmax, layer_norm, gelu and gather kernels are mode invariant") {
  force_threads(3);
  Rng rng(101);
  long rows = 19, cols = 11;
  auto x = random_vec(rows * cols, rng, 2.0f);

  SUBCASE("softmax_rows_fwd matches ref bitwise") {
    auto [s, p] = both_modes(rows * cols, [&](std::vector<float>& y) {
      kernels::softmax_rows_fwd(y.data(), x.data(), rows, cols);
    });
    CHECK(bitwise_equal(s, p));
    std::vector<float> r(rows * cols, 0.0f);
    kernels::ref::softmax_rows_fwd(r.data(), x.data(), rows, cols);
    CHECK(max_rel_diff(s, r) < 1e-5);
  }
  SUBCASE("softmax_rows_bwd") {
    std::vector<float> y(rows * cols);
    kernels::set_execution(Exec::serial);
    kernels::softmax_rows_fwd(y.data(), x.data(), rows, cols);
    auto gy = random_vec(rows * cols, rng);
    auto [s, p] = both_modes(rows * cols, [&](std::vector<float>& dx) {
      kernels::softmax_rows_bwd(dx.data(), y.data(), gy.data(), rows, cols);
    });
    CHECK(bitwise_equal(s, p));
  }
  SUBCASE("layer_norm fwd and both bwd kernels") {
    auto g = random_vec(cols, rng);
    auto b = random_vec(cols, rng);
    std::vector<float> mean(rows), rstd(rows);
    auto [s, p] = both_modes(rows * cols, [&](std::vector<float>& y) {
      kernels::layer_norm_fwd(y.data(), mean.data(), rstd.data(), x.data(), g.data(),
                              b.data(), rows, cols, 1e-5f);
    });
    CHECK(bitwise_equal(s, p));
    auto gy = random_vec(rows * cols, rng);
    auto [sx, px] = both_modes(rows * cols, [&](std::vector<float>& dx) {
      kernels::layer_norm_bwd_x(dx.data(), x.data(), mean.data(), rstd.data(), g.data(),
                                gy.data(), rows, cols);
    });
    CHECK(bitwise_equal(sx, px));
    auto [sg, pg] = both_modes(2 * cols, [&](std::vector<float>& gb) {
      kernels::layer_norm_bwd_gb(gb.data(), gb.data() + cols, x.data(), mean.data(),
                                 rstd.data(), gy.data(), rows, cols);
    });
    CHECK(bitwise_equal(sg, pg));
  }
  SUBCASE("gelu fwd and bwd") {
    auto [s, p] = both_modes(rows * cols, [&](std::vector<float>& y) {
      kernels::gelu_fwd(y.data(), x.data(), rows * cols);
    });
    CHECK(bitwise_equal(s, p));
    auto gy = random_vec(rows * cols, rng);
    auto [sb, pb] = both_modes(rows * cols, [&](std::vector<float>& dx) {
      kernels::gelu_bwd(dx.data(), x.data(), gy.data(), rows * cols);
    });
    CHECK(bitwise_equal(sb, pb));
  }
  SUBCASE("embedding gather and scatter_add") {
    long vocab = 9, dim = 7, count = 25;
    auto table = random_vec(vocab * dim, rng);
    std::vector<int> ids(count);
    for (auto& id : ids) id = int(rng.uniform(uint64_t(vocab)));
    auto [s, p] = both_modes(count * dim, [&](std::vector<float>& y) {
      kernels::embedding_gather(y.data(), table.data(), ids.data(), count, dim);
    });
    CHECK(bitwise_equal(s, p));
    auto gy = random_vec(count * dim, rng);
    auto [sg, pg] = both_modes(vocab * dim, [&](std::vector<float>& dt) {
      kernels::embedding_scatter_add(dt.data(), ids.data(), gy.data(), count, dim);
    });
    CHECK(bitwise_equal(sg, pg));
    // duplicate ids really do pile up on the same row
    std::vector<float> dt(vocab * dim, 0.0f);
    std::vector<int> dup{3, 3, 3};
    std::vector<float> ones(3 * dim, 1.0f);
    kernels::embedding_scatter_add(dt.data(), dup.data(), ones.data(), 3, dim);
    CHECK(dt[3 * dim] == 3.0f);
    CHECK(dt[0] == 0.0f);
  }
}

TEST_CASE("cross entropy kernels are mode invariant") {
  force_threads(3);
  Rng rng(102);
  long rows = 16, cols = 29;
  auto logits = random_vec(rows * cols, rng, 3.0f);
  std::vector<int> targets(rows);
  for (auto& t : targets) t = int(rng.uniform(uint64_t(cols)));

  std::vector<float> loss_s(rows), lse_s(rows), loss_p(rows), lse_p(rows);
  kernels::set_execution(Exec::serial);
  kernels::cross_entropy_fwd(loss_s.data(), lse_s.data(), logits.data(), targets.data(),
                             rows, cols);
  kernels::set_execution(Exec::parallel);
  kernels::cross_entropy_fwd(loss_p.data(), lse_p.data(), logits.data(), targets.data(),
                             rows, cols);
  CHECK(bitwise_equal(loss_s, loss_p));
  CHECK(bitwise_equal(lse_s, lse_p));

  auto [s, p] = both_modes(rows * cols, [&](std::vector<float>& dl) {
    kernels::cross_entropy_bwd(dl.data(), logits.data(), lse_s.data(), targets.data(),
                               rows, cols, 0.25f);
  });
  CHECK(bitwise_equal(s, p));
}

TEST_CASE("adamw with zero gradient is pure decoupled decay") {
  std::vector<float> w{1.0f}, g{0.0f}, m{0.0f}, v{0.0f};
  kernels::adamw_update(w.data(), g.data(), m.data(), v.data(), 1,
                        /*lr=*/1e-3f, /*wd=*/0.1f, /*beta1=*/0.9f, /*beta2=*/0.98f,
                        /*eps=*/1e-8f, /*t=*/1, nullptr, 0);
  CHECK(w[0] == doctest::Approx(0.9999).epsilon(1e-6));
  CHECK(m[0] == 0.0f);
  CHECK(v[0] == 0.0f);
}

TEST_CASE("adamw takes a bias corrected step against the gradient") {
  std::vector<float> w{0.0f}, g{0.5f}, m{0.0f}, v{0.0f};
  float lr = 1e-3f, eps = 1e-8f;
  kernels::adamw_update(w.data(), g.data(), m.data(), v.data(), 1, lr, 0.0f, 0.9f,
                        0.98f, eps, 1, nullptr, 0);
  // at t=1 the bias corrected moments are exactly g and g^2
  double expect = -double(lr) * 0.5 / (std::sqrt(0.25) + double(eps));
  CHECK(w[0] == doctest::Approx(expect).epsilon(1e-6));
  CHECK(m[0] == doctest::Approx(0.05f));
  CHECK(v[0] == doctest::Approx(0.005f));
}

TEST_CASE("adamw row mask freezes rows bitwise, decay included") {
  force_threads(3);
  Rng rng(103);
  long rows = 6, cols = 5;
  auto w = random_vec(rows * cols, rng);
  auto g = random_vec(rows * cols, rng);
  std::vector<uint8_t> mask(rows, 1);
  mask[2] = 0;
  mask[4] = 0;
  auto w_before = w;

  auto run = [&](Exec mode) {
    kernels::set_execution(mode);
    auto wc = w;
    std::vector<float> mc(rows * cols, 0.0f), vc(rows * cols, 0.0f);
    for (long step = 1; step <= 3; ++step) {
      kernels::adamw_update(wc.data(), g.data(), mc.data(), vc.data(), wc.size(), 1e-3f,
                            0.1f, 0.9f, 0.98f, 1e-8f, step, mask.data(), cols);
    }
    return wc;
  };
  auto ws = run(Exec::serial);
  auto wp = run(Exec::parallel);
  kernels::set_execution(Exec::parallel);
  CHECK(bitwise_equal(ws, wp));
  // frozen rows untouched to the bit
  for (long j = 0; j < cols; ++j) {
    CHECK(ws[2 * cols + j] == w_before[2 * cols + j]);
    CHECK(ws[4 * cols + j] == w_before[4 * cols + j]);
  }
  CHECK_FALSE(bitwise_equal(ws, w_before));
}

TEST_CASE("execution mode round trips and thread_count stays positive") {
  kernels::init_threads();
  kernels::set_execution(Exec::serial);
  CHECK(kernels::execution() == Exec::serial);
  kernels::set_execution(Exec::parallel);
  CHECK(kernels::execution() == Exec::parallel);
  CHECK(kernels::thread_count() >= 1);
}
