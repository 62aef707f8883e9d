#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <set>

#include "gradcheck.hpp"
#include "grok/model.hpp"

using namespace grok;

namespace {

ModelConfig small_cfg(int vocab = 11, int seq = 6) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.max_seq_len = seq;
  cfg.d_model = 16;
  cfg.n_heads = 4;
  cfg.classifier_hidden = 12;
  return cfg;
}

std::vector<int> random_tokens(long n, int vocab, Rng& rng) {
  std::vector<int> t(n);
  for (auto& x : t) x = int(rng.uniform(uint64_t(vocab)));
  return t;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg = small_cfg();
  cfg.d_model = 6;
  cfg.n_heads = 4;
  CHECK_THROWS_AS((ModelT<float>(cfg, 1)), Error);
  cfg = small_cfg();
  cfg.vocab_size = 0;
  CHECK_THROWS_AS((ModelT<float>(cfg, 1)), Error);
  cfg = small_cfg();
  cfg.max_seq_len = 0;
  CHECK_THROWS_AS((ModelT<float>(cfg, 1)), Error);
}

TEST_CASE("same config and seed give bitwise identical parameters") {
  ModelT<float> m1(small_cfg(), 42);
  ModelT<float> m2(small_cfg(), 42);
  ModelT<float> m3(small_cfg(), 43);
  REQUIRE(m1.params().size() == m2.params().size());
  bool all_equal = true, any_diff_seed = false;
  for (size_t i = 0; i < m1.params().size(); ++i) {
    auto a = m1.params()[i].tensor.data();
    auto b = m2.params()[i].tensor.data();
    auto c = m3.params()[i].tensor.data();
    all_equal = all_equal &&
                std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
    for (size_t j = 0; j < a.size(); ++j) any_diff_seed = any_diff_seed || a[j] != c[j];
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("parameter names are unique and init kinds hold") {
  ModelT<float> m(small_cfg(), 7);
  std::set<std::string> names;
  for (const auto& p : m.params()) names.insert(p.name);
  CHECK(names.size() == m.params().size());

  // biases zero, gains one, weights spread around zero
  auto check_all = [&](const std::string& name, float v) {
    for (float x : m.param(name).tensor.data()) CHECK(x == v);
  };
  check_all("decoder.0.ln1.g", 1.0f);
  check_all("decoder.1.ln2.b", 0.0f);
  check_all("embed.mlp.2.b", 0.0f);
  check_all("classifier.b2", 0.0f);
  float mx = 0;
  for (float x : m.param("token_table").tensor.data()) mx = std::max(mx, std::abs(x));
  CHECK(mx > 0.0f);
  CHECK(mx < 0.2f);  // five sigma of the 0.02 init
  CHECK_THROWS_AS(m.param("nosuch"), Error);
}

TEST_CASE("parameter count matches the closed form") {
  ModelConfig cfg;
  cfg.vocab_size = 103;
  cfg.max_seq_len = 4;
  ModelT<float> m(cfg, 3);
  long d = 256, v = 103, seq = 4, h = 256;
  long embed = v * d + seq * d + 4 * (d * d + d);
  long per_block = 2 * (2 * d)              // two layer norms
                   + 4 * (d * d + d)        // q,k,v,o projections
                   + (d * 4 * d + 4 * d)    // ffn in
                   + (4 * d * d + d);       // ffn out
  long classifier = d * h + h + h * v + v;
  CHECK(m.param_count() == embed + 2 * per_block + classifier);
}

TEST_CASE("forward shape and determinism") {
  ModelT<float> m(small_cfg(), 5);
  Rng rng(50);
  auto toks = random_tokens(3 * 4, 11, rng);
  auto l1 = m.forward(toks, 3, 4);
  REQUIRE(l1.shape() == nn::Shape{3, 11});
  auto l2 = m.forward(toks, 3, 4);
  CHECK(std::memcmp(l1.data().data(), l2.data().data(), l1.size() * sizeof(float)) == 0);
  auto all = m.forward_all(toks, 3, 4);
  REQUIRE(all.shape() == nn::Shape{3, 4, 11});
  // last position of forward_all equals forward
  for (long b = 0; b < 3; ++b) {
    for (long j = 0; j < 11; ++j) {
      CHECK(all.data()[(b * 4 + 3) * 11 + j] == l1.data()[b * 11 + j]);
    }
  }
}

TEST_CASE("bad tokens and bad lengths are rejected") {
  ModelT<float> m(small_cfg(11, 4), 5);
  std::vector<int> toks{0, 1, 2, 11};
  CHECK_THROWS_AS(m.forward(toks, 1, 4), Error);
  std::vector<int> neg{0, 1, 2, -1};
  CHECK_THROWS_AS(m.forward(neg, 1, 4), Error);
  std::vector<int> long_seq(5, 0);
  CHECK_THROWS_AS(m.forward(long_seq, 1, 5), Error);
}

TEST_CASE("permuting the batch permutes logits rows bitwise") {
  ModelT<float> m(small_cfg(), 9);
  Rng rng(51);
  long B = 4, T = 5, V = 11;
  auto toks = random_tokens(B * T, V, rng);
  auto base = m.forward(toks, B, T);
  std::vector<long> perm{2, 0, 3, 1};
  std::vector<int> shuffled(B * T);
  for (long b = 0; b < B; ++b) {
    std::copy_n(toks.begin() + perm[b] * T, T, shuffled.begin() + b * T);
  }
  auto out = m.forward(shuffled, B, T);
  for (long b = 0; b < B; ++b) {
    CHECK(std::memcmp(out.data().data() + b * V, base.data().data() + perm[b] * V,
                      V * sizeof(float)) == 0);
  }
}

TEST_CASE("with zeroed weights logits reduce to the classifier bias") {
  ModelT<float> m(small_cfg(), 11);
  for (auto& p : m.params()) {
    if (p.name == "classifier.b2") continue;
    for (auto& x : p.tensor.data()) x = 0.0f;
  }
  auto& b2 = m.param("classifier.b2").tensor;
  for (long j = 0; j < b2.size(); ++j) b2.data()[j] = 0.1f * float(j);
  Rng rng(52);
  auto toks = random_tokens(2 * 3, 11, rng);
  auto logits = m.forward(toks, 2, 3);
  for (long b = 0; b < 2; ++b) {
    for (long j = 0; j < 11; ++j) {
      CHECK(logits.data()[b * 11 + j] == doctest::Approx(0.1f * float(j)));
    }
  }
}

TEST_CASE("causality: position j ignores tokens after j") {
  ModelT<float> m(small_cfg(13, 6), 13);
  Rng rng(53);
  long B = 2, T = 6, V = 13;
  auto toks = random_tokens(B * T, V, rng);
  auto base = m.forward_all(toks, B, T);
  auto perturbed = toks;
  long j = 3;
  perturbed[0 * T + j + 1] = (perturbed[0 * T + j + 1] + 1) % int(V);
  auto out = m.forward_all(perturbed, B, T);
  // positions <= j in row 0 are bitwise unchanged, later ones move
  for (long t = 0; t <= j; ++t) {
    CHECK(std::memcmp(out.data().data() + t * V, base.data().data() + t * V,
                      V * sizeof(float)) == 0);
  }
  bool future_moved = false;
  for (long t = j + 1; t < T; ++t) {
    for (long c = 0; c < V; ++c) {
      future_moved = future_moved || out.data()[t * V + c] != base.data()[t * V + c];
    }
  }
  CHECK(future_moved);
  // row 1 untouched entirely
  CHECK(std::memcmp(out.data().data() + T * V, base.data().data() + T * V,
                    T * V * sizeof(float)) == 0);
}

TEST_CASE("set_frozen flips whole prefixes and rejects unknown ones") {
  ModelT<float> m(small_cfg(), 17);
  long dec = m.set_frozen("decoder.", true);
  // per block: 2 ln pairs + 4 attn pairs + 2 ffn pairs = 16 tensors
  CHECK(dec == 32);
  long one = m.set_frozen("token_table", true);
  CHECK(one == 1);
  for (const auto& p : m.params()) {
    bool expect = p.name.rfind("decoder.", 0) == 0 || p.name == "token_table";
    CHECK(p.frozen == expect);
  }
  CHECK_THROWS_AS(m.set_frozen("nosuch.", true), Error);
  CHECK(m.set_frozen("decoder.", false) == 32);
}

TEST_CASE("gradient check: full model end to end") {
  ModelConfig cfg;
  cfg.vocab_size = 5;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.max_seq_len = 2;
  cfg.classifier_hidden = 8;
  ModelT<double> m(cfg, 21);
  std::vector<int> toks{0, 3, 4, 1, 2, 2};
  std::vector<int> targets{3, 1, 0};

  std::vector<nn::Tensor<double>> leaves;
  for (auto& p : m.params()) leaves.push_back(p.tensor);
  auto build = [&] {
    return nn::cross_entropy_from_logits(m.forward(toks, 3, 2), targets);
  };
  CHECK(max_grad_rel_err(leaves, build) < 1e-3);
}
