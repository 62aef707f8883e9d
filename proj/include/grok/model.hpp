#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "grok/common.hpp"
#include "grok/tensor.hpp"

// Decoder-only transformer sized for modular arithmetic prompts: token and
// position lookup, a stack of residual feed-forward blocks on the embedding,
// pre-norm decoder blocks with causal self-attention, and an MLP classifier
// read off the last sequence position.
namespace grok {

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 256;
  int n_heads = 4;
  int n_layers = 2;
  int embed_mlp_depth = 4;
  int max_seq_len = 0;
  int classifier_hidden = 256;

  void validate() const {
    check(vocab_size > 0, Err::ConfigError, "vocab_size must be positive");
    check(max_seq_len > 0, Err::ConfigError, "max_seq_len must be positive");
    check(d_model > 0 && n_heads > 0 && n_layers > 0 && classifier_hidden > 0 &&
              embed_mlp_depth >= 0,
          Err::ConfigError, "model dimensions must be positive");
    check(d_model % n_heads == 0, Err::ConfigError,
          "d_model " + std::to_string(d_model) + " not divisible by n_heads " +
              std::to_string(n_heads));
  }

  bool operator==(const ModelConfig&) const = default;
};

// A named weight plus its freeze state. frozen stops the optimizer entirely;
// row_mask (one flag per leading-dim row, 0 = frozen) freezes single rows,
// used when transferred embedding rows must stay put while new tokens train.
template <class S>
struct Param {
  std::string name;
  nn::Tensor<S> tensor;
  bool frozen = false;
  std::vector<uint8_t> row_mask;

  long row_len() const {
    return tensor.rank() > 0 ? tensor.size() / tensor.dim(0) : 1;
  }
};

template <class S>
class ModelT {
 public:
  ModelT(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    long d = cfg_.d_model;
    long v = cfg_.vocab_size;
    long h = cfg_.classifier_hidden;

    add_weight("token_table", {v, d});
    add_weight("pos_table", {cfg_.max_seq_len, d});
    for (int i = 0; i < cfg_.embed_mlp_depth; ++i) {
      std::string base = "embed.mlp." + std::to_string(i);
      add_weight(base + ".w", {d, d});
      add_bias(base + ".b", {d});
    }
    for (int l = 0; l < cfg_.n_layers; ++l) {
      std::string base = "decoder." + std::to_string(l);
      add_gain(base + ".ln1.g", {d});
      add_bias(base + ".ln1.b", {d});
      for (const char* nm : {"q", "k", "v", "o"}) {
        add_weight(base + ".attn.w" + std::string(nm), {d, d});
        add_bias(base + ".attn.b" + std::string(nm), {d});
      }
      add_gain(base + ".ln2.g", {d});
      add_bias(base + ".ln2.b", {d});
      add_weight(base + ".ffn.w1", {d, 4 * d});
      add_bias(base + ".ffn.b1", {4 * d});
      add_weight(base + ".ffn.w2", {4 * d, d});
      add_bias(base + ".ffn.b2", {d});
    }
    add_weight("classifier.w1", {d, h});
    add_bias("classifier.b1", {h});
    add_weight("classifier.w2", {h, v});
    add_bias("classifier.b2", {v});

    Rng rng(derive_seed(seed, "model_init"));
    for (auto& p : params_) {
      if (init_kind_[p.name] == 'w') {
        for (auto& x : p.tensor.data()) x = S(rng.normal(0.0, 0.02));
      }
      // biases start at zero, layer-norm gains at one; set at creation
    }
  }

  const ModelConfig& config() const { return cfg_; }

  // logits for the last position, [batch, vocab_size]
  nn::Tensor<S> forward(const std::vector<int>& tokens, long batch, long seq) {
    auto x = trunk(tokens, batch, seq);
    return classify(nn::take_position(x, seq - 1));
  }

  // logits at every position, [batch, seq, vocab_size]
  nn::Tensor<S> forward_all(const std::vector<int>& tokens, long batch, long seq) {
    return classify(trunk(tokens, batch, seq));
  }

  std::vector<Param<S>>& params() { return params_; }
  const std::vector<Param<S>>& params() const { return params_; }

  Param<S>& param(const std::string& name) {
    auto it = index_.find(name);
    check(it != index_.end(), Err::UnknownPrefix, "no parameter named " + name);
    return params_[it->second];
  }

  bool has_param(const std::string& name) const { return index_.count(name) > 0; }

  long set_frozen(const std::string& prefix, bool frozen) {
    long count = 0;
    for (auto& p : params_) {
      if (p.name.rfind(prefix, 0) == 0) {
        p.frozen = frozen;
        // Fully frozen leaves skip grad accumulation; row-masked ones still
        // need their grads because some rows keep training.
        p.tensor.set_requires_grad(!frozen || !p.row_mask.empty());
        ++count;
      }
    }
    check(count > 0, Err::UnknownPrefix, "prefix matches no parameter: " + prefix);
    return count;
  }

  void zero_grads() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  long param_count() const {
    long n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

 private:
  void add_param(std::string name, nn::Shape shape, char kind, S fill) {
    auto t = nn::Tensor<S>::filled(std::move(shape), fill);
    t.set_requires_grad(true);
    index_[name] = params_.size();
    init_kind_[name] = kind;
    params_.push_back(Param<S>{std::move(name), std::move(t), false, {}});
  }
  void add_weight(std::string name, nn::Shape shape) {
    add_param(std::move(name), std::move(shape), 'w', S(0));
  }
  void add_bias(std::string name, nn::Shape shape) {
    add_param(std::move(name), std::move(shape), 'b', S(0));
  }
  void add_gain(std::string name, nn::Shape shape) {
    add_param(std::move(name), std::move(shape), 'g', S(1));
  }

  nn::Tensor<S>& weight(const std::string& name) { return param(name).tensor; }

  // [batch, seq] tokens -> [batch, seq, d_model] after the decoder stack
  nn::Tensor<S> trunk(const std::vector<int>& tokens, long batch, long seq) {
    check(seq >= 1 && seq <= cfg_.max_seq_len, Err::IndexOutOfRange,
          "sequence length " + std::to_string(seq) + " exceeds max_seq_len " +
              std::to_string(cfg_.max_seq_len));
    check(static_cast<long>(tokens.size()) == batch * seq, Err::ShapeMismatch,
          "token buffer does not match batch x seq");
    std::vector<int> pos(seq);
    for (long t = 0; t < seq; ++t) pos[t] = int(t);

    auto tok = nn::embedding_gather(weight("token_table"), tokens, {batch, seq});
    auto pe = nn::embedding_gather(weight("pos_table"), pos, {seq});
    auto x = nn::add(tok, pe);

    for (int i = 0; i < cfg_.embed_mlp_depth; ++i) {
      std::string base = "embed.mlp." + std::to_string(i);
      auto h = nn::gelu(nn::add(nn::matmul(x, weight(base + ".w")), weight(base + ".b")));
      x = nn::add(h, x);
    }

    for (int l = 0; l < cfg_.n_layers; ++l) {
      std::string base = "decoder." + std::to_string(l);
      auto normed = nn::layer_norm(x, weight(base + ".ln1.g"), weight(base + ".ln1.b"));
      x = nn::add(attention(normed, base + ".attn", batch, seq), x);
      auto normed2 = nn::layer_norm(x, weight(base + ".ln2.g"), weight(base + ".ln2.b"));
      auto h = nn::gelu(nn::add(nn::matmul(normed2, weight(base + ".ffn.w1")),
                                weight(base + ".ffn.b1")));
      auto f = nn::add(nn::matmul(h, weight(base + ".ffn.w2")), weight(base + ".ffn.b2"));
      x = nn::add(f, x);
    }
    return x;
  }

  nn::Tensor<S> attention(const nn::Tensor<S>& x, const std::string& base, long batch,
                          long seq) {
    long d = cfg_.d_model;
    long heads = cfg_.n_heads;
    long hd = d / heads;
    auto proj = [&](const char* nm) {
      auto y = nn::add(nn::matmul(x, weight(base + ".w" + nm)), weight(base + ".b" + nm));
      // [B,T,D] -> [B,H,T,hd]
      return nn::transpose(nn::reshape(y, {batch, seq, heads, hd}), 1, 2);
    };
    auto q = proj("q");
    auto k = proj("k");
    auto v = proj("v");
    auto scores = nn::scale(nn::matmul(q, nn::transpose(k, 2, 3)),
                            S(1) / std::sqrt(S(hd)));
    auto att = nn::softmax_rows(nn::causal_mask(scores));
    auto ctx = nn::matmul(att, v);  // [B,H,T,hd]
    auto merged = nn::reshape(nn::transpose(ctx, 1, 2), {batch, seq, d});
    return nn::add(nn::matmul(merged, weight(base + ".wo")), weight(base + ".bo"));
  }

  nn::Tensor<S> classify(const nn::Tensor<S>& x) {
    auto h = nn::gelu(nn::add(nn::matmul(x, weight("classifier.w1")),
                              weight("classifier.b1")));
    return nn::add(nn::matmul(h, weight("classifier.w2")), weight("classifier.b2"));
  }

  ModelConfig cfg_;
  std::vector<Param<S>> params_;
  std::unordered_map<std::string, size_t> index_;
  std::unordered_map<std::string, char> init_kind_;
};

using Model = ModelT<float>;

}  // namespace grok
