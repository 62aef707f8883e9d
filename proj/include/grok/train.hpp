#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grok/common.hpp"
#include "grok/dataset.hpp"
#include "grok/kernels.hpp"
#include "grok/model.hpp"

// AdamW training loop: per-epoch shuffling, optional commutative augmentation
// applied to each batch before the forward pass, periodic full-set evaluation,
// and grokking-step detection against an accuracy threshold.
namespace grok {

struct TrainConfig {
  long batch_size = 1024;       // callers use 4096 for composition tasks
  double lr = 1e-3;
  double weight_decay = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  long max_steps = 100000;
  long eval_every = 100;
  double grok_threshold = 0.99;
  uint64_t seed = 0;
  bool augment_commutative = false;
  bool stop_at_grok = false;    // end the run at the first eval that clears the threshold
  long eval_batch = 4096;       // forward-pass chunk size during evaluation

  void validate() const {
    check(batch_size > 0 && eval_batch > 0, Err::ConfigError, "batch sizes must be positive");
    check(max_steps >= 1 && eval_every >= 1, Err::ConfigError,
          "max_steps and eval_every must be positive");
    check(lr > 0 && eps > 0 && weight_decay >= 0, Err::ConfigError,
          "lr and eps must be positive, weight_decay non-negative");
    check(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, Err::ConfigError,
          "betas must lie in [0, 1)");
    check(grok_threshold > 0 && grok_threshold <= 1, Err::ConfigError,
          "grok_threshold must lie in (0, 1]");
  }

  bool operator==(const TrainConfig&) const = default;
};

struct EvalPoint {
  long step = 0;
  double train_loss = 0;
  double train_acc = 0;
  double test_acc = 0;

  bool operator==(const EvalPoint&) const = default;
};

struct RunRecord {
  std::string task;
  std::string method = "baseline";     // "CA" when augmented; transfer runs relabel
  long n_train = 0;
  TrainConfig config;
  std::vector<EvalPoint> history;      // steps strictly increasing
  std::optional<long> grok_step;       // first evaluated step at or above the threshold
  double final_train_acc = 0;
  double final_test_acc = 0;
  double wall_time_sec = 0;
};

// Decoupled weight decay plus bias-corrected Adam over a parameter list.
// Fully frozen parameters are skipped outright; row-masked ones go through the
// kernel, which leaves masked-off rows bitwise untouched.
template <class S>
class AdamWT {
 public:
  AdamWT(std::vector<Param<S>>& params, const TrainConfig& cfg)
      : params_(&params), cfg_(cfg) {
    cfg_.validate();
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(static_cast<size_t>(params[i].tensor.size()), S(0));
      v_[i].assign(static_cast<size_t>(params[i].tensor.size()), S(0));
    }
  }

  void step() {
    ++t_;
    for (size_t i = 0; i < params_->size(); ++i) {
      Param<S>& p = (*params_)[i];
      if (p.frozen) continue;
      long n = p.tensor.size();
      check(static_cast<long>(m_[i].size()) == n, Err::ShapeMismatch,
            "optimizer state does not match parameter " + p.name);
      const uint8_t* mask = p.row_mask.empty() ? nullptr : p.row_mask.data();
      kernels::adamw_update(p.tensor.data().data(), p.tensor.grad().data(), m_[i].data(),
                            v_[i].data(), n, S(cfg_.lr), S(cfg_.weight_decay), S(cfg_.beta1),
                            S(cfg_.beta2), S(cfg_.eps), t_, mask, p.row_len());
    }
  }

  long steps_taken() const { return t_; }

 private:
  std::vector<Param<S>>* params_;
  TrainConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<S>> m_, v_;
};

using AdamW = AdamWT<float>;

struct EvalResult {
  double accuracy = 0;
  double mean_loss = 0;
};

// Exact-match accuracy of argmax(logits) against targets over the whole list,
// plus mean cross-entropy. Runs without graph recording, in chunks, and is
// invariant under example order and chunk size.
EvalResult evaluate(Model& model, const std::vector<data::Example>& examples,
                    long eval_batch = 4096);

// First history step whose test accuracy reaches the threshold, if any.
std::optional<long> detect_grokking(const std::vector<EvalPoint>& history,
                                    double threshold);

// Files written during/after a run; empty paths are skipped.
struct RunOutputs {
  std::string metrics_csv;     // one row per evaluation
  std::string run_record;      // RunRecord as JSON
  std::string checkpoint;      // weights at end of run, sidecar included
  long checkpoint_every = 0;   // when > 0, also checkpoint at this step cadence
};

RunRecord train(Model& model, const data::Split& split, const TrainConfig& cfg,
                const RunOutputs& out = {},
                const std::function<void(const EvalPoint&)>& on_eval = {});

std::string metrics_csv(const std::vector<EvalPoint>& history);
void write_metrics_csv(const std::string& path, const std::vector<EvalPoint>& history);

void save_run_record(const std::string& path, const RunRecord& rec);
RunRecord load_run_record(const std::string& path);

}  // namespace grok
