#include "grok/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "grok/checkpoint.hpp"
#include "json_io.hpp"

namespace grok {

namespace {

// Prompts within one task family all share a length; mixed lengths mean the
// caller assembled examples from different families.
long sequence_length(const std::vector<data::Example>& examples) {
  long seq = static_cast<long>(examples.front().tokens.size());
  for (const auto& ex : examples) {
    check(static_cast<long>(ex.tokens.size()) == seq, Err::ShapeMismatch,
          "examples mix sequence lengths");
  }
  return seq;
}

}  // namespace

EvalResult evaluate(Model& model, const std::vector<data::Example>& examples,
                    long eval_batch) {
  check(!examples.empty(), Err::ConfigError, "evaluate needs at least one example");
  check(eval_batch > 0, Err::ConfigError, "eval_batch must be positive");
  nn::NoGradGuard no_grad;

  long n = static_cast<long>(examples.size());
  long seq = sequence_length(examples);
  long vocab = model.config().vocab_size;

  long correct = 0;
  double loss_sum = 0;
  std::vector<int> tokens;
  std::vector<int> targets;
  for (long start = 0; start < n; start += eval_batch) {
    long b = std::min(eval_batch, n - start);
    tokens.clear();
    targets.clear();
    for (long i = 0; i < b; ++i) {
      const auto& ex = examples[static_cast<size_t>(start + i)];
      tokens.insert(tokens.end(), ex.tokens.begin(), ex.tokens.end());
      targets.push_back(ex.target);
    }
    auto logits = model.forward(tokens, b, seq);
    auto ld = logits.data();
    for (long i = 0; i < b; ++i) {
      const float* row = ld.data() + i * vocab;
      long best = 0;
      for (long j = 1; j < vocab; ++j) {
        if (row[j] > row[best]) best = j;
      }
      if (best == targets[static_cast<size_t>(i)]) ++correct;
      // mean cross-entropy in double, summed in example order so the result
      // does not depend on the chunk size
      double mx = row[0];
      for (long j = 1; j < vocab; ++j) mx = std::max(mx, double(row[j]));
      double se = 0;
      for (long j = 0; j < vocab; ++j) se += std::exp(double(row[j]) - mx);
      loss_sum += std::log(se) + mx - double(row[targets[static_cast<size_t>(i)]]);
    }
  }
  return {double(correct) / double(n), loss_sum / double(n)};
}

std::optional<long> detect_grokking(const std::vector<EvalPoint>& history,
                                    double threshold) {
  for (const auto& e : history) {
    if (e.test_acc >= threshold) return e.step;
  }
  return std::nullopt;
}

RunRecord train(Model& model, const data::Split& split, const TrainConfig& cfg,
                const RunOutputs& out, const std::function<void(const EvalPoint&)>& on_eval) {
  cfg.validate();
  check(!split.train.empty(), Err::ConfigError, "empty training split");
  auto t0 = std::chrono::steady_clock::now();

  const std::string& task = split.train.front().task;
  int p = data::task_prime(task);
  mod::OpId op = data::task_op(task);

  std::vector<int> used = data::used_tokens(split);
  check(used.back() < model.config().vocab_size, Err::VocabMismatch,
        "dataset token " + std::to_string(used.back()) + " outside model vocab of " +
            std::to_string(model.config().vocab_size));
  long seq = sequence_length(split.train);

  // Binary tasks gate grokking on the test set directly; families with a val
  // split gate on it and keep the test set for the final numbers.
  const auto& gate = split.val.empty() ? split.test : split.val;
  check(!gate.empty(), Err::ConfigError, "no evaluation examples");

  std::unordered_set<int64_t> test_keys;
  if (cfg.augment_commutative) test_keys = data::test_pair_keys(split);

  AdamW opt(model.params(), cfg);
  Rng shuffle_rng(derive_seed(cfg.seed, "train_shuffle"));
  std::vector<size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), size_t(0));
  size_t cursor = order.size();  // forces a shuffle before the first batch

  CheckpointMeta meta{model.config(), p, task, used};

  RunRecord rec;
  rec.task = task;
  rec.method = cfg.augment_commutative ? "CA" : "baseline";
  rec.n_train = static_cast<long>(split.train.size());
  rec.config = cfg;

  std::vector<data::Example> batch;
  std::vector<int> tokens;
  std::vector<int> targets;

  long step = 0;
  while (step < cfg.max_steps) {
    ++step;
    if (cursor >= order.size()) {
      shuffle_rng.shuffle(order);
      cursor = 0;
    }
    size_t take = std::min(static_cast<size_t>(cfg.batch_size), order.size() - cursor);
    batch.clear();
    for (size_t i = 0; i < take; ++i) {
      batch.push_back(split.train[order[cursor + i]]);
    }
    cursor += take;
    if (cfg.augment_commutative) batch = data::augment_commutative(batch, op, &test_keys);

    long b = static_cast<long>(batch.size());
    tokens.clear();
    targets.clear();
    for (const auto& ex : batch) {
      tokens.insert(tokens.end(), ex.tokens.begin(), ex.tokens.end());
      targets.push_back(ex.target);
    }
    auto loss = nn::cross_entropy_from_logits(model.forward(tokens, b, seq), targets);
    nn::backward(loss);
    opt.step();
    model.zero_grads();

    if (!out.checkpoint.empty() && out.checkpoint_every > 0 &&
        step % out.checkpoint_every == 0) {
      save_checkpoint(out.checkpoint, model, meta);
    }

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      EvalResult on_train = evaluate(model, split.train, cfg.eval_batch);
      EvalResult on_gate = evaluate(model, gate, cfg.eval_batch);
      EvalPoint point{step, on_train.mean_loss, on_train.accuracy, on_gate.accuracy};
      rec.history.push_back(point);
      if (on_eval) on_eval(point);
      if (!rec.grok_step && on_gate.accuracy >= cfg.grok_threshold) rec.grok_step = step;
      if (cfg.stop_at_grok && rec.grok_step) break;
    }
  }

  if (split.val.empty() && !rec.history.empty() && rec.history.back().step == step) {
    rec.final_train_acc = rec.history.back().train_acc;
    rec.final_test_acc = rec.history.back().test_acc;
  } else {
    rec.final_train_acc = evaluate(model, split.train, cfg.eval_batch).accuracy;
    rec.final_test_acc = evaluate(model, split.test, cfg.eval_batch).accuracy;
  }
  rec.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!out.metrics_csv.empty()) write_metrics_csv(out.metrics_csv, rec.history);
  if (!out.run_record.empty()) save_run_record(out.run_record, rec);
  if (!out.checkpoint.empty()) save_checkpoint(out.checkpoint, model, meta);
  return rec;
}

std::string metrics_csv(const std::vector<EvalPoint>& history) {
  std::string csv = "step,train_loss,train_acc,test_acc\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%ld,%.9g,%.9g,%.9g\n", e.step, e.train_loss,
                  e.train_acc, e.test_acc);
    csv += buf;
  }
  return csv;
}

void write_metrics_csv(const std::string& path, const std::vector<EvalPoint>& history) {
  std::ofstream f(path);
  check(f.good(), Err::FileError, "cannot open for writing: " + path);
  f << metrics_csv(history);
  check(f.good(), Err::FileError, "write failed: " + path);
}

void save_run_record(const std::string& path, const RunRecord& rec) {
  nlohmann::json j;
  j["task"] = rec.task;
  j["method"] = rec.method;
  j["n_train"] = rec.n_train;
  j["config"] = rec.config;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : rec.history) {
    hist.push_back({e.step, e.train_loss, e.train_acc, e.test_acc});
  }
  j["history"] = std::move(hist);
  if (rec.grok_step) {
    j["grok_step"] = *rec.grok_step;
  } else {
    j["grok_step"] = nullptr;
  }
  j["final_train_acc"] = rec.final_train_acc;
  j["final_test_acc"] = rec.final_test_acc;
  j["wall_time_sec"] = rec.wall_time_sec;

  std::ofstream f(path);
  check(f.good(), Err::FileError, "cannot open for writing: " + path);
  f << j.dump(2) << '\n';
  check(f.good(), Err::FileError, "write failed: " + path);
}

RunRecord load_run_record(const std::string& path) {
  std::ifstream f(path);
  check(f.good(), Err::FileError, "cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
  check(!j.is_discarded(), Err::ConfigParse, "bad JSON in " + path);

  RunRecord rec;
  try {
    rec.task = j.at("task").get<std::string>();
    rec.method = j.value("method", std::string("baseline"));
    rec.n_train = j.value("n_train", 0L);
    rec.config = j.at("config").get<TrainConfig>();
    for (const auto& row : j.at("history")) {
      check(row.is_array() && row.size() == 4, Err::ConfigParse,
            "history rows must be [step, train_loss, train_acc, test_acc]: " + path);
      rec.history.push_back(EvalPoint{row[0].get<long>(), row[1].get<double>(),
                                      row[2].get<double>(), row[3].get<double>()});
    }
    if (!j.at("grok_step").is_null()) rec.grok_step = j.at("grok_step").get<long>();
    rec.final_train_acc = j.at("final_train_acc").get<double>();
    rec.final_test_acc = j.at("final_test_acc").get<double>();
    rec.wall_time_sec = j.at("wall_time_sec").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(Err::ConfigParse, std::string("run record ") + path + ": " + e.what());
  }
  return rec;
}

}  // namespace grok
