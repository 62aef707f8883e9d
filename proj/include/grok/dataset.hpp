#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "grok/common.hpp"
#include "grok/modmath.hpp"

// Token vocabularies, prompt construction, and the train/val/test generators
// for the four task families: binary ops, n-operand compositions, two-equation
// systems, and the limited-operand-token variant.
namespace grok::data {

// Numerals sit at ids 0..p-1 so embedding rows transfer one-to-one between
// tasks over the same modulus; specials follow in a fixed order.
struct Vocab {
  // op tokens + EQ, AND, ASK, UNK_A, UNK_B, PAD
  static constexpr int kSpecialTokens = mod::kNumOps + 6;

  int p;

  explicit Vocab(int p_) : p(p_) {
    check(p >= 2, Err::ConfigError, "vocab needs p >= 2");
  }

  int numeral(int v) const {
    check(v >= 0 && v < p, Err::OperandOutOfRange, "numeral out of range");
    return v;
  }
  int op_token(mod::OpId op) const { return p + static_cast<int>(op); }
  int eq() const { return p + mod::kNumOps; }
  int and_tok() const { return p + mod::kNumOps + 1; }
  int ask() const { return p + mod::kNumOps + 2; }
  int unk_a() const { return p + mod::kNumOps + 3; }
  int unk_b() const { return p + mod::kNumOps + 4; }
  int pad() const { return p + mod::kNumOps + 5; }
  int size() const { return p + mod::kNumOps + 6; }
  bool is_numeral(int id) const { return id >= 0 && id < p; }
};

struct Example {
  std::vector<int> tokens;
  int target = 0;
  std::string task;
};

struct Split {
  std::vector<Example> train;
  std::vector<Example> val;  // empty for binary tasks
  std::vector<Example> test;
  uint64_t seed = 0;
};

// Task tags name the family, operation, and modulus, e.g. "binary:add:p97",
// "composition3:mul:p97", "system:add:p97"; import re-derives labels from them.
std::string task_tag(const std::string& family, mod::OpId op, int p);
int task_prime(const std::string& tag);
mod::OpId task_op(const std::string& tag);

// All (a,b) over Z_p (b != 0 for div), shuffled by seed; first n_train are
// train, the rest test. Prompts are [a, OP, b, EQ] with the result as target.
Split gen_binary(mod::OpId op, int p, long n_train, uint64_t seed);

// [x1, OP, x2, OP, ..., xn, EQ] over distinct operand tuples, disjoint across
// train/val/test. mul draws operands from 1..p-1.
Split gen_composition(mod::OpId op, int n_operands, int p, long n_train,
                      long n_val = 30000, long n_test = 100000, uint64_t seed = 0);

// Two-equation prompts, half per template, targets from the exact solver:
//   askB: [a, OP, b,     EQ, A, AND, A, OP, c, EQ, B, B, ASK] -> B
//   askA: [a, OP, A,     EQ, b, AND, A, OP, c, EQ, B, A, ASK] -> A
Split gen_system(mod::OpId op, int p, long n_train, long n_val = 30000,
                 long n_test = 100000, uint64_t seed = 0);

// Drops training prompts whose operands are not all < max_operand; val and
// test keep full Z_p coverage. Targets are never filtered.
Split limit_tokens(Split split, int max_operand = 80);

int64_t pair_key(int a, int b);
std::unordered_set<int64_t> test_pair_keys(const Split& split);

// Adds the operand-swapped twin of every binary example. Twins equal to their
// original (a = b) are skipped, as are twins that would collide with a test
// pair when test_keys is given.
std::vector<Example> augment_commutative(const std::vector<Example>& batch,
                                         mod::OpId op,
                                         const std::unordered_set<int64_t>* test_keys = nullptr);

// Distinct token ids appearing anywhere in the split (prompts and targets),
// ascending; stored beside checkpoints so transfer knows which rows are live.
std::vector<int> used_tokens(const Split& split);

void save_jsonl(const std::vector<Example>& examples, const std::string& path);
std::vector<Example> load_jsonl(const std::string& path, bool validate = true);

// Recomputes the target of one example from its task tag; DegenerateData on
// any mismatch between sequence, tag, and stored target.
void validate_example(const Example& ex);

}  // namespace grok::data
