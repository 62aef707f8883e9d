#include "grok/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace grok::data {

namespace {

using json = nlohmann::json;

// Operand values for one op: everything, or the multiplicative group.
long carrier_size(mod::OpId op, int p) {
  return op == mod::OpId::mul || op == mod::OpId::div ? p - 1 : p;
}

int carrier_value(mod::OpId op, long idx) {
  return op == mod::OpId::mul || op == mod::OpId::div ? int(idx) + 1 : int(idx);
}

// n distinct tuple codes out of [0, count), deterministic in rng. Enumerating
// and shuffling is exact for small spaces; big ones are rejection sampled
// (callers keep n far below count there, so collisions stay rare).
std::vector<int64_t> sample_codes(int64_t count, long n, Rng& rng) {
  constexpr int64_t kEnumerateLimit = 4'000'000;
  std::vector<int64_t> codes;
  if (count <= kEnumerateLimit) {
    std::vector<int64_t> all(count);
    for (int64_t i = 0; i < count; ++i) all[i] = i;
    rng.shuffle(all);
    codes.assign(all.begin(), all.begin() + n);
  } else {
    std::unordered_set<int64_t> seen;
    codes.reserve(n);
    while (static_cast<long>(codes.size()) < n) {
      int64_t c = static_cast<int64_t>(rng.uniform(static_cast<uint64_t>(count)));
      if (seen.insert(c).second) codes.push_back(c);
    }
  }
  return codes;
}

std::vector<int> decode_tuple(int64_t code, int n_operands, mod::OpId op, int p) {
  long m = carrier_size(op, p);
  std::vector<int> xs(n_operands);
  for (int i = n_operands - 1; i >= 0; --i) {
    xs[i] = carrier_value(op, code % m);
    code /= m;
  }
  return xs;
}

Example make_binary_example(const Vocab& vocab, mod::OpId op, int a, int b,
                            const std::string& tag, mod::Prime prime) {
  Example ex;
  ex.tokens = {vocab.numeral(a), vocab.op_token(op), vocab.numeral(b), vocab.eq()};
  ex.target = mod::eval_op(op, a, b, prime);
  ex.task = tag;
  return ex;
}

Example make_system_example(const Vocab& vocab, mod::OpId op, mod::SystemTemplateId tmpl,
                            int a, int b, int c, const std::string& tag, mod::Prime prime) {
  auto sol = mod::solve_system({tmpl, op}, a, b, c, prime);
  int OP = vocab.op_token(op);
  int A = vocab.unk_a(), B = vocab.unk_b();
  Example ex;
  if (tmpl == mod::SystemTemplateId::askB) {
    ex.tokens = {a, OP, b, vocab.eq(), A, vocab.and_tok(),
                 A, OP, c, vocab.eq(), B, B, vocab.ask()};
    ex.target = sol.B;
  } else {
    ex.tokens = {a, OP, A, vocab.eq(), b, vocab.and_tok(),
                 A, OP, c, vocab.eq(), B, A, vocab.ask()};
    ex.target = sol.A;
  }
  ex.task = tag;
  return ex;
}

}  // namespace

std::string task_tag(const std::string& family, mod::OpId op, int p) {
  return family + ":" + mod::op_info(op).name + ":p" + std::to_string(p);
}

int task_prime(const std::string& tag) {
  auto pos = tag.rfind(":p");
  check(pos != std::string::npos, Err::ConfigParse, "task tag has no modulus: " + tag);
  int p = std::atoi(tag.c_str() + pos + 2);
  check(p >= 2, Err::ConfigParse, "task tag has bad modulus: " + tag);
  return p;
}

mod::OpId task_op(const std::string& tag) {
  auto first = tag.find(':');
  auto last = tag.rfind(':');
  check(first != std::string::npos && last > first, Err::ConfigParse,
        "malformed task tag: " + tag);
  auto name = tag.substr(first + 1, last - first - 1);
  auto op = mod::op_by_name(name);
  check(op.has_value(), Err::ConfigParse, "unknown operation in task tag: " + tag);
  return *op;
}

Split gen_binary(mod::OpId op, int p, long n_train, uint64_t seed) {
  mod::Prime prime(p);
  Vocab vocab(p);
  bool skip_zero_b = op == mod::OpId::div;
  long total = static_cast<long>(p) * (skip_zero_b ? p - 1 : p);
  check(n_train >= 1, Err::TooFewPairs, "n_train must be positive");
  check(n_train <= total, Err::TooFewPairs,
        "n_train " + std::to_string(n_train) + " exceeds the " +
            std::to_string(total) + " valid pairs");

  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(total);
  for (int a = 0; a < p; ++a) {
    for (int b = skip_zero_b ? 1 : 0; b < p; ++b) pairs.emplace_back(a, b);
  }
  Rng rng(derive_seed(seed, "gen_binary"));
  rng.shuffle(pairs);

  std::string tag = task_tag("binary", op, p);
  Split split;
  split.seed = seed;
  split.train.reserve(n_train);
  split.test.reserve(total - n_train);
  for (long i = 0; i < total; ++i) {
    auto [a, b] = pairs[i];
    auto& dst = i < n_train ? split.train : split.test;
    dst.push_back(make_binary_example(vocab, op, a, b, tag, prime));
  }
  return split;
}

Split gen_composition(mod::OpId op, int n_operands, int p, long n_train, long n_val,
                      long n_test, uint64_t seed) {
  check(op == mod::OpId::add || op == mod::OpId::mul, Err::NonAssociativeOp,
        "composition needs an associative group op");
  check(n_operands == 3 || n_operands == 4, Err::ConfigError,
        "composition supports 3 or 4 operands");
  check(n_train >= 1 && n_val >= 0 && n_test >= 0, Err::TooFewPairs,
        "split sizes must be non-negative with n_train >= 1");
  mod::Prime prime(p);
  Vocab vocab(p);
  long m = carrier_size(op, p);
  int64_t count = 1;
  for (int i = 0; i < n_operands; ++i) count *= m;
  long need = n_train + n_val + n_test;
  check(need <= count, Err::TooFewPairs,
        "requested " + std::to_string(need) + " tuples from a space of " +
            std::to_string(count));

  Rng rng(derive_seed(seed, "gen_composition"));
  auto codes = sample_codes(count, need, rng);

  std::string tag = task_tag("composition" + std::to_string(n_operands), op, p);
  Split split;
  split.seed = seed;
  for (long i = 0; i < need; ++i) {
    auto xs = decode_tuple(codes[i], n_operands, op, p);
    Example ex;
    for (int j = 0; j < n_operands; ++j) {
      if (j > 0) ex.tokens.push_back(vocab.op_token(op));
      ex.tokens.push_back(vocab.numeral(xs[j]));
    }
    ex.tokens.push_back(vocab.eq());
    ex.target = mod::eval_composition(op, xs, prime);
    ex.task = tag;
    auto& dst = i < n_train ? split.train : (i < n_train + n_val ? split.val : split.test);
    dst.push_back(std::move(ex));
  }
  return split;
}

Split gen_system(mod::OpId op, int p, long n_train, long n_val, long n_test,
                 uint64_t seed) {
  check(op == mod::OpId::add || op == mod::OpId::mul, Err::NonAssociativeOp,
        "systems need an associative group op");
  check(n_train >= 1 && n_val >= 0 && n_test >= 0, Err::TooFewPairs,
        "split sizes must be non-negative with n_train >= 1");
  mod::Prime prime(p);
  Vocab vocab(p);
  long m = carrier_size(op, p);
  int64_t count = int64_t(m) * m * m;

  std::string tag = task_tag("system", op, p);
  Split split;
  split.seed = seed;

  // half the quota per template, askB taking any odd remainder
  auto fill = [&](mod::SystemTemplateId tmpl, const char* stream, long t_train,
                  long t_val, long t_test) {
    long need = t_train + t_val + t_test;
    check(need <= count, Err::TooFewPairs,
          "requested " + std::to_string(need) + " triples from a space of " +
              std::to_string(count));
    Rng rng(derive_seed(seed, stream));
    auto codes = sample_codes(count, need, rng);
    for (long i = 0; i < need; ++i) {
      int64_t code = codes[i];
      int c = carrier_value(op, code % m);
      code /= m;
      int b = carrier_value(op, code % m);
      code /= m;
      int a = carrier_value(op, code % m);
      auto& dst =
          i < t_train ? split.train : (i < t_train + t_val ? split.val : split.test);
      dst.push_back(make_system_example(vocab, op, tmpl, a, b, c, tag, prime));
    }
  };
  fill(mod::SystemTemplateId::askB, "gen_system_askB", n_train - n_train / 2,
       n_val - n_val / 2, n_test - n_test / 2);
  fill(mod::SystemTemplateId::askA, "gen_system_askA", n_train / 2, n_val / 2,
       n_test / 2);
  return split;
}

Split limit_tokens(Split split, int max_operand) {
  check(!split.train.empty(), Err::EmptyAfterFilter, "split has no training data");
  int p = task_prime(split.train.front().task);
  check(max_operand >= 1 && max_operand <= p, Err::ConfigError,
        "max_operand must lie in [1, p]");
  std::vector<Example> kept;
  for (auto& ex : split.train) {
    bool ok = true;
    for (int t : ex.tokens) ok = ok && (t >= p || t < max_operand);
    if (ok) kept.push_back(std::move(ex));
  }
  check(!kept.empty(), Err::EmptyAfterFilter,
        "no training example has all operands below " + std::to_string(max_operand));
  split.train = std::move(kept);
  return split;
}

int64_t pair_key(int a, int b) { return (int64_t(a) << 32) | uint32_t(b); }

std::unordered_set<int64_t> test_pair_keys(const Split& split) {
  std::unordered_set<int64_t> keys;
  keys.reserve(split.test.size());
  for (const auto& ex : split.test) {
    check(ex.tokens.size() == 4, Err::ShapeMismatch,
          "pair keys are defined for binary prompts only");
    keys.insert(pair_key(ex.tokens[0], ex.tokens[2]));
  }
  return keys;
}

std::vector<Example> augment_commutative(const std::vector<Example>& batch,
                                         mod::OpId op,
                                         const std::unordered_set<int64_t>* test_keys) {
  check(mod::op_info(op).commutative, Err::NotCommutative,
        std::string(mod::op_info(op).name) + " is not commutative");
  std::vector<Example> out;
  out.reserve(batch.size() * 2);
  for (const auto& ex : batch) {
    check(ex.tokens.size() == 4, Err::ShapeMismatch,
          "commutative augmentation expects binary prompts");
    out.push_back(ex);
    int a = ex.tokens[0], b = ex.tokens[2];
    if (a == b) continue;
    if (test_keys && test_keys->count(pair_key(b, a))) continue;
    Example twin = ex;
    std::swap(twin.tokens[0], twin.tokens[2]);
    out.push_back(std::move(twin));
  }
  return out;
}

std::vector<int> used_tokens(const Split& split) {
  std::unordered_set<int> ids;
  auto scan = [&](const std::vector<Example>& xs) {
    for (const auto& ex : xs) {
      ids.insert(ex.tokens.begin(), ex.tokens.end());
      ids.insert(ex.target);
    }
  };
  scan(split.train);
  scan(split.val);
  scan(split.test);
  std::vector<int> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  return out;
}

void validate_example(const Example& ex) {
  int p = task_prime(ex.task);
  mod::Prime prime(p);
  mod::OpId op = task_op(ex.task);
  Vocab vocab(p);
  check(ex.target >= 0 && ex.target < p, Err::DegenerateData,
        "target is not a numeral token");

  int expect;
  if (ex.task.rfind("binary:", 0) == 0) {
    check(ex.tokens.size() == 4 && ex.tokens[1] == vocab.op_token(op) &&
              ex.tokens[3] == vocab.eq(),
          Err::DegenerateData, "malformed binary prompt");
    expect = mod::eval_op(op, ex.tokens[0], ex.tokens[2], prime);
  } else if (ex.task.rfind("composition", 0) == 0) {
    int n = std::atoi(ex.task.c_str() + std::string("composition").size());
    check(static_cast<int>(ex.tokens.size()) == 2 * n &&
              ex.tokens.back() == vocab.eq(),
          Err::DegenerateData, "malformed composition prompt");
    std::vector<int> xs;
    for (int i = 0; i < n; ++i) {
      xs.push_back(ex.tokens[2 * i]);
      if (i > 0) {
        check(ex.tokens[2 * i - 1] == vocab.op_token(op), Err::DegenerateData,
              "malformed composition prompt");
      }
    }
    expect = mod::eval_composition(op, xs, prime);
  } else if (ex.task.rfind("system:", 0) == 0) {
    check(ex.tokens.size() == 13 && ex.tokens.back() == vocab.ask(),
          Err::DegenerateData, "malformed system prompt");
    int q = ex.tokens[11];
    int a = ex.tokens[0], c = ex.tokens[8];
    mod::SystemSolution sol{};
    if (q == vocab.unk_b()) {
      sol = mod::solve_system({mod::SystemTemplateId::askB, op}, a, ex.tokens[2], c,
                              prime);
      expect = sol.B;
    } else if (q == vocab.unk_a()) {
      sol = mod::solve_system({mod::SystemTemplateId::askA, op}, a, ex.tokens[4], c,
                              prime);
      expect = sol.A;
    } else {
      fail(Err::DegenerateData, "system prompt has no query token");
    }
  } else {
    fail(Err::ConfigParse, "unknown task family: " + ex.task);
  }
  check(expect == ex.target, Err::DegenerateData,
        "stored target " + std::to_string(ex.target) + " disagrees with recomputed " +
            std::to_string(expect) + " for task " + ex.task);
}

void save_jsonl(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), Err::FileError, "cannot open for writing: " + path);
  for (const auto& ex : examples) {
    json j{{"tokens", ex.tokens}, {"target", ex.target}, {"task", ex.task}};
    out << j.dump() << '\n';
  }
  check(out.good(), Err::FileError, "write failed: " + path);
}

std::vector<Example> load_jsonl(const std::string& path, bool validate) {
  std::ifstream in(path);
  check(in.good(), Err::FileError, "cannot open: " + path);
  std::vector<Example> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    check(!j.is_discarded(), Err::ConfigParse,
          path + ":" + std::to_string(lineno) + ": bad JSON");
    check(j.contains("tokens") && j.contains("target") && j.contains("task"),
          Err::ConfigParse, path + ":" + std::to_string(lineno) + ": missing fields");
    Example ex;
    ex.tokens = j["tokens"].get<std::vector<int>>();
    ex.target = j["target"].get<int>();
    ex.task = j["task"].get<std::string>();
    if (validate) validate_example(ex);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace grok::data
