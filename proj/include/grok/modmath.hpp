#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "grok/common.hpp"

namespace grok::mod {

// Validated odd-or-2 prime modulus. Everything downstream takes it by value.
struct Prime {
  int p;
  explicit Prime(int p_);
};

enum class OpId {
  add,           // a + b
  mul,           // a * b
  sq_sum,        // a^2 + b^2
  sq_sum_lin,    // a^2 + b^2 + a + b
  cube_sum_lin,  // a^3 + b^3 + a + b
  sq_sum_cross,  // a^2 + b^2 + a*b
  sub,           // a - b
  div,           // a * b^{-1}
  sum_sq,        // (a + b)^2
  sum_cube,      // (a + b)^3
};

inline constexpr int kNumOps = 10;

struct OpInfo {
  OpId id;
  const char* name;
  const char* symbol;  // vocabulary token text
  bool commutative;
  bool abelian_group;  // carrier forms a group under the op
};

const OpInfo& op_info(OpId op);
std::span<const OpInfo> all_ops();
std::optional<OpId> op_by_name(std::string_view name);

// For the two non-commutative ops, the abelian op whose inverse generates them
// (sub from add, div from mul). Empty for everything else.
std::optional<OpId> anti_abelian_of(OpId op);

long pow_mod(long a, long e, long m);
long gcd(long a, long b);

// Modular inverse by extended Euclid; requires gcd(x, m) == 1.
long inv_mod(long x, long m);

// One binary operation over Z_p. Operands must lie in [0, p); div requires b != 0.
int eval_op(OpId op, int a, int b, Prime p);

// Inverse element under add or mul. mul has no inverse at 0.
int inverse(int x, OpId op, Prime p);

// Left fold of an associative group op over xs (|xs| >= 2). Only add and mul
// qualify; mul additionally requires nonzero operands.
int eval_composition(OpId op, std::span<const int> xs, Prime p);

// Smallest generator of the multiplicative group Z_p^* (p >= 3).
int primitive_root(Prime p);

// Full-table discrete log base a, valid for x in [1, p). Build once per (p, a).
class DlogTable {
public:
  DlogTable(Prime p, int base);
  int p() const { return p_; }
  int base() const { return base_; }
  int log(int x) const;  // e with base^e = x
  int pow(int e) const { return pow_[((e % (p_ - 1)) + (p_ - 1)) % (p_ - 1)]; }

private:
  int p_;
  int base_;
  std::vector<int> log_;
  std::vector<int> pow_;
};

int discrete_log(int base, int x, Prime p);

// Two-equation systems over one unknown pair (A, B):
//   askB: a op b = A, then A op c = B, query B
//   askA: a op A = b, then A op c = B, query A
enum class SystemTemplateId { askB, askA };

struct SystemTemplate {
  SystemTemplateId id;
  OpId op;  // add or mul
};

struct SystemSolution {
  int A;
  int B;
};

SystemSolution solve_system(const SystemTemplate& t, int a, int b, int c, Prime p);

}  // namespace grok::mod
