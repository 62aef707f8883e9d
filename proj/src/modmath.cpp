#include "grok/modmath.hpp"

#include <string>

namespace grok::mod {

namespace {

bool is_prime(int n) {
  if (n < 2) return false;
  for (int d = 2; static_cast<long>(d) * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

constexpr OpInfo kOps[kNumOps] = {
    {OpId::add, "add", "+", true, true},
    {OpId::mul, "mul", "*", true, true},
    {OpId::sq_sum, "sq_sum", "s+", true, false},
    {OpId::sq_sum_lin, "sq_sum_lin", "sl", true, false},
    {OpId::cube_sum_lin, "cube_sum_lin", "cl", true, false},
    {OpId::sq_sum_cross, "sq_sum_cross", "sx", true, false},
    {OpId::sub, "sub", "-", false, false},
    {OpId::div, "div", "/", false, false},
    {OpId::sum_sq, "sum_sq", "S2", true, false},
    {OpId::sum_cube, "sum_cube", "S3", true, false},
};

}  // namespace

Prime::Prime(int p_) : p(p_) {
  check(is_prime(p_), Err::ConfigError, "modulus " + std::to_string(p_) + " is not prime");
}

const OpInfo& op_info(OpId op) { return kOps[static_cast<int>(op)]; }

std::span<const OpInfo> all_ops() { return {kOps, kNumOps}; }

std::optional<OpId> op_by_name(std::string_view name) {
  for (const auto& info : kOps) {
    if (name == info.name) return info.id;
  }
  return std::nullopt;
}

std::optional<OpId> anti_abelian_of(OpId op) {
  if (op == OpId::sub) return OpId::add;
  if (op == OpId::div) return OpId::mul;
  return std::nullopt;
}

long pow_mod(long a, long e, long m) {
  check(m >= 1, Err::ConfigError, "pow_mod modulus must be positive");
  check(e >= 0, Err::ConfigError, "pow_mod exponent must be nonnegative");
  a %= m;
  if (a < 0) a += m;
  long r = 1 % m;
  while (e > 0) {
    if (e & 1) r = r * a % m;
    a = a * a % m;
    e >>= 1;
  }
  return r;
}

long gcd(long a, long b) {
  while (b != 0) {
    long t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

long inv_mod(long x, long m) {
  // extended Euclid on (x mod m, m)
  long a = x % m;
  if (a < 0) a += m;
  check(a != 0, Err::NoInverse, "0 has no inverse mod " + std::to_string(m));
  long r0 = m, r1 = a, s0 = 0, s1 = 1;
  while (r1 != 0) {
    long q = r0 / r1;
    long r2 = r0 - q * r1;
    long s2 = s0 - q * s1;
    r0 = r1;
    r1 = r2;
    s0 = s1;
    s1 = s2;
  }
  check(r0 == 1, Err::NoInverse,
        std::to_string(x) + " is not a unit mod " + std::to_string(m));
  return ((s0 % m) + m) % m;
}

int eval_op(OpId op, int a, int b, Prime p) {
  check(a >= 0 && a < p.p && b >= 0 && b < p.p, Err::OperandOutOfRange,
        "operands must lie in [0, " + std::to_string(p.p) + ")");
  long m = p.p;
  long x = a, y = b;
  long r = 0;
  switch (op) {
    case OpId::add: r = (x + y) % m; break;
    case OpId::mul: r = x * y % m; break;
    case OpId::sq_sum: r = (x * x + y * y) % m; break;
    case OpId::sq_sum_lin: r = (x * x + y * y + x + y) % m; break;
    case OpId::cube_sum_lin: r = (x * x % m * x + y * y % m * y + x + y) % m; break;
    case OpId::sq_sum_cross: r = (x * x + y * y + x * y) % m; break;
    case OpId::sub: r = ((x - y) % m + m) % m; break;
    case OpId::div:
      check(b != 0, Err::DivisionByZero, "division by zero");
      r = x * inv_mod(y, m) % m;
      break;
    case OpId::sum_sq: r = (x + y) % m * ((x + y) % m) % m; break;
    case OpId::sum_cube: {
      long s = (x + y) % m;
      r = s * s % m * s % m;
      break;
    }
  }
  return static_cast<int>(r);
}

int inverse(int x, OpId op, Prime p) {
  check(x >= 0 && x < p.p, Err::OperandOutOfRange, "element out of range");
  if (op == OpId::add) return x == 0 ? 0 : p.p - x;
  if (op == OpId::mul) {
    check(x != 0, Err::NoInverse, "0 has no multiplicative inverse");
    return static_cast<int>(inv_mod(x, p.p));
  }
  fail(Err::NonAssociativeOp,
       std::string(op_info(op).name) + " does not form a group; no inverse");
}

int eval_composition(OpId op, std::span<const int> xs, Prime p) {
  check(op == OpId::add || op == OpId::mul, Err::NonAssociativeOp,
        std::string(op_info(op).name) + " is not associative over Z_p; refusing to fold");
  check(xs.size() >= 2, Err::OperandOutOfRange, "composition needs at least 2 operands");
  if (op == OpId::mul) {
    for (int x : xs) check(x != 0, Err::NotInGroup, "0 is not in the multiplicative group");
  }
  int acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = eval_op(op, acc, xs[i], p);
  return acc;
}

int primitive_root(Prime p) {
  check(p.p >= 3, Err::ConfigError, "primitive root needs p >= 3");
  for (int a = 2; a < p.p; ++a) {
    // multiplicative order by direct iteration; p is small
    long v = a;
    int order = 1;
    while (v != 1) {
      v = v * a % p.p;
      ++order;
    }
    if (order == p.p - 1) return a;
  }
  fail(Err::NotPrimitiveRoot, "no generator found (modulus not prime?)");
}

DlogTable::DlogTable(Prime p, int base) : p_(p.p), base_(base) {
  check(base >= 2 && base < p.p, Err::OperandOutOfRange, "base out of range");
  log_.assign(p_, -1);
  pow_.assign(p_ - 1, 0);
  long v = 1;
  for (int e = 0; e < p_ - 1; ++e) {
    pow_[e] = static_cast<int>(v);
    if (log_[v] != -1) {
      fail(Err::NotPrimitiveRoot,
           std::to_string(base) + " does not generate Z_" + std::to_string(p_) + "^*");
    }
    log_[v] = e;
    v = v * base % p_;
  }
}

int DlogTable::log(int x) const {
  check(x >= 1 && x < p_, Err::NotInGroup,
        std::to_string(x) + " is outside the multiplicative group");
  return log_[x];
}

int discrete_log(int base, int x, Prime p) { return DlogTable(p, base).log(x); }

SystemSolution solve_system(const SystemTemplate& t, int a, int b, int c, Prime p) {
  check(t.op == OpId::add || t.op == OpId::mul, Err::NonAssociativeOp,
        "system templates are defined over group ops only");
  SystemSolution s{};
  if (t.id == SystemTemplateId::askB) {
    s.A = eval_op(t.op, a, b, p);
  } else {
    s.A = eval_op(t.op, inverse(a, t.op, p), b, p);
  }
  s.B = eval_op(t.op, s.A, c, p);
  return s;
}

}  // namespace grok::mod
