#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "grok/common.hpp"
#include "grok/modmath.hpp"

namespace grok::ka {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// b mod 2pi into [0, 2pi), mathematical modulo so negative inputs wrap up.
double mod_two_pi(double b);

// T(a+bi) = a + i*(b mod 2pi). Real part passes through untouched.
std::complex<double> wrap(std::complex<double> z);

// Log-domain embedding point: one complex number per group generator.
struct Embedding {
  std::vector<std::complex<double>> c;

  Embedding& operator+=(const Embedding& o);
  Embedding& operator-=(const Embedding& o);
  friend Embedding operator+(Embedding a, const Embedding& b) { return a += b; }
  friend Embedding operator-(Embedding a, const Embedding& b) { return a -= b; }
};

enum class RepKind { cyclic_add, cyclic_mul, product_of_cyclics, anti_abelian };

const char* rep_kind_name(RepKind k);

// A concrete Kolmogorov-Arnold representation of one group operation over Z_p:
// phi embeds residues into log space, summing embeddings composes the op, and
// psi decodes the sum back to a residue. Twist k picks a different character
// of the same group; decoding undoes it with a modular inverse, so every
// coprime k yields the same decoded values.
class KaRep {
public:
  // x1 + x2 mod p via the character x -> exp(2*pi*i*k*x/p); gcd(k, p) = 1.
  static KaRep cyclic_add(mod::Prime p, long k = 1);

  // x1 * x2 mod p through discrete logs base a (a primitive root, picked
  // automatically when 0). Exponents live mod p-1, so the character is
  // e -> exp(2*pi*i*k*e/(p-1)) and gcd(k, p-1) = 1.
  static KaRep cyclic_mul(mod::Prime p, long k = 1, int generator = 0);

  // Multiplication again, but the exponent is split into digits e = b*q1 + r
  // and each digit gets its own circle: Z_{p-1} ~ C_q1 x C_q2 as a set with a
  // carry from the remainder wheel into the quotient wheel. q1*q2 = p-1, both
  // factors > 1. The twist acts on the exponent before the digit split.
  static KaRep two_factor_mul(mod::Prime p, int q1, int q2, long k = 1, int generator = 0);

  // Wraps a cyclic rep so verification runs x1 - x2 (resp. x1 / x2) through
  // psi(phi(x1) - phi(x2)).
  static KaRep anti_abelian(const KaRep& base);

  RepKind kind() const { return kind_; }
  int p() const { return p_; }
  long twist() const { return k_; }
  int generator() const { return generator_; }
  int q1() const { return q1_; }
  int q2() const { return q2_; }
  // number of generators; embeddings live in C^m
  int m() const { return kind_ == RepKind::product_of_cyclics ? 2 : 1; }
  RepKind base_kind() const;  // for anti_abelian

  bool in_carrier(int x) const;
  std::vector<int> carrier() const;

  Embedding phi(int x) const;
  int psi(const Embedding& z) const;

  // psi(sum of phi(x)) for abelian kinds; anti_abelian requires exactly 2.
  int eval(std::span<const int> xs) const;

  // psi(phi(x1) - phi(x2)) on a cyclic base rep.
  int eval_anti(int x1, int x2) const;

  std::string describe() const;

private:
  KaRep() = default;

  RepKind kind_ = RepKind::cyclic_add;
  RepKind base_ = RepKind::cyclic_add;  // meaningful for anti_abelian
  int p_ = 0;
  long k_ = 1;
  long k_inv_ = 1;  // inverse of k mod group order
  int generator_ = 0;
  int q1_ = 0, q2_ = 0;
  std::vector<int> log_;  // discrete log table for mul kinds, index by residue
  std::vector<int> pow_;  // inverse table, index by exponent
};

int eval_two_factor_mul(const KaRep& rep, int x1, int x2);

struct VerifyFailure {
  std::vector<int> xs;
  int expected;
  int got;  // -1 when decoding threw
};

struct VerifyReport {
  std::string rep;
  long checked = 0;
  std::vector<VerifyFailure> failures;
};

// Exhaustively compares the rep against exact modular arithmetic on all pairs
// in the carrier (sub/div oracles for anti-abelian wrappers).
VerifyReport verify_rep(const KaRep& rep);

}  // namespace grok::ka
