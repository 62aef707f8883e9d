#include "grok/ka.hpp"

#include <cmath>

namespace grok::ka {

double mod_two_pi(double b) {
  double r = std::fmod(b, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r = 0;  // fmod result + 2pi can round back up to 2pi
  return r;
}

std::complex<double> wrap(std::complex<double> z) {
  return {z.real(), mod_two_pi(z.imag())};
}

Embedding& Embedding::operator+=(const Embedding& o) {
  check(c.size() == o.c.size(), Err::ShapeMismatch, "embedding arity mismatch");
  for (size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
  return *this;
}

Embedding& Embedding::operator-=(const Embedding& o) {
  check(c.size() == o.c.size(), Err::ShapeMismatch, "embedding arity mismatch");
  for (size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
  return *this;
}

const char* rep_kind_name(RepKind k) {
  switch (k) {
    case RepKind::cyclic_add: return "cyclic_add";
    case RepKind::cyclic_mul: return "cyclic_mul";
    case RepKind::product_of_cyclics: return "two_factor_mul";
    case RepKind::anti_abelian: return "anti_abelian";
  }
  return "?";
}

namespace {

// One wheel decode: angle -> nearest integer in [0, order), residual checked.
long decode_angle(double angle, long order) {
  double u = mod_two_pi(angle) * static_cast<double>(order) / kTwoPi;
  double n = std::round(u);
  double residual = std::abs(u - n);
  // the boundary case u ~ order wraps to 0
  check(residual < 1e-6, Err::NonIntegerDecoding,
        "decode residual " + std::to_string(residual));
  long v = static_cast<long>(n) % order;
  return v;
}

void build_log_tables(mod::Prime p, int generator, std::vector<int>& log,
                      std::vector<int>& pow) {
  mod::DlogTable t(p, generator);
  log.assign(p.p, -1);
  pow.assign(p.p - 1, 0);
  for (int x = 1; x < p.p; ++x) log[x] = t.log(x);
  for (int e = 0; e < p.p - 1; ++e) pow[e] = t.pow(e);
}

}  // namespace

KaRep KaRep::cyclic_add(mod::Prime p, long k) {
  check(mod::gcd(k, p.p) == 1, Err::GcdViolation,
        "twist " + std::to_string(k) + " shares a factor with " + std::to_string(p.p));
  KaRep r;
  r.kind_ = RepKind::cyclic_add;
  r.p_ = p.p;
  r.k_ = ((k % p.p) + p.p) % p.p;
  r.k_inv_ = mod::inv_mod(r.k_, p.p);
  return r;
}

KaRep KaRep::cyclic_mul(mod::Prime p, long k, int generator) {
  long order = p.p - 1;
  check(mod::gcd(k, order) == 1, Err::GcdViolation,
        "twist " + std::to_string(k) + " shares a factor with " + std::to_string(order));
  if (generator == 0) generator = mod::primitive_root(p);
  KaRep r;
  r.kind_ = RepKind::cyclic_mul;
  r.p_ = p.p;
  r.k_ = ((k % order) + order) % order;
  r.k_inv_ = mod::inv_mod(r.k_, order);
  r.generator_ = generator;
  build_log_tables(p, generator, r.log_, r.pow_);
  return r;
}

KaRep KaRep::two_factor_mul(mod::Prime p, int q1, int q2, long k, int generator) {
  long order = p.p - 1;
  check(static_cast<long>(q1) * q2 == order && q1 > 1 && q2 > 1, Err::GcdViolation,
        "factors must multiply to " + std::to_string(order) + " and exceed 1");
  check(mod::gcd(k, order) == 1, Err::GcdViolation,
        "twist " + std::to_string(k) + " shares a factor with " + std::to_string(order));
  if (generator == 0) generator = mod::primitive_root(p);
  KaRep r;
  r.kind_ = RepKind::product_of_cyclics;
  r.p_ = p.p;
  r.k_ = ((k % order) + order) % order;
  r.k_inv_ = mod::inv_mod(r.k_, order);
  r.generator_ = generator;
  r.q1_ = q1;
  r.q2_ = q2;
  build_log_tables(p, generator, r.log_, r.pow_);
  return r;
}

KaRep KaRep::anti_abelian(const KaRep& base) {
  check(base.kind_ == RepKind::cyclic_add || base.kind_ == RepKind::cyclic_mul,
        Err::NonAssociativeOp, "anti-abelian wrapper needs a cyclic base rep");
  KaRep r = base;
  r.kind_ = RepKind::anti_abelian;
  r.base_ = base.kind_;
  return r;
}

RepKind KaRep::base_kind() const {
  return kind_ == RepKind::anti_abelian ? base_ : kind_;
}

bool KaRep::in_carrier(int x) const {
  if (x < 0 || x >= p_) return false;
  bool mul_like = base_kind() != RepKind::cyclic_add;
  return mul_like ? x != 0 : true;
}

std::vector<int> KaRep::carrier() const {
  std::vector<int> xs;
  int start = base_kind() == RepKind::cyclic_add ? 0 : 1;
  for (int x = start; x < p_; ++x) xs.push_back(x);
  return xs;
}

Embedding KaRep::phi(int x) const {
  check(in_carrier(x), Err::NotInGroup, std::to_string(x) + " is outside the carrier");
  switch (base_kind()) {
    case RepKind::cyclic_add: {
      long u = k_ * x % p_;
      return {{std::complex<double>(0.0, kTwoPi * static_cast<double>(u) / p_)}};
    }
    case RepKind::cyclic_mul: {
      long order = p_ - 1;
      long u = k_ * log_[x] % order;
      return {{std::complex<double>(0.0, kTwoPi * static_cast<double>(u) / order)}};
    }
    case RepKind::product_of_cyclics: {
      long order = p_ - 1;
      long e = k_ * log_[x] % order;  // twisted exponent, digits split after
      long b = e / q1_;               // quotient digit in [0, q2)
      long r = e % q1_;               // remainder digit in [0, q1)
      return {{std::complex<double>(0.0, kTwoPi * static_cast<double>(b) / q2_),
               std::complex<double>(0.0, kTwoPi * static_cast<double>(r) / q1_)}};
    }
    default: break;
  }
  fail(Err::NotInGroup, "unreachable");
}

int KaRep::psi(const Embedding& z) const {
  check(static_cast<int>(z.c.size()) == m(), Err::ShapeMismatch, "embedding arity mismatch");
  for (const auto& zc : z.c) {
    check(std::isfinite(zc.real()) && std::isfinite(zc.imag()), Err::NonIntegerDecoding,
          "non-finite embedding");
    check(std::abs(zc.real()) < 1e-6, Err::NonIntegerDecoding,
          "unit-modulus embedding expected, real part " + std::to_string(zc.real()));
  }
  switch (base_kind()) {
    case RepKind::cyclic_add: {
      long u = decode_angle(z.c[0].imag(), p_);
      return static_cast<int>(u * k_inv_ % p_);
    }
    case RepKind::cyclic_mul: {
      long order = p_ - 1;
      long u = decode_angle(z.c[0].imag(), order);
      return pow_[u * k_inv_ % order];
    }
    case RepKind::product_of_cyclics: {
      long order = p_ - 1;
      // Recover the exact integer digit sums; the remainder wheel's total
      // carries into the quotient wheel. Requires the unwrapped imaginary
      // parts, so phi must emit one angle in [0, 2pi) per element.
      double ub = z.c[0].imag() * q2_ / kTwoPi;
      double ur = z.c[1].imag() * q1_ / kTwoPi;
      double nb = std::round(ub), nr = std::round(ur);
      check(std::abs(ub - nb) < 1e-6 && std::abs(ur - nr) < 1e-6, Err::NonIntegerDecoding,
            "two-factor decode residual");
      long sum_b = static_cast<long>(nb);
      long sum_r = static_cast<long>(nr);
      check(sum_b >= 0 && sum_r >= 0, Err::NonIntegerDecoding, "negative digit sum");
      long carry = sum_r / q1_;
      long r = sum_r % q1_;
      long b = (sum_b + carry) % q2_;
      long e = (b * q1_ + r) % order;
      return pow_[e * k_inv_ % order];
    }
    default: break;
  }
  fail(Err::NonIntegerDecoding, "unreachable");
}

int KaRep::eval(std::span<const int> xs) const {
  check(!xs.empty(), Err::OperandOutOfRange, "need at least one operand");
  if (kind_ == RepKind::anti_abelian) {
    check(xs.size() == 2, Err::NonAssociativeOp,
          "anti-abelian ops are binary; cannot fold " + std::to_string(xs.size()));
    return eval_anti(xs[0], xs[1]);
  }
  Embedding z = phi(xs[0]);
  for (size_t i = 1; i < xs.size(); ++i) z += phi(xs[i]);
  return psi(z);
}

int KaRep::eval_anti(int x1, int x2) const {
  check(base_kind() == RepKind::cyclic_add || base_kind() == RepKind::cyclic_mul,
        Err::NonAssociativeOp, "anti-abelian evaluation needs a cyclic rep");
  return psi(phi(x1) - phi(x2));
}

std::string KaRep::describe() const {
  std::string s(rep_kind_name(kind_));
  s += "(p=" + std::to_string(p_);
  if (kind_ == RepKind::anti_abelian) s += ",base=" + std::string(rep_kind_name(base_));
  s += ",k=" + std::to_string(k_);
  if (base_kind() != RepKind::cyclic_add) s += ",a=" + std::to_string(generator_);
  if (kind_ == RepKind::product_of_cyclics)
    s += ",q1=" + std::to_string(q1_) + ",q2=" + std::to_string(q2_);
  s += ")";
  return s;
}

int eval_two_factor_mul(const KaRep& rep, int x1, int x2) {
  check(rep.kind() == RepKind::product_of_cyclics, Err::ShapeMismatch,
        "rep has no factor structure");
  int xs[2] = {x1, x2};
  return rep.eval(xs);
}

VerifyReport verify_rep(const KaRep& rep) {
  VerifyReport rpt;
  rpt.rep = rep.describe();
  mod::Prime p(rep.p());
  mod::OpId op = mod::OpId::add;
  switch (rep.kind()) {
    case RepKind::cyclic_add: op = mod::OpId::add; break;
    case RepKind::cyclic_mul:
    case RepKind::product_of_cyclics: op = mod::OpId::mul; break;
    case RepKind::anti_abelian:
      op = rep.base_kind() == RepKind::cyclic_add ? mod::OpId::sub : mod::OpId::div;
      break;
  }
  for (int x1 : rep.carrier()) {
    for (int x2 : rep.carrier()) {
      int expected = mod::eval_op(op, x1, x2, p);
      int got = -1;
      try {
        int xs[2] = {x1, x2};
        got = rep.eval(xs);
      } catch (const Error&) {
        got = -1;
      }
      ++rpt.checked;
      if (got != expected) rpt.failures.push_back({{x1, x2}, expected, got});
    }
  }
  return rpt;
}

}  // namespace grok::ka
