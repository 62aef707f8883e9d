#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "grok/ka.hpp"

using namespace grok;
using namespace grok::ka;
using mod::OpId;
using mod::Prime;

namespace {

constexpr double kPi = 3.14159265358979323846264338328;

std::complex<double> polar(double r, double theta) {
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

TEST_CASE("wrap reduces the imaginary part into [0, 2pi) and keeps the real part") {
  auto w = wrap({1.0, 0.0});
  CHECK(w.real() == doctest::Approx(1.0));
  CHECK(w.imag() == doctest::Approx(0.0));

  w = wrap({0.0, kTwoPi});
  CHECK(w.real() == 0.0);
  CHECK(w.imag() == 0.0);

  w = wrap({-2.5, -0.1});
  CHECK(w.real() == -2.5);
  CHECK(w.imag() == doctest::Approx(kTwoPi - 0.1));

  w = wrap({0.0, 7 * kPi});
  CHECK(w.imag() == doctest::Approx(kPi));

  for (double b : {-1e9, -4.0, 0.0, 3.0, 1e9}) {
    double r = mod_two_pi(b);
    CHECK(r >= 0.0);
    CHECK(r < kTwoPi);
  }
}

TEST_CASE("log sums and log products agree after wrapping") {
  // z1 = 2e^{3i}, z2 = 3e^{5i}
  auto z1 = polar(2.0, 3.0), z2 = polar(3.0, 5.0);
  auto lhs = wrap(std::log(z1) + std::log(z2));
  auto rhs = wrap(std::log(z1 * z2));
  CHECK(std::abs(lhs - rhs) < 1e-12);

  Rng rng(20250822);
  for (int i = 0; i < 10000; ++i) {
    double r1 = 0.1 + 9.9 * rng.real(), t1 = kTwoPi * rng.real();
    double r2 = 0.1 + 9.9 * rng.real(), t2 = kTwoPi * rng.real();
    auto a = polar(r1, t1), b = polar(r2, t2);
    auto l = wrap(std::log(a) + std::log(b));
    auto r = wrap(std::log(a * b));
    REQUIRE(std::abs(l - r) < 1e-10);
  }
}

TEST_CASE("phi frozen values") {
  Prime p(97);
  auto add1 = KaRep::cyclic_add(p);
  CHECK(add1.phi(0).c[0] == std::complex<double>(0.0, 0.0));
  CHECK(add1.phi(1).c[0].imag() == doctest::Approx(kTwoPi / 97).epsilon(1e-12));
  CHECK(add1.phi(1).c[0].real() == 0.0);

  // lg_5(25) = 2 and multiplicative exponents live mod 96, so the angle steps
  // in units of 2pi/96
  auto mul1 = KaRep::cyclic_mul(p);
  CHECK(mul1.generator() == 5);
  CHECK(mul1.phi(25).c[0].imag() == doctest::Approx(2 * kTwoPi / 96).epsilon(1e-12));
  CHECK_THROWS_AS(mul1.phi(0), Error);
  try {
    mul1.phi(0);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NotInGroup);
  }
}

TEST_CASE("psi frozen values") {
  Prime p(97);
  auto add1 = KaRep::cyclic_add(p);
  CHECK(add1.psi(add1.phi(0)) == 0);
  CHECK(add1.psi(add1.phi(96) + add1.phi(5)) == 4);

  auto mul1 = KaRep::cyclic_mul(p);
  CHECK(mul1.psi(mul1.phi(2) + mul1.phi(49)) == 1);

  // residual 0.5 of a unit is as malformed as it gets
  Embedding junk{{std::complex<double>(0.0, kTwoPi * 0.5 / 97)}};
  CHECK_THROWS_AS(add1.psi(junk), Error);
  try {
    add1.psi(junk);
  } catch (const Error& e) {
    CHECK(e.code() == Err::NonIntegerDecoding);
  }
}

TEST_CASE("eval_rep frozen values") {
  Prime p(97);
  auto add1 = KaRep::cyclic_add(p);
  CHECK(add1.eval(std::vector<int>{1, 2, 3}) == 6);
  auto add5 = KaRep::cyclic_add(p, 5);
  CHECK(add5.eval(std::vector<int>{50, 60, 70}) == 83);
  auto mul1 = KaRep::cyclic_mul(p);
  CHECK(mul1.eval(std::vector<int>{96, 96, 96}) == 96);
  CHECK(add1.eval(std::vector<int>{42}) == 42);
}

TEST_CASE("anti-abelian evaluation matches sub and div") {
  Prime p(97);
  auto add1 = KaRep::cyclic_add(p);
  CHECK(add1.eval_anti(5, 5) == 0);
  CHECK(add1.eval_anti(3, 10) == 90);
  auto mul1 = KaRep::cyclic_mul(p);
  CHECK(mul1.eval_anti(1, 2) == 49);
  for (int x = 0; x < 97; ++x) CHECK(add1.eval_anti(x, x) == 0);
  for (int x = 1; x < 97; ++x) CHECK(mul1.eval_anti(x, x) == 1);
}

TEST_CASE("two-factor multiplication frozen values") {
  Prime p(97);
  auto rep = KaRep::two_factor_mul(p, 32, 3);
  CHECK(eval_two_factor_mul(rep, 1, 1) == 1);
  CHECK(eval_two_factor_mul(rep, 2, 3) == 6);
  auto rep48 = KaRep::two_factor_mul(p, 48, 2);
  CHECK(eval_two_factor_mul(rep48, 96, 96) == 1);
}

TEST_CASE("construction rejects invalid twists and factorizations") {
  Prime p(97);
  CHECK_THROWS_AS(KaRep::cyclic_add(p, 97), Error);
  try {
    KaRep::cyclic_add(p, 97);
  } catch (const Error& e) {
    CHECK(e.code() == Err::GcdViolation);
  }
  CHECK_THROWS_AS(KaRep::cyclic_mul(p, 2), Error);   // gcd(2, 96) = 2
  CHECK_THROWS_AS(KaRep::cyclic_mul(p, 1, 2), Error);  // 2 is not a generator
  CHECK_THROWS_AS(KaRep::two_factor_mul(p, 10, 10), Error);
  CHECK_THROWS_AS(KaRep::two_factor_mul(p, 96, 1), Error);
  CHECK_THROWS_AS(KaRep::anti_abelian(KaRep::two_factor_mul(p, 32, 3)), Error);
  CHECK_NOTHROW(KaRep::cyclic_add(p, 5));
  CHECK_NOTHROW(KaRep::cyclic_mul(p, 7));
}

TEST_CASE("exhaustive verification of the base reps at p=97") {
  Prime p(97);
  auto r1 = verify_rep(KaRep::cyclic_add(p));
  CHECK(r1.checked == 9409);
  CHECK(r1.failures.empty());

  auto r2 = verify_rep(KaRep::cyclic_mul(p));
  CHECK(r2.checked == 9216);
  CHECK(r2.failures.empty());

  auto r3 = verify_rep(KaRep::anti_abelian(KaRep::cyclic_add(p)));
  CHECK(r3.checked == 9409);
  CHECK(r3.failures.empty());

  auto r4 = verify_rep(KaRep::anti_abelian(KaRep::cyclic_mul(p)));
  CHECK(r4.checked == 9216);
  CHECK(r4.failures.empty());

  auto r5 = verify_rep(KaRep::two_factor_mul(p, 32, 3));
  CHECK(r5.checked == 9216);
  CHECK(r5.failures.empty());
}

TEST_CASE("twists change embeddings but never decodings") {
  Prime p(31);
  auto base = KaRep::cyclic_add(p);
  for (long k : {2L, 7L, 12L, 30L}) {
    auto twisted = KaRep::cyclic_add(p, k);
    bool embeddings_differ = false;
    for (int x = 0; x < 31; ++x) {
      if (std::abs(twisted.phi(x).c[0] - base.phi(x).c[0]) > 1e-12) embeddings_differ = true;
    }
    CHECK(embeddings_differ);
    for (int a = 0; a < 31; ++a) {
      for (int b = 0; b < 31; ++b) {
        std::vector<int> xs{a, b};
        REQUIRE(twisted.eval(xs) == base.eval(xs));
      }
    }
  }
  auto mbase = KaRep::cyclic_mul(p);
  for (long k : {7L, 11L, 29L}) {
    auto twisted = KaRep::cyclic_mul(p, k);
    for (int a = 1; a < 31; ++a) {
      for (int b = 1; b < 31; ++b) {
        std::vector<int> xs{a, b};
        REQUIRE(twisted.eval(xs) == mbase.eval(xs));
      }
    }
  }
}

TEST_CASE("one embedding serves any number of operands") {
  Prime p(97);
  Rng rng(11);
  auto add = KaRep::cyclic_add(p, 5);
  auto mul = KaRep::cyclic_mul(p, 7);
  auto two = KaRep::two_factor_mul(p, 16, 6);
  for (int n : {3, 4, 7}) {
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<int> xs(n);
      for (auto& x : xs) x = static_cast<int>(rng.uniform(97));
      CHECK(add.eval(xs) == mod::eval_composition(OpId::add, xs, p));
      for (auto& x : xs) x = 1 + static_cast<int>(rng.uniform(96));
      CHECK(mul.eval(xs) == mod::eval_composition(OpId::mul, xs, p));
      CHECK(two.eval(xs) == mod::eval_composition(OpId::mul, xs, p));
    }
  }
}

TEST_CASE("rep descriptions are stable strings") {
  Prime p(97);
  CHECK(KaRep::cyclic_add(p, 5).describe() == "cyclic_add(p=97,k=5)");
  CHECK(KaRep::cyclic_mul(p).describe() == "cyclic_mul(p=97,k=1,a=5)");
  CHECK(KaRep::two_factor_mul(p, 32, 3).describe() ==
        "two_factor_mul(p=97,k=1,a=5,q1=32,q2=3)");
  CHECK(KaRep::anti_abelian(KaRep::cyclic_add(p)).describe() ==
        "anti_abelian(p=97,base=cyclic_add,k=1)");
}
