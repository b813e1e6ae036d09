#include <catch.hpp>

#include <cmath>

#include "relent/potential.hpp"
#include "relent/rng.hpp"

using namespace relent;

namespace {
constexpr double kSqrt2Pi = 2.5066282746310002;
}

TEST_CASE("potential values match closed forms") {
  const Potential h0 = Potential::harmonic(1.0, 0.0);
  CHECK(h0.value(0.0) == 0.0);

  const Potential h21 = Potential::harmonic(2.0, 1.0);
  CHECK(h21.value(3.0) == Approx(4.0).epsilon(1e-15));  // 1/2 * 2 * (3-1)^2

  const Potential dw = Potential::double_well(1.0, 2.0, 0.0);
  CHECK(dw.value(0.0) == 0.0);
  CHECK(dw.grad(0.0) == 0.0);
  // well bottom of the x^4 - 2x^2 form: 4*1^3 - 2*2*1 = 0
  CHECK(dw.grad(1.0) == Approx(0.0).margin(1e-15));
}

TEST_CASE("potential gradients match hand derivatives") {
  CHECK(Potential::harmonic(1.0, 0.0).grad(2.0) == Approx(2.0).epsilon(1e-15));
  CHECK(Potential::harmonic(3.5, -0.7).grad(-0.7) == 0.0);
}

TEST_CASE("gradient agrees with central finite differences") {
  const Potential pots[] = {Potential::harmonic(2.0, 0.5),
                            Potential::double_well(1.5, 2.0, -0.3),
                            Potential::soft_wall(2.0, 1.0, 5.0)};
  Rng rng(20240801);
  for (const auto& p : pots) {
    const double step = 1e-5 * std::max(1.0, p.scale());
    for (int i = 0; i < 100; ++i) {
      const double x = -4.0 + 9.0 * rng.uniform01();
      const double fd = (p.value(x + step) - p.value(x - step)) / (2.0 * step);
      const double g = p.grad(x);
      CHECK(g == Approx(fd).epsilon(1e-6).margin(1e-8));
    }
  }
}

TEST_CASE("potential parameters must be strictly positive") {
  CHECK_THROWS_AS(Potential::harmonic(0.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Potential::harmonic(-1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Potential::double_well(1.0, -2.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Potential::soft_wall(1.0, 0.0, -1.0), ConfigError);
}

TEST_CASE("subunit partition function against Gaussian integrals") {
  const Potential h = Potential::harmonic(1.0, 0.0);
  const CoordinateDomain full = auto_domain(h, 1.0, CoordinateDomain::Kind::FullLine);
  const CoordinateDomain half = auto_domain(h, 1.0, CoordinateDomain::Kind::HalfLine);

  CHECK(subunit_partition(h, 1.0, full) == Approx(kSqrt2Pi).epsilon(1e-10));
  CHECK(subunit_partition(h, 1.0, half) == Approx(0.5 * kSqrt2Pi).epsilon(1e-10));

  // sqrt(kBT) width scaling of the Gaussian
  const CoordinateDomain full4 = auto_domain(h, 4.0, CoordinateDomain::Kind::FullLine);
  const double z1 = subunit_partition(h, 1.0, full4);
  const double z4 = subunit_partition(h, 4.0, full4);
  CHECK(z4 / z1 == Approx(2.0).epsilon(1e-9));
}

TEST_CASE("partition function is monotone in kBT") {
  // holds verbatim for potentials with a zero minimum (harmonic, soft wall)
  for (const Potential& p :
       {Potential::harmonic(2.0, 0.3), Potential::soft_wall(1.0, 1.0, 3.0)}) {
    const CoordinateDomain dom = auto_domain(p, 4.0, CoordinateDomain::Kind::HalfLine);
    double prev = 0.0;
    for (double kbt : {0.5, 1.0, 2.0, 4.0}) {
      const double z = subunit_partition(p, kbt, dom);
      CHECK(z > prev);
      prev = z;
    }
  }
  // the double well dips below zero; shift it to a zero minimum first
  const Potential dw = Potential::double_well(1.0, 2.0, 0.0);
  const double phi_min = dw.value(dw.rightmost_min());
  const CoordinateDomain dom = auto_domain(dw, 4.0, CoordinateDomain::Kind::FullLine);
  double prev = 0.0;
  for (double kbt : {0.5, 1.0, 2.0, 4.0}) {
    const double z = subunit_partition(dw, kbt, dom) * std::exp(phi_min / kbt);
    CHECK(z > prev);
    prev = z;
  }
}

TEST_CASE("partition function is translation invariant on the full line") {
  const double s = 1.7;
  const Potential a = Potential::harmonic(2.0, 0.0);
  const Potential b = Potential::harmonic(2.0, s);
  const CoordinateDomain dom{CoordinateDomain::Kind::FullLine, 12.0};
  const double za = subunit_partition(a, 1.0, dom);
  const double zb = subunit_partition(b, 1.0, dom);
  CHECK(zb == Approx(za).epsilon(1e-9));
}

TEST_CASE("auto domain confines and bounds the tail mass") {
  const Potential pots[] = {Potential::harmonic(1.0, 0.0),
                            Potential::double_well(1.0, 2.0, 0.0),
                            Potential::soft_wall(1.0, 1.0, 4.0)};
  for (const auto& p : pots) {
    for (auto kind : {CoordinateDomain::Kind::HalfLine, CoordinateDomain::Kind::FullLine}) {
      const CoordinateDomain dom = auto_domain(p, 1.0, kind);
      CHECK(dom.cutoff > 0);
      CHECK(domain_tail_ok(p, 1.0, dom));
      // confinement: at least 10 kBT above the minimum at the grid extent
      CHECK(p.value(dom.upper()) > p.value(p.rightmost_min()) + 10.0);
    }
  }
}

TEST_CASE("adaptive quadrature reports non-convergence on exhausted budget") {
  const auto f = [](double x) { return 1.0 / std::sqrt(std::abs(x) + 1e-300); };
  CHECK_THROWS_AS(integrate(f, 0.0, 1.0, 1e-14, 0.0, 4), NonConvergent);
}
