#include <catch.hpp>

#include <cmath>
#include <vector>

#include "relent/dynamics.hpp"
#include "relent/equilibrium.hpp"

using namespace relent;

namespace {

constexpr double kSqrt2Pi = 2.5066282746310002;

ChainModel std_normal_chain(int n) {
  const Potential h = Potential::harmonic(1.0, 0.0);
  return ChainModel(n, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::FullLine));
}

}  // namespace

TEST_CASE("subunit density reproduces the standard normal") {
  const ChainModel chain = std_normal_chain(1);
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-c, c, 2048);
  const DensityField p = subunit_density(chain, grid);
  p.validate(1e-12);
  // peak cell against the quoted value and against the exact cell average
  CHECK(p.at(grid.locate(0.0)) == Approx(1.0 / kSqrt2Pi).epsilon(1e-4));
  const DensityField exact = gaussian_field(grid, 0.0, 1.0);
  CHECK(p.at(grid.locate(0.0)) == Approx(exact.at(grid.locate(0.0))).epsilon(1e-9));
  CHECK(field_mean(p) == Approx(0.0).margin(1e-10));
  CHECK(field_variance(p) == Approx(1.0).epsilon(1e-4));
}

TEST_CASE("subunit density mean sits at the harmonic rest length") {
  const Potential h = Potential::harmonic(2.0, 0.7);
  const ChainModel chain(1, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::FullLine));
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-c, c, 1024);
  CHECK(field_mean(subunit_density(chain, grid)) == Approx(0.7).margin(1e-7));
}

TEST_CASE("log partition function") {
  const ChainModel c1 = std_normal_chain(1);
  CHECK(log_partition_function(c1) == Approx(std::log(kSqrt2Pi)).epsilon(1e-10));

  const ChainModel c100 = std_normal_chain(100);
  CHECK(log_partition_function(c100) == Approx(91.893853320467267).epsilon(1e-9));

  const ChainModel c2 = std_normal_chain(2);
  const ChainModel c3 = std_normal_chain(3);
  const ChainModel c5 = std_normal_chain(5);
  CHECK(log_partition_function(c5) ==
        Approx(log_partition_function(c2) + log_partition_function(c3)).epsilon(1e-13));
}

TEST_CASE("joint log density") {
  const ChainModel c1 = std_normal_chain(1);
  ChainState origin;
  origin.junctions = {0.0};
  CHECK(joint_log_density(c1, origin) == Approx(-std::log(kSqrt2Pi)).epsilon(1e-12));

  // factorization over extensions
  const ChainModel c2 = std_normal_chain(2);
  ChainState two;
  two.junctions = {0.4, 0.4 + (-1.1)};
  ChainState ext1, ext2;
  ext1.junctions = {0.4};
  ext2.junctions = {-1.1};
  CHECK(joint_log_density(c2, two) ==
        Approx(joint_log_density(c1, ext1) + joint_log_density(c1, ext2)).epsilon(1e-12));

  // translation symmetry: shift the rest length and every extension together
  const double s = 0.9;
  const Potential hs = Potential::harmonic(1.0, s);
  const ChainModel cs(2, hs, 1.0, 1.0, CoordinateDomain{CoordinateDomain::Kind::FullLine, 12.0});
  const ChainModel c0(2, Potential::harmonic(1.0, 0.0), 1.0, 1.0,
                      CoordinateDomain{CoordinateDomain::Kind::FullLine, 12.0});
  ChainState base, shifted;
  base.junctions = {0.3, 0.3 - 0.8};
  shifted.junctions = {0.3 + s, 0.3 - 0.8 + 2 * s};
  CHECK(joint_log_density(cs, shifted) == Approx(joint_log_density(c0, base)).epsilon(1e-12));
}

TEST_CASE("joint log density rejects extensions outside a half line") {
  const Potential h = Potential::harmonic(4.0, 1.0);
  const ChainModel chain(2, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::HalfLine));
  ChainState bad;
  bad.junctions = {1.0, 0.5};  // second extension is -0.5
  CHECK_THROWS_AS(joint_log_density(chain, bad), DomainViolation);
}

TEST_CASE("end marginal: N = 1 is the subunit density itself") {
  const ChainModel chain = std_normal_chain(1);
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-c, c, 512);
  const DensityField a = subunit_density(chain, grid);
  const DensityField b = end_marginal(chain, grid);
  REQUIRE(a.v.size() == b.v.size());
  for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(a.v[i] == b.v[i]);
}

TEST_CASE("end marginal: harmonic chain gives the analytic Gaussian") {
  const ChainModel chain = std_normal_chain(4);
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-4 * c, 4 * c, 2048);
  const DensityField m = end_marginal(chain, grid);
  m.validate(1e-9);
  // cell-averaged N(0, 4) reference via erf
  const DensityField exact = gaussian_field(grid, 0.0, 2.0);
  for (double x : {-3.1, -1.7, -0.9, -0.4, 0.05, 0.55, 1.1, 1.9, 2.6, 3.3}) {
    const int i = grid.locate(x);
    CHECK(m.at(i) == Approx(exact.at(i)).margin(2e-6));
  }
  CHECK(field_variance(m) == Approx(4.0).epsilon(1e-3));
}

TEST_CASE("end marginal mean is additive in N") {
  const Potential h = Potential::harmonic(3.0, 0.5);
  const ChainModel chain(3, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::FullLine));
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(3 * (0.5 - c), 3 * (0.5 + c), 1024);
  const DensityField m = end_marginal(chain, grid);
  const Moments mom = extension_moments(chain);
  CHECK(field_mean(m) == Approx(3.0 * mom.mean).margin(1e-7));
}

TEST_CASE("end marginal equals one more convolution of the previous marginal") {
  const ChainModel chain = std_normal_chain(1);
  detail::PcDensity base;
  base.lo = chain.domain.lower();
  base.h = (chain.domain.upper() - chain.domain.lower()) / 2048;
  base.v.resize(2048);
  const auto masses = detail::boltzmann_cell_masses(chain.phi, chain.kBT, base.lo,
                                                    chain.domain.upper(), 2048);
  double tot = 0.0;
  for (double m : masses) tot += m;
  for (int i = 0; i < 2048; ++i) base.v[static_cast<std::size_t>(i)] = masses[static_cast<std::size_t>(i)] / (tot * base.h);

  const detail::PcDensity four = detail::pc_self_convolve(base, 4);
  const detail::PcDensity three = detail::pc_self_convolve(base, 3);
  const detail::PcDensity step = detail::pc_convolve(three, base);
  REQUIRE(four.v.size() == step.v.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < four.v.size(); ++i) l1 += std::abs(four.v[i] - step.v[i]) * four.h;
  CHECK(l1 < 1e-8);
}

TEST_CASE("end marginal rejects grids that miss mass") {
  const Potential h = Potential::harmonic(4.0, 1.0);
  const ChainModel chain(3, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::HalfLine));
  const Grid1D tiny = Grid1D::uniform(0.0, 1.5, 64);  // marginal lives near 3
  CHECK_THROWS_AS(end_marginal(chain, tiny), GridTooCoarse);
}

TEST_CASE("end free energy of a single Gaussian subunit is quadratic") {
  const ChainModel chain = std_normal_chain(1);
  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-c, c, 2048);
  const ScalarField1D f = end_free_energy(chain, grid);
  const int i0 = grid.locate(0.0);
  for (double x : {-2.5, -1.0, 0.5, 1.5, 3.0}) {
    const int i = grid.locate(x);
    REQUIRE(f.available(i));
    const double xc = grid.center(i), x0c = grid.center(i0);
    CHECK(f.v[static_cast<std::size_t>(i)] - f.v[static_cast<std::size_t>(i0)] ==
          Approx(0.5 * xc * xc - 0.5 * x0c * x0c).margin(1e-4));
  }
}

TEST_CASE("free-energy cells with underflowed density are marked unavailable") {
  // a 16-fold convolution pushes the support-edge density below 1e-300
  const Potential h = Potential::harmonic(4.0, 1.0);
  const ChainModel chain(16, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::HalfLine));
  const Grid1D grid = Grid1D::uniform(0.0, 16.0 * chain.domain.upper(), 512);
  const ScalarField1D f = end_free_energy(chain, grid);
  CHECK_FALSE(f.available(grid.n - 1));
  CHECK(f.available(grid.locate(16.0)));  // the bulk (mean = 16) is available
  CHECK(std::isnan(f.v[static_cast<std::size_t>(grid.n - 1)]));
}

TEST_CASE("argmin of the end free energy is the argmax of the marginal") {
  const Potential h = Potential::harmonic(2.0, 1.2);
  const ChainModel chain(3, h, 1.0, 1.0, auto_domain(h, 1.0, CoordinateDomain::Kind::HalfLine));
  const Grid1D grid = Grid1D::uniform(0.0, 3 * chain.domain.upper(), 768);
  const DensityField m = end_marginal(chain, grid);
  const ScalarField1D f = end_free_energy(chain, grid);
  int argmax = 0, argmin = -1;
  double best = -1.0, low = 1e300;
  for (int i = 0; i < grid.n; ++i) {
    if (m.at(i) > best) {
      best = m.at(i);
      argmax = i;
    }
    if (f.available(i) && f.v[static_cast<std::size_t>(i)] < low) {
      low = f.v[static_cast<std::size_t>(i)];
      argmin = i;
    }
  }
  CHECK(argmin == argmax);
}

TEST_CASE("sampler: half-line draws are non-negative and chi-squared consistent") {
  const Potential sw = Potential::soft_wall(4.0, 1.0, 4.0);
  const ChainModel chain(4, sw, 1.0, 1.0, auto_domain(sw, 1.0, CoordinateDomain::Kind::HalfLine));
  const ExtensionSampler sampler(chain);
  Rng rng(777001);

  const int n_states = 2500;  // 10^4 extensions
  std::vector<double> ext;
  ext.reserve(4 * n_states);
  for (int s = 0; s < n_states; ++s) {
    const ChainState st = sample_chain(sampler, rng);
    double prev = 0.0;
    for (double x : st.junctions) {
      REQUIRE(x - prev >= 0.0);
      ext.push_back(x - prev);
      prev = x;
    }
  }

  // 50 equiprobable bins against quadrature masses, 1% level (df=49: 74.919)
  const int nbins = 50;
  std::vector<double> edges(nbins + 1);
  for (int b = 0; b <= nbins; ++b) edges[static_cast<std::size_t>(b)] = sampler.quantile(b / static_cast<double>(nbins));
  const double z = subunit_partition(chain.phi, chain.kBT, chain.domain);
  double chi2 = 0.0;
  for (int b = 0; b < nbins; ++b) {
    const double e = integrate([&](double x) { return std::exp(-chain.phi.value(x)); },
                               edges[static_cast<std::size_t>(b)],
                               edges[static_cast<std::size_t>(b) + 1], 1e-10, 1e-300)
                         .value /
                     z * static_cast<double>(ext.size());
    double o = 0.0;
    for (double x : ext)
      if (x >= edges[static_cast<std::size_t>(b)] &&
          (x < edges[static_cast<std::size_t>(b) + 1] || b == nbins - 1))
        o += 1.0;
    chi2 += (o - e) * (o - e) / e;
  }
  CHECK(chi2 < 74.919);
}

TEST_CASE("sampler: end means within Monte Carlo error, KS against the marginal") {
  const ChainModel chain = std_normal_chain(5);
  const ExtensionSampler sampler(chain);
  Rng rng(424242);
  const int n = 20000;
  std::vector<double> ends(n);
  double mean = 0.0;
  for (int s = 0; s < n; ++s) {
    const ChainState st = sample_chain(sampler, rng);
    ends[static_cast<std::size_t>(s)] = st.junctions.back();
    mean += st.junctions.back();
  }
  mean /= n;
  const Moments mom = extension_moments(chain);
  const double se = std::sqrt(5.0 * mom.var / n);
  CHECK(std::abs(mean - 5.0 * mom.mean) < 4.0 * se);

  const double c = chain.domain.cutoff;
  const Grid1D grid = Grid1D::uniform(-5 * c, 5 * c, 4096);
  const DensityField marg = end_marginal(chain, grid);
  const double ks = ks_statistic(ends, PiecewiseCdf(marg));
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampled free energy agrees with the exact one on well-filled bins") {
  const ChainModel chain = std_normal_chain(2);
  const ExtensionSampler sampler(chain);
  Rng rng(12345);
  const int n = 100000;
  std::vector<double> ends(n);
  for (int s = 0; s < n; ++s) ends[static_cast<std::size_t>(s)] = sample_chain(sampler, rng).junctions.back();

  const double c = chain.domain.cutoff;
  const Grid1D bins = Grid1D::uniform(-2 * c, 2 * c, 128);
  std::size_t dropped = 0;
  const DensityField hist = histogram_density(ends, bins, &dropped);
  REQUIRE(dropped < 50u);

  const DensityField marg = end_marginal(chain, bins);
  int tested = 0;
  for (int i = 0; i < bins.n; ++i) {
    const double count = hist.at(i) * n * bins.h();
    if (count < 500) continue;
    ++tested;
    const double f_hat = -std::log(hist.at(i));
    const double f_exact = -std::log(marg.at(i));
    const double se = std::sqrt((1.0 - count / n) / count);  // se of -ln p_hat
    CHECK(std::abs(f_hat - f_exact) < 3.0 * se);
  }
  CHECK(tested >= 15);
}

TEST_CASE("sampler table resolution is enforced") {
  const ChainModel chain = std_normal_chain(1);
  CHECK_THROWS_AS(ExtensionSampler(chain, 1024), ConfigError);
}
