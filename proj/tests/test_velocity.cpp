#include <cmath>

#include <gtest/gtest.h>

#include "yudo/field.hpp"
#include "yudo/velocity.hpp"

using namespace yudo;

namespace {

const double pi = std::acos(-1.0);

// azimuthal speed of the Rankine vortex omega = 1 on the unit disc
double rankine_speed(double r) { return std::min(r, 1.0) * std::min(r, 1.0) / (2 * r); }

const ParticleField& rankine() {
  static const ParticleField f = disc_patch({0, 0}, 1.0, 56);
  return f;
}

// blob length of two lattice spacings
KernelSpec rankine_blob() { return KernelSpec::biot_savart_plane(2 * std::sqrt(pi / rankine().size())); }

ParticleField random_field(const Domain& d, std::uint64_t seed, std::size_t n) {
  std::vector<Point> pos;
  std::vector<double> w, v;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    pos.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    w.push_back(rng.uniform(0.001, 0.01));
    v.push_back(rng.uniform(-3, 3));
  }
  return make_field(d, pos, w, v);
}

}  // namespace

TEST(VelocityField, DomainMismatchThrows) {
  const auto f = make_field(Domain::torus(1.0), {{0.5, 0.5}}, {1.0}, {1.0});
  EXPECT_THROW(VelocityField(KernelSpec::biot_savart_plane(), f), InvalidParameter);
  EXPECT_THROW(VelocityField(KernelSpec::biot_savart_torus(2.0, 4), f), InvalidParameter);
}

TEST(EvalVelocity, ZeroVorticity) {
  const auto f = make_field(Domain::plane(), {{0, 0}, {1, 1}}, {1, 1}, {0, 0});
  const Vec2 v = VelocityField(KernelSpec::biot_savart_plane(), f).eval({0.3, 0.2});
  EXPECT_EQ(v.x1, 0.0);
  EXPECT_EQ(v.x2, 0.0);
}

TEST(EvalVelocity, RankineOutside) {
  const VelocityField v(KernelSpec::biot_savart_plane(), rankine());
  const Vec2 u = v.eval({2, 0});
  EXPECT_NEAR(u.x1, 0.0, 1e-4);
  EXPECT_NEAR(u.x2 / 0.25, 1.0, 1e-2);
}

TEST(EvalVelocity, RankineInside) {
  const VelocityField v(KernelSpec::biot_savart_plane(), rankine());
  const Vec2 u = v.eval({0.5, 0});
  EXPECT_NEAR(u.x2 / 0.25, 1.0, 2e-2);
}

TEST(EvalVelocity, SingularOnTopOfASource) {
  const auto f = make_field(Domain::plane(), {{0, 0}, {1, 0}}, {1, 1}, {1, 1});
  const VelocityField v(KernelSpec::biot_savart_plane(), f);
  EXPECT_THROW(v.eval({1, 0}), SingularityError);
  const Vec2 pv = v.eval_pv({1, 0});
  EXPECT_NEAR(pv.x2, 1.0 / (2 * pi), 1e-15);
  const Vec2 ex = v.eval_excluding({1, 0}, 1);
  EXPECT_EQ(ex.x2, pv.x2);
}

TEST(EvalVelocity, SourcesSkipThemselves) {
  const auto f = random_field(Domain::plane(), 1, 200);
  const VelocityField v(KernelSpec::biot_savart_plane(), f);
  const auto at = v.evaluate_at_sources();
  for (std::size_t j = 0; j < f.size(); j += 17) {
    Vec2 want{};
    for (std::size_t i = 0; i < f.size(); ++i)
      if (i != j) want += eval_kernel(v.kernel(), f.positions[j], f.positions[i]) * (f.weights[i] * f.values[i]);
    EXPECT_NEAR(at[j].x1, want.x1, 1e-10 * (1 + norm(want)));
    EXPECT_NEAR(at[j].x2, want.x2, 1e-10 * (1 + norm(want)));
  }
}

TEST(EvalVelocity, TorusSpectrumMatchesKernelSum) {
  const auto k = KernelSpec::biot_savart_torus(1.0, 12, 0.05);
  auto f = random_field(Domain::torus(1.0), 2, 60);
  const VelocityField v(k, f);
  for (std::size_t t = 0; t < 10; ++t) {
    Rng rng(3, t);
    const Point x{rng.uniform(0, 1), rng.uniform(0, 1)};
    Vec2 want{};
    for (std::size_t i = 0; i < f.size(); ++i) want += eval_kernel(k, x, f.positions[i]) * (f.weights[i] * f.values[i]);
    const Vec2 got = v.eval(x);
    EXPECT_NEAR(got.x1, want.x1, 1e-12);
    EXPECT_NEAR(got.x2, want.x2, 1e-12);
  }
}

TEST(EvalVelocity, TorusVelocityHasZeroMean) {
  const auto f = uniform_lattice(Domain::torus(1.0), {}, 1.0 / 16, [](const Point& x) {
    return std::sin(2 * pi * x.x1) * std::cos(4 * pi * x.x2) + 0.3 * std::cos(2 * pi * (x.x1 + x.x2));
  });
  const VelocityField v(KernelSpec::biot_savart_torus(1.0, 8), f);
  const int n = 24;
  Vec2 sum{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sum += v.eval({(i + 0.5) / n, (j + 0.5) / n});
  EXPECT_NEAR(sum.x1 / (n * n), 0.0, 1e-14);
  EXPECT_NEAR(sum.x2 / (n * n), 0.0, 1e-14);
}

TEST(EvalVelocity, TabulatedKernelSumsTheTable) {
  std::vector<TabulatedKernel::Sample> s;
  for (double a : {-2.0, 2.0})
    for (double b : {-2.0, 2.0}) s.push_back({{a, b}, {0, 0}, {a, 1.0}});
  const auto k = KernelSpec::tabulated(std::make_shared<TabulatedKernel>(TabulatedKernel::from_samples(s)));
  const auto f = make_field(Domain::plane(), {{0, 0}, {0.1, 0}}, {0.5, 0.5}, {2.0, 4.0});
  const VelocityField v(k, f);
  const Vec2 u = v.eval({1.0, 0.0});
  EXPECT_NEAR(u.x1, 3.0, 1e-14);
  EXPECT_NEAR(u.x2, 3.0, 1e-14);
}

TEST(VelocityProperty, Linearity) {
  for (const auto& k : {KernelSpec::biot_savart_plane(0.05), KernelSpec::biot_savart_torus(2.0, 8, 0.05)}) {
    const auto a = random_field(k.domain(), 4, 150), b = random_field(k.domain(), 5, 150);
    auto both = a;
    both.positions.insert(both.positions.end(), b.positions.begin(), b.positions.end());
    both.weights.insert(both.weights.end(), b.weights.begin(), b.weights.end());
    both.values.insert(both.values.end(), b.values.begin(), b.values.end());
    auto scaled = a;
    for (auto& x : scaled.values) x *= -2.5;
    const VelocityField va(k, a), vb(k, b), vab(k, both), vs(k, scaled);
    for (const Point x : {Point{0.1, 0.2}, Point{1.3, -0.7}}) {
      const Vec2 sum = va.eval(x) + vb.eval(x), got = vab.eval(x);
      EXPECT_NEAR(got.x1, sum.x1, 1e-12);
      EXPECT_NEAR(got.x2, sum.x2, 1e-12);
      EXPECT_NEAR(vs.eval(x).x1, -2.5 * va.eval(x).x1, 1e-12);
      EXPECT_NEAR(vs.eval(x).x2, -2.5 * va.eval(x).x2, 1e-12);
    }
  }
}

TEST(VelocityProperty, RadialSourceGivesAzimuthalVelocity) {
  const VelocityField v(rankine_blob(), rankine());
  for (int i = 0; i < 40; ++i) {
    const double r = 0.137 + 0.05 * i, th = 0.61 * i;
    if (std::abs(r - 1.0) < 0.15) continue;  // blob smearing of the patch edge
    const Point x{r * std::cos(th), r * std::sin(th)};
    const Vec2 u = v.eval(x);
    EXPECT_LE(std::abs(dot(u, x)) / r, 1e-3 * norm(u)) << r;
    EXPECT_NEAR(norm(u), rankine_speed(r), 2e-2 * rankine_speed(r)) << r;
  }
}

TEST(VelocityProperty, SameResultForAnyWorkerCount) {
  const auto f = random_field(Domain::plane(), 6, 500);
  const VelocityField v(KernelSpec::biot_savart_plane(0.02), f);
  std::vector<Point> xs;
  for (std::size_t i = 0; i < 300; ++i) xs.push_back({Rng(7, i).uniform(-1, 1), Rng(8, i).uniform(-1, 1)});
  set_worker_count(1);
  const auto a = v.evaluate(xs);
  set_worker_count(4);
  const auto b = v.evaluate(xs);
  set_worker_count(0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ASSERT_EQ(a[i].x1, b[i].x1);
    ASSERT_EQ(a[i].x2, b[i].x2);
  }
}

TEST(VelocityProperty, DifferenceAgreesWithTwoEvaluations) {
  for (const auto& k : {KernelSpec::biot_savart_plane(), KernelSpec::biot_savart_plane(0.1),
                        KernelSpec::biot_savart_torus(2.0, 16)}) {
    const auto f = random_field(k.domain(), 9, 200);
    const VelocityField v(k, f);
    for (std::size_t i = 0; i < 20; ++i) {
      Rng rng(10, i);
      const Point x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Point y = x + rng.unit_vector() * 0.05;
      const Vec2 d = v.difference(x, y), naive = v.eval(x) - v.eval(y);
      EXPECT_NEAR(d.x1, naive.x1, 1e-9 * (1 + norm(naive))) << k.name();
      EXPECT_NEAR(d.x2, naive.x2, 1e-9 * (1 + norm(naive))) << k.name();
    }
  }
}

TEST(SupNorm, ZeroField) {
  const auto f = make_field(Domain::plane(), {{0, 0}}, {1.0}, {0.0});
  const auto rep = sup_norm_check(VelocityField(KernelSpec::biot_savart_plane(), f), f, 1.0, 4.0, {{1, 1}});
  EXPECT_EQ(rep.sup, 0.0);
  EXPECT_EQ(rep.ratio, 0.0);
}

TEST(SupNorm, RankineMaximumOnTheUnitCircle) {
  std::vector<Point> probes;
  for (int i = 0; i < 64; ++i)
    for (double r : {0.5, 0.9, 1.0, 1.1, 2.0}) probes.push_back({r * std::cos(0.1 * i), r * std::sin(0.1 * i)});
  const auto rep = sup_norm_check(VelocityField(KernelSpec::biot_savart_plane(), rankine()), rankine(), 1.0, 4.0, probes);
  EXPECT_NEAR(rep.sup, 0.5, 1e-2);
  EXPECT_EQ(rep.probes, probes.size());
  // max{1, 1/2} (pi + pi^(1/4)) with the unit window holding the whole disc
  EXPECT_NEAR(rep.bound, pi + std::pow(pi, 0.25), 1e-10);
}

TEST(SupNorm, RatioInvariantUnderDoubling) {
  auto twice = rankine();
  for (auto& v : twice.values) v *= 2;
  const std::vector<Point> probes{{1.0, 0.0}, {0.0, 1.5}};
  const auto a = sup_norm_check(VelocityField(KernelSpec::biot_savart_plane(), rankine()), rankine(), 1.5, 3.0, probes);
  const auto b = sup_norm_check(VelocityField(KernelSpec::biot_savart_plane(), twice), twice, 1.5, 3.0, probes);
  EXPECT_NEAR(b.sup, 2 * a.sup, 1e-12);
  EXPECT_NEAR(b.bound, 2 * a.bound, 1e-12);
  EXPECT_NEAR(b.ratio, a.ratio, 1e-12);
}

TEST(SupNorm, ExponentRanges) {
  const auto& f = rankine();
  const VelocityField v(KernelSpec::biot_savart_plane(), f);
  EXPECT_THROW(sup_norm_check(v, f, 2.0, 4.0, {}), InvalidParameter);
  EXPECT_THROW(sup_norm_check(v, f, 0.5, 4.0, {}), InvalidParameter);
  EXPECT_THROW(sup_norm_check(v, f, 1.0, 2.0, {}), InvalidParameter);
}

TEST(HolderReport, ZeroFieldAndExponent) {
  const auto f = make_field(Domain::plane(), {{0, 0}}, {1.0}, {0.0});
  const VelocityField v(KernelSpec::biot_savart_plane(), f);
  const auto pairs = log_uniform_pairs(Domain::plane(), {-1, -1, 1, 1}, 1);
  const auto rep = holder_modulus_report(v, 4.0, pairs, 100);
  EXPECT_EQ(rep.empirical_constant, 0.0);
  for (const auto& s : rep.samples) ASSERT_NEAR(s.bound, 4.0 * std::sqrt(s.distance), 1e-15);
  EXPECT_THROW(holder_modulus_report(v, 2.0, pairs, 10), InvalidParameter);
}

TEST(HolderReport, RankineStableUnderDoubling) {
  const VelocityField v(rankine_blob(), rankine());
  const auto pairs = log_uniform_pairs(Domain::plane(), {-1.4, -1.4, 1.4, 1.4}, 2);
  const auto a = holder_modulus_report(v, 8.0, pairs, 10000);
  const auto b = holder_modulus_report(v, 8.0, pairs, 20000);
  EXPECT_TRUE(std::isfinite(a.empirical_constant));
  EXPECT_GT(a.empirical_constant, 0.0);
  EXPECT_LE(std::abs(b.empirical_constant - a.empirical_constant), 0.1 * a.empirical_constant);
  EXPECT_EQ(a.pairs_sampled, 10000u);
}

TEST(HolderReport, ScalesLinearlyWithAmplitude) {
  auto twice = rankine();
  for (auto& v : twice.values) v *= 2;
  const auto pairs = log_uniform_pairs(Domain::plane(), {-1, -1, 1, 1}, 3);
  const auto a = holder_modulus_report(VelocityField(KernelSpec::biot_savart_plane(), rankine()), 4.0, pairs, 300);
  const auto b = holder_modulus_report(VelocityField(KernelSpec::biot_savart_plane(), twice), 4.0, pairs, 300);
  EXPECT_NEAR(b.empirical_constant, 2 * a.empirical_constant, 1e-12 * b.empirical_constant);
}

TEST(PhiThetaReport, ZeroFieldAndBoundedField) {
  const auto zero = make_field(Domain::plane(), {{0, 0}}, {1.0}, {0.0});
  const auto pairs = log_uniform_pairs(Domain::plane(), {-1, -1, 1, 1}, 4);
  EXPECT_EQ(phi_theta_modulus_report(VelocityField(KernelSpec::biot_savart_plane(), zero), GrowthFunction::constant(1.0),
                                     pairs, 50)
                .empirical_constant,
            0.0);
  const auto rep = phi_theta_modulus_report(VelocityField(rankine_blob(), rankine()),
                                            GrowthFunction::constant(1.0), pairs, 2000);
  EXPECT_TRUE(std::isfinite(rep.empirical_constant));
  EXPECT_GT(rep.empirical_constant, 0.0);
  EXPECT_LT(rep.empirical_constant, 10.0);
  EXPECT_EQ(rep.theta, "constant");
}

TEST(PhiThetaReport, WithinBoundedFactorOfPairwiseHolder) {
  // at p = 1 - log d the two bounds differ by d^(2/p) which lies in [e^-2, 1]
  const auto pairs = log_uniform_pairs(Domain::plane(), {-1, -1, 1, 1}, 5, 1e-6, 0.1);
  const auto rep = phi_theta_modulus_report(VelocityField(KernelSpec::biot_savart_plane(), rankine()),
                                            GrowthFunction::constant(1.0), pairs, 500);
  ASSERT_FALSE(rep.samples.empty());
  for (const auto& s : rep.samples) {
    const double p = 1 - std::log(s.distance);
    const double holder = s.dv / (p * std::pow(s.distance, 1 - 2 / p));
    ASSERT_GE(holder / s.quotient, std::exp(-2.0) * (1 - 1e-12));
    ASSERT_LE(holder / s.quotient, 1.0 + 1e-12);
  }
}

TEST(PairSources, RingEdgePairsStayOnEdges) {
  const std::vector<double> edges{0.0, 0.1, 0.2, 0.5, 1.0};
  const auto pairs = ring_edge_pairs({1, 1}, edges, 3);
  for (std::size_t i = 0; i < 500; ++i) {
    const auto [x, y] = pairs(i);
    for (const Point p : {x, y}) {
      const double r = std::hypot(p.x1 - 1, p.x2 - 1);
      bool on = false;
      for (double e : edges) on = on || std::abs(r - e) < 1e-12;
      ASSERT_TRUE(on) << r;
    }
    ASSERT_GT(norm(x - y), 0.0);
  }
  EXPECT_THROW(ring_edge_pairs({0, 0}, {0.0, 1.0}, 1), InvalidParameter);
}

TEST(PairSources, LogUniformDistances) {
  const auto pairs = log_uniform_pairs(Domain::plane(), {0, 0, 1, 1}, 6, 1e-4, 1.0);
  int small = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto [x, y] = pairs(i);
    const double d = norm(x - y);
    ASSERT_GE(d, 1e-4 * (1 - 1e-12));
    ASSERT_LE(d, 1.0 + 1e-12);
    small += d < 1e-2;
  }
  EXPECT_GT(small, 400);
  EXPECT_LT(small, 600);
  EXPECT_THROW(log_uniform_pairs(Domain::plane(), {0, 0, 1, 1}, 6, 0.0), InvalidParameter);
}

TEST(ModulusReport, CoincidentPairsAreSkipped) {
  const VelocityField v(KernelSpec::biot_savart_plane(), rankine());
  const PairSource same = [](std::size_t) { return std::pair{Point{3, 3}, Point{3, 3}}; };
  const auto rep = lipschitz_report(v, same, 10);
  EXPECT_TRUE(rep.samples.empty());
  EXPECT_EQ(rep.pairs_sampled, 10u);
  EXPECT_EQ(to_string(rep.bound_kind), "lipschitz");
}
