#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "sfcnet/ensembles.hpp"
#include "sfcnet/errors.hpp"

using namespace sfcnet;

namespace {

// Independent bisection on the same equation, run to 1e-14 relative width.
double bisect(const std::vector<WeightedFactor>& f, double target) {
  double lo = 0.0, hi = 1.0;
  while (expected_links(f, hi) < target) hi *= 2.0;
  for (int i = 0; i < 2000 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (expected_links(f, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LayerModel birg(std::size_t n1, std::size_t n2, double p) {
  LayerModel m;
  m.kind = LayerKind::LoanInterest;
  m.type = ModelType::Birg;
  m.origins = n1;
  m.destinations = n2;
  m.origin_group.assign(n1, 0);
  m.destination_group.assign(n2, 0);
  m.table = Eigen::MatrixXd::Constant(1, 1, p);
  m.target_links = p * static_cast<double>(n1 * n2);
  return m;
}

struct Fixture {
  SectorDataset data;
  FitnessSet fit;
  AgentRegistry reg;
};

Fixture three_sector_fixture(std::size_t nf, std::size_t nh, std::uint64_t seed = 1) {
  const std::vector<std::string> s{"Agri", "Industry", "Services"};
  Fixture f;
  f.data = load_dataset(DataPaths::in_directory(testing::three_sector_dir()), SectorConfig::identity(s));
  auto fr = RandomStream::derive(seed, StreamPurpose::Fitness);
  f.fit = compute_fitnesses(f.data, nf, fr);
  auto rr = RandomStream::derive(seed, StreamPurpose::Registry);
  f.reg = build_registry(f.data, 3, nf, nh, rr);
  return f;
}

}  // namespace

TEST_CASE("fit_z") {
  SUBCASE("symmetric case has the closed form") {
    const std::vector<WeightedFactor> f{{1.0, 6.0}};
    CHECK(fit_z(f, 3.0) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("two factors, two households each") {
    const std::vector<WeightedFactor> f{{0.75, 2.0}, {0.25, 2.0}};
    const double z = fit_z(f, 2.0);
    // Closed form: 2 (0.75z/(1+0.75z) + 0.25z/(1+0.25z)) = 2  <=>  z^2 = 1/0.1875.
    CHECK(z == doctest::Approx(1.0 / std::sqrt(0.1875)).epsilon(1e-7));
    CHECK(z == doctest::Approx(2.3094).epsilon(1e-4));
    CHECK(z == doctest::Approx(bisect(f, 2.0)).epsilon(1e-8));
  }
  SUBCASE("unattainable and invalid targets") {
    const std::vector<WeightedFactor> f{{1.0, 6.0}};
    CHECK_THROWS_WITH_AS(fit_z(f, 6.0), doctest::Contains("unattainable"), FitError);
    CHECK_THROWS_AS(fit_z(f, 0.0), FitError);
    CHECK_THROWS_AS(fit_z(f, -1.0), FitError);
    const std::vector<WeightedFactor> zero{{0.0, 6.0}};
    CHECK_THROWS_AS(fit_z(zero, 1.0), FitError);
  }
}

TEST_CASE("fit_z matches an independent bisection on random factor sets") {
  RandomStream gen(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<WeightedFactor> f;
    double pairs = 0.0;
    const int k = testing::uniform_int(gen, 1, 10);
    for (int i = 0; i < k; ++i) {
      const double g = std::pow(10.0, -4.0 * gen.uniform());
      const double c = static_cast<double>(testing::uniform_int(gen, 1, 1000));
      f.push_back({g, c});
      pairs += c;
    }
    const double target = pairs * (0.001 + 0.99 * gen.uniform());
    const double z = fit_z(f, target);
    CHECK(std::abs(expected_links(f, z) - target) <= 1e-8 * target);
    CHECK(z == doctest::Approx(bisect(f, target)).epsilon(1e-6));
  }
}

TEST_CASE("expected link count is strictly increasing in z") {
  const std::vector<WeightedFactor> f{{0.3, 5.0}, {0.01, 40.0}, {2.0, 1.0}};
  double prev = 0.0;
  for (double z = 1e-3; z < 1e4; z *= 1.7) {
    const double l = expected_links(f, z);
    CHECK(l > prev);
    prev = l;
  }
}

TEST_CASE("BiRG probabilities and link counts") {
  const auto m = birg(3, 5, 0.5);
  CHECK(m.probability(2, 4) == 0.5);
  CHECK(expected_link_count(m) == 7.5);
  CHECK(expected_link_count(birg(2, 3, 0.5)) == 3.0);
  CHECK(expected_link_count(birg(2, 3, 0.0)) == 0.0);
}

TEST_CASE("layer construction") {
  const auto fx = three_sector_fixture(300, 900);
  DegreeTargets t;

  SUBCASE("investment block fitted to 5 links per firm") {
    const auto m = build_layer(LayerKind::Investment, ModelType::FicmBlock, fx.fit, fx.reg, t);
    CHECK(m.target_links == 1500.0);
    CHECK(std::abs(expected_link_count(m) - 1500.0) <= 1e-8 * 1500.0);
    for (std::size_t i = 0; i < 300; ++i) CHECK(m.probability(i, i) == 0.0);
    CHECK(m.probability(0, 1) == doctest::Approx(*m.z * fx.fit.d(fx.reg.firm_sector[0], fx.reg.firm_sector[1]) /
                                                 (1.0 + *m.z * fx.fit.d(fx.reg.firm_sector[0], fx.reg.firm_sector[1]))));
  }
  SUBCASE("random-fitness investment uses a_i a_j d") {
    const auto m = build_layer(LayerKind::Investment, ModelType::FicmRandomFitness, fx.fit, fx.reg, t);
    CHECK(std::abs(expected_link_count(m) - 1500.0) <= 1e-8 * 1500.0);
    const double g = fx.fit.a[3] * fx.fit.a[7] * fx.fit.d(fx.reg.firm_sector[3], fx.reg.firm_sector[7]);
    CHECK(m.pair_weight(3, 7) == doctest::Approx(g));
  }
  SUBCASE("consumption does not depend on the household") {
    const auto m = build_layer(LayerKind::Consumption, ModelType::FicmBlock, fx.fit, fx.reg, t);
    CHECK(std::abs(expected_link_count(m) - 20.0 * 900) <= 1e-8 * 20.0 * 900);
    for (std::size_t i = 0; i < 300; i += 37) CHECK(m.probability(i, 0) == m.probability(i, 899));
  }
  SUBCASE("sectored wages") {
    const auto m = build_layer(LayerKind::Wages, ModelType::BirgSectored, fx.fit, fx.reg, t);
    const auto firms = fx.reg.firms_per_sector();
    for (std::size_t h = 0; h < 900; h += 101)
      for (std::size_t f = 0; f < 300; f += 13) {
        const bool same = fx.reg.firm_sector[f] == fx.reg.household_sector[h];
        CHECK(m.probability(f, h) == (same ? 1.0 / static_cast<double>(firms[fx.reg.firm_sector[f]]) : 0.0));
      }
    CHECK(expected_link_count(m) == doctest::Approx(900.0).epsilon(1e-12));
  }
  SUBCASE("random-fitness wages") {
    const auto m = build_layer(LayerKind::Wages, ModelType::FicmRandomFitness, fx.fit, fx.reg, t);
    CHECK(std::abs(expected_link_count(m) - 900.0) <= 1e-8 * 900.0);
    CHECK(m.pair_weight(5, 0) == doctest::Approx(fx.fit.a[5] * fx.fit.x_wage(fx.reg.firm_sector[5])));
  }
  SUBCASE("bank layers") {
    const auto loans = build_layer(LayerKind::LoanInterest, ModelType::Birg, fx.fit, fx.reg, t);
    CHECK(loans.probability(0, 0) == doctest::Approx(1.0 / 3.0));
    const auto dep = build_layer(LayerKind::DepositInterest, ModelType::Birg, fx.fit, fx.reg, t);
    CHECK(dep.probability(2, 5) == doctest::Approx(t.deposits / 3.0));
    DegreeTargets big = t;
    big.loans = 4.0;
    CHECK_THROWS_AS(build_layer(LayerKind::LoanInterest, ModelType::Birg, fx.fit, fx.reg, big), FitError);
  }
}

TEST_CASE("sectored wages with four firms in the sector") {
  auto d = testing::dataset({"S"}, Eigen::MatrixXd::Ones(1, 1), {1}, {1});
  RandomStream fr(1), rr(1);
  const auto fit = compute_fitnesses(d, 4, fr);
  const auto reg = build_registry(d, 1, 4, 10, rr);
  const auto m = build_layer(LayerKind::Wages, ModelType::BirgSectored, fit, reg, DegreeTargets{});
  CHECK(m.probability(0, 0) == 0.25);
}

TEST_CASE("sector without firms but with households cannot employ") {
  auto d = testing::dataset({"S", "T"}, Eigen::MatrixXd::Ones(2, 2), {1, 0}, {1, 1});
  RandomStream fr(1), rr(1);
  const auto fit = compute_fitnesses(d, 4, fr);
  const auto reg = build_registry(d, 1, 4, 100, rr);
  CHECK_THROWS_AS(build_layer(LayerKind::Wages, ModelType::BirgSectored, fit, reg, DegreeTargets{}), FitError);
}

TEST_CASE("same-sector firms share degree rows in the block model") {
  const auto fx = three_sector_fixture(60, 100);
  const auto m = build_layer(LayerKind::Investment, ModelType::FicmBlock, fx.fit, fx.reg, DegreeTargets{});
  // Firms are laid out sector by sector, so firms 0 and 1 share a sector. The
  // diagonal is excluded for both, so compare rows without the pair {0,1}.
  REQUIRE(fx.reg.firm_sector[0] == fx.reg.firm_sector[1]);
  double r0 = 0.0, r1 = 0.0;
  for (std::size_t j = 2; j < 60; ++j) {
    r0 += m.probability(0, j);
    r1 += m.probability(1, j);
  }
  CHECK(r0 == doctest::Approx(r1).epsilon(1e-15));
}

TEST_CASE("scaling d is absorbed by z") {
  auto fx = three_sector_fixture(80, 100);
  const DegreeTargets t;
  const auto m1 = build_layer(LayerKind::Investment, ModelType::FicmRandomFitness, fx.fit, fx.reg, t);
  for (double c : {0.01, 7.0, 1e4}) {
    auto scaled = fx.fit;
    scaled.d *= c;
    const auto m2 = build_layer(LayerKind::Investment, ModelType::FicmRandomFitness, scaled, fx.reg, t);
    CHECK(*m2.z == doctest::Approx(*m1.z / c).epsilon(1e-7));
    double worst = 0.0;
    for (std::size_t i = 0; i < 80; ++i)
      for (std::size_t j = 0; j < 80; ++j) worst = std::max(worst, std::abs(m1.probability(i, j) - m2.probability(i, j)));
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("sampling") {
  SUBCASE("zero probability gives no edge") {
    RandomStream rng(1);
    CHECK(sample_layer(birg(4, 4, 0.0), rng).edges.empty());
  }
  SUBCASE("near-certain edges") {
    double total = 0.0;
    for (int s = 0; s < 100; ++s) {
      RandomStream rng(static_cast<std::uint64_t>(s));
      total += static_cast<double>(sample_layer(birg(2, 2, 1.0 - 1e-12), rng).edges.size());
    }
    CHECK(total / 100.0 == doctest::Approx(4.0).epsilon(1e-9));
  }
  SUBCASE("binomial moments of a 10x10 BiRG") {
    const auto m = birg(10, 10, 0.5);
    double sum = 0.0;
    for (int s = 0; s < 1000; ++s) {
      auto rng = RandomStream::derive(5, StreamPurpose::Topology, static_cast<std::uint64_t>(s));
      sum += static_cast<double>(sample_layer(m, rng).edges.size());
    }
    CHECK(std::abs(sum / 1000.0 - 50.0) <= 3.0 * std::sqrt(100.0 * 0.25 * 1000.0) / 1000.0);
  }
  SUBCASE("edges are sorted, unique and never self-loops") {
    const auto fx = three_sector_fixture(50, 60);
    const auto m = build_layer(LayerKind::Investment, ModelType::FicmRandomFitness, fx.fit, fx.reg, DegreeTargets{});
    for (int s = 0; s < 20; ++s) {
      RandomStream rng(static_cast<std::uint64_t>(s));
      const auto l = sample_layer(m, rng);
      CHECK(std::is_sorted(l.edges.begin(), l.edges.end()));
      CHECK(std::set(l.edges.begin(), l.edges.end()).size() == l.edges.size());
      for (const auto& [o, d] : l.edges) {
        CHECK(o != d);
        CHECK(o < 50);
        CHECK(d < 50);
      }
    }
  }
  SUBCASE("fixed seed gives the same sample") {
    const auto m = birg(20, 30, 0.3);
    RandomStream a(9), b(9);
    CHECK(sample_layer(m, a).edges == sample_layer(m, b).edges);
  }
}

TEST_CASE("sampled edge counts stay within three standard errors") {
  const auto fx = three_sector_fixture(40, 120);
  for (auto model : {TopologyModel::Block, TopologyModel::RandomFitness}) {
    const auto layers = build_layers(model, fx.fit, fx.reg, DegreeTargets{});
    for (const auto& m : layers) {
      double var = 0.0;
      for (std::size_t i = 0; i < m.origins; ++i)
        for (std::size_t j = 0; j < m.destinations; ++j) {
          const double p = m.probability(i, j);
          var += p * (1.0 - p);
        }
      double sum = 0.0;
      const int n = 1000;
      for (int s = 0; s < n; ++s) {
        auto rng = RandomStream::derive(3, StreamPurpose::Topology, static_cast<std::uint64_t>(s),
                                        static_cast<std::uint64_t>(m.kind));
        sum += static_cast<double>(sample_layer(m, rng).edges.size());
      }
      CAPTURE(to_string(m.kind));
      CHECK(std::abs(sum / n - m.target_links) <= 3.0 * std::sqrt(var / n));
    }
  }
}

TEST_CASE("string conversions") {
  for (auto k : kAllLayers) CHECK(layer_from_string(to_string(k)) == k);
  for (auto t : {ModelType::FicmBlock, ModelType::FicmRandomFitness, ModelType::Birg, ModelType::BirgSectored})
    CHECK(model_type_from_string(to_string(t)) == t);
  CHECK(topology_model_from_string("block") == TopologyModel::Block);
  CHECK(topology_model_from_string("rfitness") == TopologyModel::RandomFitness);
  CHECK_THROWS_AS(topology_model_from_string("other"), ConfigError);
}
