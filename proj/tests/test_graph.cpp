#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "doctest.h"
#include "stgin/csv.hpp"
#include "stgin/errors.hpp"
#include "stgin/graph.hpp"
#include "test_support.hpp"

using namespace stgin;

namespace {

Tensor line_distances(std::size_t n, double spacing) {
  Tensor d({n, n});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      d(a, b) = spacing * std::abs(static_cast<double>(a) - static_cast<double>(b));
    }
  }
  return d;
}

Tensor random_distances(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(10.0, 5000.0);
  Tensor d({n, n});
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) d(a, b) = a == b ? 0.0 : u(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("gaussian kernel weights") {
  const Tensor d = Tensor::matrix({{0, 2, 5}, {2, 0, 3}, {7, 3, 0}});
  const RoadGraph g = build_adjacency(d, 2.0, 3.0);
  CHECK(g.adjacency(0, 0) == 1.0);
  CHECK(g.adjacency(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::abs(g.adjacency(0, 1) - 0.36788) < 1e-5);
  CHECK(g.adjacency(1, 2) == doctest::Approx(std::exp(-9.0 / 4.0)).epsilon(1e-15));
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency(2, 0) == 0.0);
  CHECK(g.neighborhoods[0] == std::vector<std::size_t>{0, 1});
  CHECK(g.neighborhoods[2] == std::vector<std::size_t>{1, 2});
  CHECK(g.edge_count() == 4);
}

TEST_CASE("just past kappa is cut") {
  const double kappa = 100.0;
  const double eps = std::nextafter(kappa, 1e9) - kappa;
  Tensor d = Tensor::matrix({{0, kappa}, {kappa + eps, 0}});
  const RoadGraph g = build_adjacency(d, 50.0, kappa);
  CHECK(g.adjacency(0, 1) > 0.0);
  CHECK(g.adjacency(1, 0) == 0.0);
}

TEST_CASE("directed distances stay directed") {
  const Tensor d = Tensor::matrix({{0, 1}, {9, 0}});
  const RoadGraph g = build_adjacency(d, 2.0, 5.0);
  CHECK(g.adjacency(0, 1) > 0.0);
  CHECK(g.adjacency(1, 0) == 0.0);
  CHECK(g.neighborhoods[1] == std::vector<std::size_t>{1});
}

TEST_CASE("underflowing kernel keeps the edge") {
  const Tensor d = Tensor::matrix({{0, 1000}, {1000, 0}});
  const RoadGraph g = build_adjacency(d, 1.0, 2000.0);
  CHECK(g.adjacency(0, 1) > 0.0);
  CHECK(g.neighborhoods[0].size() == 2);
}

TEST_CASE("build_adjacency validation") {
  CHECK_THROWS_AS(build_adjacency(Tensor::matrix({{0, -1}, {1, 0}}), 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_adjacency(Tensor::matrix({{0, 1}, {1, 0}}), 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_adjacency(Tensor::matrix({{0, 1}, {1, 0}}), 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(build_adjacency(Tensor::matrix({{0, 1}, {1, 0}}), -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_adjacency(Tensor::matrix({{1, 1}, {1, 0}}), 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(build_adjacency(Tensor({2, 3}), 1.0, 1.0), ValidationError);
}

TEST_CASE("unreachable pairs get weight zero") {
  const double inf = std::numeric_limits<double>::infinity();
  const RoadGraph g = build_adjacency(Tensor::matrix({{0, inf}, {1, 0}}), 1.0, 5.0);
  CHECK(g.adjacency(0, 1) == 0.0);
  CHECK(g.adjacency(1, 0) > 0.0);
}

TEST_CASE("sigma examples") {
  CHECK(sigma_from_distances(Tensor::matrix({{0, 2, 2}, {2, 0, 2}, {2, 2, 0}})) == 0.0);
  CHECK(sigma_from_distances(Tensor::matrix({{0, 1}, {3, 0}})) == doctest::Approx(1.0).epsilon(1e-15));
  // Symmetric duplication: the multiset {5,5,1,1,4,4}.
  const Tensor d = Tensor::matrix({{0, 5, 1}, {5, 0, 4}, {1, 4, 0}});
  const double mean = (5 + 5 + 1 + 1 + 4 + 4) / 6.0;
  double var = 0.0;
  for (double v : {5.0, 5.0, 1.0, 1.0, 4.0, 4.0}) var += (v - mean) * (v - mean);
  CHECK(sigma_from_distances(d) == doctest::Approx(std::sqrt(var / 6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(sigma_from_distances(Tensor::matrix({{0.0}})), ValidationError);
}

TEST_CASE("degenerate sigma is rejected downstream") {
  const Tensor d = Tensor::matrix({{0, 2}, {2, 0}});
  CHECK_THROWS_AS(build_adjacency(d, sigma_from_distances(d), 3.0), ValidationError);
}

TEST_CASE("kappa percentile") {
  const Tensor d = line_distances(5, 100.0);  // off-diagonal: 8×100, 6×200, 4×300, 2×400
  CHECK(kappa_from_percentile(d, 100.0) == 400.0);
  CHECK(kappa_from_percentile(d, 50.0) == 200.0);
  const double k0 = kappa_from_percentile(d, 0.0);
  CHECK(k0 < 100.0);
  CHECK(k0 > 99.999);
  const RoadGraph g = build_adjacency(d, sigma_from_distances(d), k0);
  CHECK(g.edge_count() == 0);
  CHECK_THROWS_AS(kappa_from_percentile(d, 101.0), ValidationError);
}

TEST_CASE("singleton graph") {
  const Tensor d = Tensor::matrix({{0.0}});
  const RoadGraph g = build_adjacency(d, 1.0, 1.0);
  CHECK(g.adjacency == Tensor::matrix({{1.0}}));
  CHECK(g.neighborhoods[0] == std::vector<std::size_t>{0});
}

TEST_CASE("prebuilt adjacency loading") {
  const auto dir = stgin::testing::scratch_dir("graph_load");
  {
    std::ofstream(dir / "eye.csv") << "1,0\n0,1\n";
    const RoadGraph g = load_prebuilt_adjacency(dir / "eye.csv");
    CHECK(g.n_nodes == 2);
    CHECK(g.neighborhoods[0] == std::vector<std::size_t>{0});
    CHECK(g.neighborhoods[1] == std::vector<std::size_t>{1});
  }
  {
    std::ofstream(dir / "nodiag.csv") << "0,0.5\n0.25,0\n";
    const RoadGraph g = load_prebuilt_adjacency(dir / "nodiag.csv");
    CHECK(g.adjacency(0, 0) == 1.0);
    CHECK(g.adjacency(1, 1) == 1.0);
    CHECK(g.adjacency(0, 1) == 0.5);
  }
  std::ofstream(dir / "rect.csv") << "1,0,0\n0,1,0\n";
  CHECK_THROWS_AS(load_prebuilt_adjacency(dir / "rect.csv"), FormatError);
  std::ofstream(dir / "ragged.csv") << "1,0\n0\n";
  CHECK_THROWS_AS(load_prebuilt_adjacency(dir / "ragged.csv"), FormatError);
  std::ofstream(dir / "range.csv") << "1,1.5\n0,1\n";
  try {
    load_prebuilt_adjacency(dir / "range.csv");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("row 1, column 2") != std::string::npos);
  }
  std::ofstream(dir / "text.csv") << "1,x\n0,1\n";
  CHECK_THROWS_AS(load_prebuilt_adjacency(dir / "text.csv"), FormatError);
  CHECK_THROWS_AS(load_prebuilt_adjacency(dir / "missing.csv"), FormatError);
}

TEST_CASE("save then load is bit-exact") {
  const auto dir = stgin::testing::scratch_dir("graph_roundtrip");
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = stgin::testing::random_size(rng, 1, 30);
    const Tensor d = random_distances(rng, n);
    const double sigma = n > 1 ? sigma_from_distances(d) : 1.0;
    const double kappa = n > 1 ? kappa_from_percentile(d, 40.0) : 1.0;
    const RoadGraph g = build_adjacency(d, sigma, kappa);
    save_adjacency(dir / "adj.csv", g);
    const RoadGraph back = load_prebuilt_adjacency(dir / "adj.csv");
    CHECK(back.adjacency == g.adjacency);
    CHECK(back.neighborhoods == g.neighborhoods);
  }
}

TEST_CASE("weight decreases with length up to kappa, zero beyond") {
  const double sigma = 300.0, kappa = 900.0;
  double previous = 1.0;
  for (double len = 1.0; len <= 1200.0; len += 1.0) {
    const RoadGraph g = build_adjacency(Tensor::matrix({{0, len}, {len, 0}}), sigma, kappa);
    const double w = g.adjacency(0, 1);
    if (len <= kappa) {
      CHECK(w > 0.0);
      CHECK(w < previous);
      previous = w;
    } else {
      CHECK(w == 0.0);
    }
  }
}

TEST_CASE("graph invariants on random instances") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = stgin::testing::random_size(rng, 2, 25);
    const Tensor d = random_distances(rng, n);
    const double kappa = kappa_from_percentile(d, 30.0);
    const RoadGraph g = build_adjacency(d, sigma_from_distances(d), kappa);
    for (std::size_t a = 0; a < n; ++a) {
      CHECK(g.adjacency(a, a) == 1.0);
      const auto& nb = g.neighborhoods[a];
      CHECK(std::find(nb.begin(), nb.end(), a) != nb.end());
      for (std::size_t b = 0; b < n; ++b) {
        const double w = g.adjacency(a, b);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
        CHECK((w == 0.0) == (d(a, b) > kappa));
        const bool in_nb = std::find(nb.begin(), nb.end(), b) != nb.end();
        CHECK(in_nb == (w > 0.0));
      }
    }
  }
}

TEST_CASE("csv double formatting round-trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(*csv::parse_double(csv::format_double(v)) == v);
  }
  CHECK(!csv::parse_double("").has_value());
  CHECK(!csv::parse_double("1.0x").has_value());
  CHECK(*csv::parse_double(" 2.5 ") == 2.5);
  CHECK(std::isinf(*csv::parse_double("inf")));
}
