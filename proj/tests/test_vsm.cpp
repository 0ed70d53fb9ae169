#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dirac/error.hpp"
#include "dirac/seedset.hpp"
#include "dirac/vsm.hpp"
#include "oracles.hpp"

using namespace dirac;
using namespace dirac::vsm;

TEST_CASE("t from the average image count") {
  CHECK(compute_t(1.0) == 5);
  CHECK(compute_t(5.0) == 5);
  CHECK(compute_t(60.0) == 13);
  CHECK(compute_t(500.0) == 19);
  CHECK_THROWS_AS(compute_t(0.0), Error);
  std::size_t prev = 0;
  for (double a = 1.0; a < 2000.0; a *= 1.3) {
    CHECK(compute_t(a) >= prev);
    prev = compute_t(a);
  }
}

TEST_CASE("softmax gradient matches central finite differences") {
  std::mt19937_64 rng(31);
  const auto x = oracle::random_matrix(rng, 12, 4, -1.0, 1.0);
  std::vector<std::size_t> y(12);
  for (auto& v : y) v = rng() % 3;
  for (int point = 0; point < 20; ++point) {
    const Eigen::MatrixXd w = oracle::random_matrix(rng, 3, 4, -2.0, 2.0);
    const Eigen::VectorXd b = oracle::random_matrix(rng, 3, 1, -1.0, 1.0);
    const auto g = softmax_loss_gradient(w, b, x, y);
    CHECK(g.loss == doctest::Approx(oracle::softmax_loss(w, b, x, y)).epsilon(1e-12));
    const double h = 1e-6;
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 4; ++c) {
        Eigen::MatrixXd wp = w, wm = w;
        wp(r, c) += h;
        wm(r, c) -= h;
        const double fd = (oracle::softmax_loss(wp, b, x, y) - oracle::softmax_loss(wm, b, x, y)) / (2 * h);
        CHECK(std::abs(fd - g.d_weights(r, c)) <= 1e-4 * std::max(1.0, std::abs(fd)));
      }
      Eigen::VectorXd bp = b, bm = b;
      bp(r) += h;
      bm(r) -= h;
      const double fd = (oracle::softmax_loss(w, bp, x, y) - oracle::softmax_loss(w, bm, x, y)) / (2 * h);
      CHECK(std::abs(fd - g.d_bias(r)) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("linear head separates +e1 from -e1 and is deterministic") {
  Eigen::MatrixXd x(40, 3);
  std::vector<std::size_t> y(40);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 40; ++i) {
    const double s = i % 2 == 0 ? 1.0 : -1.0;
    x.row(i) << s + noise(rng), noise(rng), noise(rng);
    y[static_cast<std::size_t>(i)] = i % 2;
  }
  HeadTraining tr;
  const auto a = train_linear_head(x, y, {5, 9}, tr, 42);
  CHECK(a.training_accuracy == 1.0);
  const auto b = train_linear_head(x, y, {5, 9}, tr, 42);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);

  std::vector<std::size_t> missing(40, 0);
  CHECK_THROWS_AS(train_linear_head(x, missing, {5, 9}, tr, 1), Error);
  HeadTraining hot = tr;
  hot.lr = 1e200;
  CHECK_THROWS_AS(train_linear_head(x * 1e200, y, {5, 9}, hot, 1), Error);
}

TEST_CASE("MAVs average correctly classified activations") {
  Eigen::MatrixXd act(4, 2);
  act << 3, 1,   // class 0, correct
      5, 1,      // class 0, correct
      2, 9,      // class 0, wrong
      4, 0;      // class 1, wrong: no correct sample, falls back to the class mean
  const std::vector<std::size_t> y{0, 0, 0, 1};
  const auto mavs = compute_mavs(act, y, 2);
  CHECK(mavs.means(0, 0) == 4.0);
  CHECK(mavs.means(0, 1) == 1.0);
  CHECK(mavs.support[0] == 2);
  CHECK_FALSE(mavs.fallback[0]);
  CHECK(mavs.fallback[1]);
  CHECK(mavs.means(1, 0) == 4.0);
}

TEST_CASE("Euclidean-cosine distance") {
  Eigen::VectorXd e1(2), e2(2), z(2);
  e1 << 1, 0;
  e2 << 0, 1;
  z << 0, 0;
  CHECK(euclidean_cosine_distance(e1, e1, 0.5, 1.0) == 0.0);
  CHECK(euclidean_cosine_distance(e1, e2, 0.5, 1.0) == doctest::Approx(0.5 * std::sqrt(2.0) + 0.5));
  CHECK(euclidean_cosine_distance(e1, e2, 1.0, 2.0) == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(euclidean_cosine_distance(e1, e2, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(euclidean_cosine_distance(e1, z, 0.0, 1.0) == 1.0);
  CHECK(euclidean_cosine_distance(e1, -e1, 0.0, 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(euclidean_cosine_distance(e1, Eigen::VectorXd(3), 0.5, 1.0), Error);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd a = oracle::random_matrix(rng, 4, 1, -1, 1);
    const Eigen::VectorXd b = oracle::random_matrix(rng, 4, 1, -1, 1);
    const double lam = std::uniform_real_distribution<double>(0, 1)(rng);
    CHECK(euclidean_cosine_distance(a, b, lam, 1.3) >= 0.0);
    CHECK(euclidean_cosine_distance(a, b, lam, 1.3) == doctest::Approx(euclidean_cosine_distance(b, a, lam, 1.3)));
  }
}

TEST_CASE("median MAV distance") {
  MavSet m;
  m.means.resize(3, 1);
  m.means << 0, 1, 3;  // pairwise 1, 3, 2
  CHECK(median_mav_distance(m) == 2.0);
  m.means.resize(1, 1);
  CHECK(median_mav_distance(m) == 1.0);
}

TEST_CASE("diversity selection matches brute force") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    MavSet mavs;
    mavs.means = oracle::random_matrix(rng, 3, 4, -1, 1);
    const Eigen::MatrixXd pool = oracle::random_matrix(rng, 20, 4, -2, 2);
    std::vector<SampleId> ids(20);
    std::vector<ClassId> labels(20);
    for (std::size_t i = 0; i < 20; ++i) {
      ids[i] = 100 + i;
      labels[i] = static_cast<ClassId>(rng() % 6);
    }
    const DistanceConfig dc{0.5, 1.7};
    const auto ranking = diversity_select(mavs, pool, ids, labels, 5, dc);

    std::vector<std::pair<double, SampleId>> brute;
    for (int j = 0; j < 20; ++j) {
      double best = 1e300;
      for (int c = 0; c < 3; ++c) {
        const Eigen::VectorXd mu = mavs.means.row(c).transpose();
        const Eigen::VectorXd f = pool.row(j).transpose();
        const double cos = mu.dot(f) / (mu.norm() * f.norm());
        best = std::min(best, 0.5 * (mu - f).norm() / 1.7 + 0.5 * (1.0 - cos));
      }
      CHECK(ranking.pi[static_cast<std::size_t>(j)] == doctest::Approx(best).epsilon(1e-12));
      brute.emplace_back(-best, ids[static_cast<std::size_t>(j)]);
    }
    std::sort(brute.begin(), brute.end());
    std::set<ClassId> expected_labels;
    for (int i = 0; i < 5; ++i) {
      CHECK(ranking.selected[static_cast<std::size_t>(i)] == brute[static_cast<std::size_t>(i)].second);
      expected_labels.insert(labels[brute[static_cast<std::size_t>(i)].second - 100]);
    }
    CHECK(ranking.candidates == ClassSet(expected_labels.begin(), expected_labels.end()));
  }
}

TEST_CASE("diversity selection with a pool no larger than t takes the whole pool") {
  MavSet mavs;
  mavs.means = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd pool(3, 2);
  pool << 1, 1, 2, 0, 0, 3;
  const std::vector<SampleId> ids{7, 8, 9};
  const std::vector<ClassId> labels{1, 1, 4};
  const auto r = diversity_select(mavs, pool, ids, labels, 3, {});
  CHECK(std::set<SampleId>(r.selected.begin(), r.selected.end()) == std::set<SampleId>{7, 8, 9});
  CHECK(r.candidates == ClassSet{1, 4});
}

TEST_CASE("image-weighted attribute weights") {
  SUBCASE("attribute held only by the smaller class") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 1, 0, 1;
    const std::vector<std::uint64_t> ic{10, 30};
    const auto w = vsm_attribute_weights(s, ic);
    CHECK(w.theta[0] == 0.25);
    CHECK(w.weight[0] == doctest::Approx(std::log(4.0)));
    CHECK(w.theta[1] == 1.0);
    CHECK(w.weight[1] == 0.0);
  }
  SUBCASE("absent attribute gets the cap ln(1 + total images)") {
    Eigen::MatrixXd s(2, 1);
    s << 0, 0;
    const std::vector<std::uint64_t> ic{10, 30};
    CHECK(vsm_attribute_weights(s, ic).weight[0] == doctest::Approx(std::log(41.0)));
  }
  SUBCASE("cap exceeds every finite weight for binary strengths") {
    std::mt19937_64 rng(2);
    Eigen::MatrixXd s = (oracle::random_matrix(rng, 6, 10).array() > 0.6).cast<double>();
    s.col(0).setZero();
    std::vector<std::uint64_t> ic{3, 7, 1, 9, 4, 2};
    const auto w = vsm_attribute_weights(s, ic);
    for (std::size_t l = 1; l < w.weight.size(); ++l) {
      if (w.theta[l] > 0) CHECK(w.weight[l] < w.weight[0]);
    }
  }
  SUBCASE("scores are the weighted strength sum") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 1, 0, 1;
    const auto w = vsm_attribute_weights(s, std::vector<std::uint64_t>{10, 30});
    Eigen::MatrixXd cand(2, 2);
    cand << 1, 0, 0.5, 1;
    const auto sc = semantic_scores(cand, w);
    CHECK(sc(0) == doctest::Approx(std::log(4.0)));
    CHECK(sc(1) == doctest::Approx(0.5 * std::log(4.0)));
  }
}

TEST_CASE("admission order") {
  SUBCASE("score then id") {
    std::vector<Candidate> c{{3, 1.0, false}, {1, 2.0, false}, {2, 2.0, false}};
    CHECK(admit_candidates(c, 2, 10) == std::vector<ClassId>{1, 2});
  }
  SUBCASE("overlapping classes first") {
    std::vector<Candidate> c{{1, 9.0, false}, {2, 1.0, true}, {3, 5.0, true}, {4, 7.0, false}};
    CHECK(admit_candidates(c, 2, 10) == std::vector<ClassId>{3, 2});
  }
  SUBCASE("capacity and |H| bound the count") {
    std::vector<Candidate> c{{1, 1.0, false}, {2, 2.0, false}, {3, 3.0, false}};
    CHECK(admit_candidates(c, 2, 1) == std::vector<ClassId>{3});
    CHECK(admit_candidates(c, 10, 10).size() == 3);
  }
}

namespace {

struct Fixture {
  catalog::SyntheticDataset syn;
  catalog::SplitDefinition split;
  seedset::Stage1Result s1;

  explicit Fixture(std::uint64_t seed) {
    catalog::SyntheticParams p;
    p.rng_seed = seed;
    syn = catalog::generate_synthetic(p);
    split = catalog::make_split(syn.catalog, seed);
    s1 = seedset::build_seed_set(syn.catalog, split.object_domain(), 5);
  }
};

}  // namespace

TEST_CASE("mining grows the seed set to the target inside the domain") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Fixture f(seed);
    const auto domain = f.split.object_domain();
    VsmConfig cfg;
    cfg.q = 2;
    cfg.t = 13;
    cfg.rng_seed = seed;
    const std::size_t target = 20;
    const auto r = run_vsm(f.s1.seeds, f.syn.catalog, f.syn.features, domain, cfg, target);
    CHECK(r.seeds.size() == target);
    std::size_t prev = f.s1.seeds.size();
    std::set<SampleId> all_queried;
    for (const auto& it : r.trace) {
      CHECK(it.seed_snapshot.size() == prev);
      CHECK(it.admitted.size() >= 1);
      CHECK(it.admitted.size() <= cfg.q);
      prev += it.admitted.size();
      for (SampleId s : it.queried) {
        CHECK(all_queried.insert(s).second);
        CHECK_FALSE(contains(f.split.common_unseen, f.syn.features.labels[s]));
      }
      if (!it.pool_exhausted) CHECK(it.queried.size() == cfg.t);
    }
    CHECK(prev == target);
    CHECK(r.total_queried == all_queried.size());
    for (ClassId c : r.seeds.members) {
      CHECK(contains(domain, c));
      CHECK_FALSE(contains(f.split.common_unseen, c));
    }
    // Seeds from stage 1 are kept in place.
    CHECK(std::equal(f.s1.seeds.members.begin(), f.s1.seeds.members.end(), r.seeds.members.begin()));
  }
}

TEST_CASE("mining is a no-op at the target and deterministic otherwise") {
  Fixture f(9);
  const auto domain = f.split.object_domain();
  VsmConfig cfg;
  cfg.rng_seed = 9;
  const auto none = run_vsm(f.s1.seeds, f.syn.catalog, f.syn.features, domain, cfg, f.s1.seeds.size());
  CHECK(none.trace.empty());
  CHECK(none.total_queried == 0);

  const auto a = run_vsm(f.s1.seeds, f.syn.catalog, f.syn.features, domain, cfg, 16);
  const auto b = run_vsm(f.s1.seeds, f.syn.catalog, f.syn.features, domain, cfg, 16);
  CHECK(a.seeds.members == b.seeds.members);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(to_json(a.trace[i]) == to_json(b.trace[i]));

  CHECK_THROWS_AS(run_vsm(f.s1.seeds, f.syn.catalog, f.syn.features, domain, cfg, domain.size() + 1), Error);
  seedset::SeedSet outside = f.s1.seeds;
  outside.add(f.split.common_unseen.front(), {});
  CHECK_THROWS_AS(run_vsm(outside, f.syn.catalog, f.syn.features, domain, cfg, 16), Error);
}

TEST_CASE("mining to the whole domain exhausts the pool without failing") {
  catalog::SyntheticParams p;
  p.n_classes = 12;
  p.n_clusters = 2;
  p.images_per_class = 3;
  p.rare_attr_count = 0;
  p.rng_seed = 5;
  const auto syn = catalog::generate_synthetic(p);
  const auto domain = syn.catalog.all_classes();
  seedset::SeedSet seed;
  seed.add(0, {});
  seed.add(1, {});
  VsmConfig cfg;
  cfg.q = 1;
  cfg.t = 5;
  const auto r = run_vsm(seed, syn.catalog, syn.features, domain, cfg, domain.size());
  CHECK(r.seeds.size() == domain.size());
  CHECK(r.total_queried <= syn.features.size() - 6);
}
