#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dirac/error.hpp"
#include "dirac/zsl.hpp"
#include "oracles.hpp"

using namespace dirac;
using namespace dirac::zsl;

namespace {

Eigen::MatrixXd one_hot(std::mt19937_64& rng, int m, int z) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(m, z);
  for (int i = 0; i < m; ++i) y(i, i < z ? i : static_cast<int>(rng() % static_cast<unsigned>(z))) = 1.0;
  return y;
}

}  // namespace

TEST_CASE("ESZSL scalar case") {
  Eigen::MatrixXd x(1, 1), y(1, 1), s(1, 1);
  x << 2.0;
  y << 1.0;
  s << 3.0;
  const auto m = train_eszsl(x, y, s, {0.5, 0.25});
  CHECK(m.v(0, 0) == doctest::Approx(2.0 * 3.0 / ((4.0 + 0.5) * (9.0 + 0.25))).epsilon(1e-14));
}

TEST_CASE("ESZSL solution is a stationary point of the regularised objective") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 10 + static_cast<int>(rng() % 30);
    const int k = 2 + static_cast<int>(rng() % 8);
    const int z = 2 + static_cast<int>(rng() % 6);
    const int d = 2 + static_cast<int>(rng() % 7);
    const auto x = oracle::random_matrix(rng, m, k, -1, 1);
    const auto y = one_hot(rng, m, z);
    const auto s = oracle::random_matrix(rng, z, d);
    const EszslHyper h{std::pow(10.0, -2.0 + 3.0 * (rng() % 100) / 100.0), std::pow(10.0, -2.0 + 3.0 * (rng() % 100) / 100.0)};
    const auto model = train_eszsl(x, y, s, h);
    const Eigen::MatrixXd g = oracle::eszsl_gradient(model.v, x, y, s, h.gamma, h.lambda);
    CHECK(g.cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("ESZSL agrees with plain gradient descent") {
  std::mt19937_64 rng(7);
  const auto x = oracle::random_matrix(rng, 15, 3, -1, 1);
  const auto y = one_hot(rng, 15, 3);
  const auto s = oracle::random_matrix(rng, 3, 4);
  const double gamma = 0.5, lambda = 0.3;
  const auto model = train_eszsl(x, y, s, {gamma, lambda});

  Eigen::MatrixXd xx = x.transpose() * x;
  xx.diagonal().array() += gamma;
  Eigen::MatrixXd ss = s.transpose() * s;
  ss.diagonal().array() += lambda;
  const double lip = 2.0 * xx.operatorNorm() * ss.operatorNorm();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 4);
  for (int it = 0; it < 200000; ++it) {
    const Eigen::MatrixXd g = oracle::eszsl_gradient(v, x, y, s, gamma, lambda);
    if (g.norm() < 1e-12) break;
    v -= g / lip;
  }
  CHECK((v - model.v).norm() / model.v.norm() <= 1e-3);
}

TEST_CASE("ESZSL rejects bad inputs") {
  Eigen::MatrixXd x(2, 2), y(2, 1), s(1, 2);
  x.setOnes();
  y.setOnes();
  s.setOnes();
  CHECK_THROWS_AS(train_eszsl(x, y, s, {0.0, 1.0}), Error);
  CHECK_THROWS_AS(train_eszsl(x, Eigen::MatrixXd(3, 1), s, {}), Error);
}

TEST_CASE("prediction picks the highest compatibility, ties to the lowest id") {
  CompatibilityModel m;
  m.v = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  Eigen::MatrixXd cand(3, 2);
  cand << 0, 1, 1, 0, 1, 0;
  const std::vector<ClassId> ids{4, 9, 6};
  CHECK(predict(m, x, cand, ids) == 6);
  CHECK_THROWS_AS(predict(m, x, Eigen::MatrixXd(0, 2), std::vector<ClassId>{}), Error);

  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 40; ++trial) {
    CompatibilityModel r;
    r.v = oracle::random_matrix(rng, 4, 3, -1, 1);
    const Eigen::VectorXd f = oracle::random_matrix(rng, 4, 1, -1, 1);
    const auto c = oracle::random_matrix(rng, 6, 3);
    std::vector<ClassId> cids{1, 2, 3, 4, 5, 6};
    ClassId best = 0;
    double best_score = -1e300;
    for (int i = 0; i < 6; ++i) {
      double sc = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 3; ++b) sc += f(a) * r.v(a, b) * c(i, b);
      if (sc > best_score) {
        best_score = sc;
        best = cids[static_cast<std::size_t>(i)];
      }
    }
    CHECK(predict(r, f, c, cids) == best);
    // Positive scaling of the model leaves the argmax unchanged.
    CompatibilityModel scaled = r;
    scaled.v *= 3.7;
    CHECK(predict(scaled, f, c, cids) == best);
  }
}

TEST_CASE("per-class top-1 averages class accuracies") {
  const std::vector<ClassId> truth{1, 1, 2, 2, 2, 2};
  const std::vector<ClassId> pred{1, 2, 2, 2, 2, 2};
  const auto r = per_class_top1(pred, truth, {1, 2});
  CHECK(r.per_class.at(1).accuracy() == 0.5);
  CHECK(r.per_class.at(2).accuracy() == 1.0);
  CHECK(r.mean_per_class_top1 == 0.75);
  CHECK(r.n_test_samples == 6);
  CHECK_THROWS_AS(per_class_top1(pred, truth, {1}), Error);

  // Sample order does not matter.
  std::vector<std::size_t> order(6);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ClassId> t2, p2;
  for (auto i : order) {
    t2.push_back(truth[i]);
    p2.push_back(pred[i]);
  }
  CHECK(per_class_top1(p2, t2, {1, 2}).mean_per_class_top1 == 0.75);
}

namespace {

struct Fixture {
  catalog::SyntheticDataset syn;
  catalog::SplitDefinition split;
  Fixture() {
    catalog::SyntheticParams p;
    p.n_classes = 48;
    p.rng_seed = 21;
    p.unseen_fraction = 0.5;
    syn = catalog::generate_synthetic(p);
    split = catalog::make_split(syn.catalog, 3);
  }
};

}  // namespace

TEST_CASE("evaluation protocol") {
  Fixture f;
  EvaluateOptions opts;
  const auto es = evaluate_split(f.split, SplitTag::existing, f.syn.catalog, f.syn.features, opts);
  CHECK(es.per_class.size() == f.split.common_unseen.size());
  CHECK(es.mean_per_class_top1 > 1.0 / static_cast<double>(f.split.common_unseen.size()));

  SUBCASE("ES and PS are scored on the same test classes") {
    f.split.seen_proposed = ClassSet(f.split.remaining_unseen.begin(), f.split.remaining_unseen.end());
    const auto ps = evaluate_split(f.split, SplitTag::proposed, f.syn.catalog, f.syn.features, opts);
    CHECK(ps.split == SplitTag::proposed);
    REQUIRE(ps.per_class.size() == es.per_class.size());
    for (const auto& [id, acc] : es.per_class) CHECK(ps.per_class.at(id).total == acc.total);
  }
  SUBCASE("a seen set touching U_com is rejected") {
    ClassSet bad = f.split.seen_existing;
    bad.push_back(f.split.common_unseen.front());
    bad = make_class_set(bad);
    CHECK_THROWS_AS(evaluate_classes(bad, f.split.common_unseen, f.syn.catalog, f.syn.features, opts), Error);
  }
  SUBCASE("training on the test classes bounds held-out accuracy from above") {
    EvaluateOptions leak;
    leak.enforce_protocol = false;
    const auto ceiling = evaluate_classes(f.split.common_unseen, f.split.common_unseen, f.syn.catalog, f.syn.features, leak);
    CHECK(ceiling.mean_per_class_top1 >= es.mean_per_class_top1);
  }
}

TEST_CASE("external predictions replace the built-in model") {
  Fixture f;
  const auto dir = std::filesystem::temp_directory_path() / "dirac_test_zsl";
  std::filesystem::create_directories(dir);
  const auto path = dir / "pred.jsonl";
  const auto ids = f.syn.features.samples_of(f.split.common_unseen);
  {
    std::ofstream out(path);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const ClassId p = i % 2 == 0 ? f.syn.features.labels[ids[i]] : f.split.common_unseen.front();
      out << "{\"sample_id\": " << ids[i] << ", \"predicted_class_id\": " << p << "}\n";
    }
  }
  EvaluateOptions opts;
  opts.external_predictions = load_external_predictions(path);
  const auto r = evaluate_split(f.split, SplitTag::existing, f.syn.catalog, f.syn.features, opts);
  CHECK(r.n_test_samples == ids.size());
  CHECK(r.mean_per_class_top1 > 0.4);
  CHECK(r.mean_per_class_top1 < 1.0);

  opts.external_predictions->erase(ids.front());
  CHECK_THROWS_AS(evaluate_split(f.split, SplitTag::existing, f.syn.catalog, f.syn.features, opts), Error);

  {
    std::ofstream out(path);
    out << "{\"sample_id\": 1}\n";
  }
  CHECK_THROWS_AS(load_external_predictions(path), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("report JSON marks empty filtered reports with a null mean") {
  Fixture f;
  EvalReport r;
  r.empty = true;
  r.filter = FilterTag::rare;
  const auto j = to_json(r, f.syn.catalog);
  CHECK(j.at("mean_per_class_top1").is_null());
  CHECK(j.at("filter") == "rare");
}
