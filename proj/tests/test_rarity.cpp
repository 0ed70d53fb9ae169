#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dirac/error.hpp"
#include "dirac/rarity.hpp"
#include "oracles.hpp"

using namespace dirac;
using namespace dirac::rarity;

namespace {

catalog::ClassCatalog make_catalog(const Eigen::MatrixXd& values) {
  catalog::AttributeMatrix a;
  a.values = values;
  for (Eigen::Index r = 0; r < values.rows(); ++r) a.class_names.push_back("c" + std::to_string(r));
  for (Eigen::Index c = 0; c < values.cols(); ++c) a.attribute_names.push_back("a" + std::to_string(c));
  return catalog::build_catalog(a, {}, nullptr);
}

}  // namespace

TEST_CASE("designation splits attributes by binarised support") {
  // 20 classes. Column 0: one strong holder and one weak holder (support 1 < 0.05 * 20 is false: 1 == 1).
  // Column 1: 11 strong holders (support 11 > 10). Column 2: identical everywhere. Column 3: zero.
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(20, 4);
  m(0, 0) = 0.9;
  m(1, 0) = 0.1;
  for (int r = 0; r < 11; ++r) m(r, 1) = 0.9;
  for (int r = 11; r < 20; ++r) m(r, 1) = 0.1;
  m.col(2).setConstant(0.4);
  const auto d = designate_rare_common(m);
  CHECK(d.support[0] == 1);
  CHECK(d.rare.empty());  // strict: support must be below 1.0
  CHECK(d.neither == std::vector<std::size_t>{0});
  CHECK(d.common == std::vector<std::size_t>{1});
  CHECK(d.discarded == std::vector<std::size_t>{2, 3});

  const auto loose = designate_rare_common(m, {0.06, 0.5});
  CHECK(loose.rare == std::vector<std::size_t>{0});
}

TEST_CASE("designation is monotone in the thresholds and permutation invariant") {
  std::mt19937_64 rng(55);
  Eigen::MatrixXd m = oracle::random_matrix(rng, 30, 25);
  for (Eigen::Index c = 0; c < 25; c += 3) {
    for (Eigen::Index r = 0; r < 30; ++r)
      if (rng() % 4 != 0) m(r, c) = 0.0;
  }
  const auto base = designate_rare_common(m, {0.1, 0.5});
  const auto wider = designate_rare_common(m, {0.2, 0.4});
  CHECK(std::includes(wider.rare.begin(), wider.rare.end(), base.rare.begin(), base.rare.end()));
  CHECK(std::includes(wider.common.begin(), wider.common.end(), base.common.begin(), base.common.end()));

  std::vector<Eigen::Index> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd p(30, 25);
  for (Eigen::Index r = 0; r < 30; ++r) p.row(r) = m.row(perm[static_cast<std::size_t>(r)]);
  const auto permuted = designate_rare_common(p, {0.1, 0.5});
  CHECK(permuted.rare == base.rare);
  CHECK(permuted.common == base.common);
  CHECK(permuted.support == base.support);
}

TEST_CASE("filtered reports keep classes with positive raw strength on a designated attribute") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 2);
  m << 0.0, 0.5, 0.2, 0.5, 0.0, 0.5, 0.0, 0.5;
  const auto cat = make_catalog(m);
  RarityDesignation d;
  d.rare = {0};
  d.common = {1};
  d.support = {1, 4};

  zsl::EvalReport r;
  r.per_class[0] = {1, 2};
  r.per_class[1] = {2, 2};
  r.per_class[2] = {0, 2};
  r.recompute_mean();

  const auto rare = rare_filtered_report(r, d, cat, zsl::FilterTag::rare);
  CHECK(rare.filter == zsl::FilterTag::rare);
  CHECK(rare.per_class.size() == 1);
  CHECK(rare.per_class.count(1) == 1);
  CHECK(rare.mean_per_class_top1 == 1.0);
  CHECK_FALSE(rare.empty);

  const auto common = rare_filtered_report(r, d, cat, zsl::FilterTag::common);
  CHECK(common.per_class.size() == 3);
  CHECK(common.mean_per_class_top1 == doctest::Approx(0.5));

  RarityDesignation none = d;
  none.rare.clear();
  const auto empty = rare_filtered_report(r, none, cat, zsl::FilterTag::rare);
  CHECK(empty.empty);
  CHECK(empty.per_class.empty());

  CHECK(exhibiting_count({0, 1, 2, 3}, d, cat, zsl::FilterTag::rare) == 1);
  CHECK(exhibiting_count({0, 1, 2, 3}, d, cat, zsl::FilterTag::common) == 4);
  CHECK_THROWS_AS(exhibiting_count({0}, d, cat, zsl::FilterTag::all), Error);
}

TEST_CASE("planted rare attributes are designated rare on synthetic data") {
  const auto syn = catalog::generate_synthetic({});
  const auto d = designate_rare_common(syn.catalog.attributes.values);
  for (auto a : syn.rare_attributes) CHECK(std::find(d.rare.begin(), d.rare.end(), a) != d.rare.end());
}

TEST_CASE("summary CSV layout") {
  const auto path = std::filesystem::temp_directory_path() / "dirac_rarity_summary.csv";
  write_summary_csv(path, {{"ES", 3, 4, 5, 6}, {"PS", 3, 4, 7, 6}});
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == "split,A_R,A_C,Y_R,Y_C\nES,3,4,5,6\nPS,3,4,7,6\n");
  std::filesystem::remove(path);
}
