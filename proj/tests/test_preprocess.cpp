#include "doctest.h"
#include "hgb/errors.hpp"
#include "hgb/ops.hpp"
#include "hgb/preprocess.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using hgb::DenseMatrix;
using hgb::FeatureModeKind;
using hgb::Index;

namespace {
hgb::HeteroGraph two_type() {
  auto g = fixture::make_graph({{"a", 3, 2}, {"b", 2, 3}}, {{"a-b", "a", "b", ""}});
  hgb::Rng rng(5);
  for (auto& block : g.features)
    for (double& v : block.values()) v = rng.uniform(-1, 1);
  return g;
}
}  // namespace

TEST_CASE("mode 0 keeps both raw blocks") {
  const auto spec = hgb::apply_feature_mode(two_type(), {FeatureModeKind::AllGiven, {}});
  REQUIRE(spec.size() == 2);
  CHECK_FALSE(spec[0].one_hot);
  CHECK_FALSE(spec[1].one_hot);
  CHECK(spec[1].raw_dim == 3);
}

TEST_CASE("mode 1 with target paper: paper raw, the rest embedded") {
  hgb::Rng rng(1);
  const auto g = fixture::dblp_shaped(rng);
  const auto spec = hgb::apply_feature_mode(g, {FeatureModeKind::TargetOnly, {g.node_type_id("paper")}});
  CHECK_FALSE(spec[g.node_type_id("paper")].one_hot);
  CHECK(spec[g.node_type_id("author")].one_hot);
  CHECK(spec[g.node_type_id("term")].one_hot);
  CHECK(spec[g.node_type_id("venue")].one_hot);
  CHECK_THROWS_AS(hgb::apply_feature_mode(g, {FeatureModeKind::TargetOnly, {}}), hgb::ContractError);
}

TEST_CASE("mode 2: embedding rows equal node count and no projection weights") {
  hgb::Rng rng(1);
  const auto g = fixture::dblp_shaped(rng);
  hgb::ParameterStore store;
  hgb::TypedProjector proj(store, "", g, hgb::apply_feature_mode(g, {FeatureModeKind::AllOneHot, {}}), 8, rng);
  std::size_t rows = 0;
  for (auto* p : store.all()) rows += p->value.rows();
  CHECK(rows == g.node_count());
  CHECK(store.trainable_scalars() == g.node_count() * 8);
  hgb::Tape tape;
  const auto out = proj.project(tape, g);
  CHECK(out.rows() == g.node_count());
  CHECK(out.cols() == 8);
}

TEST_CASE("identity weight and zero bias reproduce the input block") {
  auto g = fixture::make_graph({{"a", 3, 2}}, {{"a-a", "a", "a", ""}});
  g.features[0] = DenseMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  hgb::ParameterStore store;
  hgb::Rng rng(0);
  hgb::TypedProjector proj(store, "", g, hgb::apply_feature_mode(g, {}), 2, rng);
  proj.weight(0)->value = DenseMatrix::identity(2);
  hgb::Tape tape;
  CHECK(proj.project(tape, g).value() == g.features[0]);
}

TEST_CASE("zero weight with bias b gives b on every row of the type") {
  const auto g = two_type();
  hgb::ParameterStore store;
  hgb::Rng rng(0);
  hgb::TypedProjector proj(store, "", g, hgb::apply_feature_mode(g, {}), 4, rng);
  proj.weight(1)->value.fill(0.0);
  proj.bias(1)->value = DenseMatrix::from_rows({{0.5, -1, 2, 0}});
  hgb::Tape tape;
  const auto out = proj.project(tape, g).value();
  for (Index v = 3; v < 5; ++v)
    for (std::size_t c = 0; c < 4; ++c) CHECK(out(v, c) == proj.bias(1)->value(0, c));
}

TEST_CASE("projected features of the wrong width are reported with the type") {
  auto g = two_type();
  hgb::ParameterStore store;
  hgb::Rng rng(0);
  hgb::TypedProjector proj(store, "", g, hgb::apply_feature_mode(g, {}), 4, rng);
  g.features[1] = DenseMatrix(2, 5);
  hgb::Tape tape;
  try {
    proj.project(tape, g);
    FAIL("expected ShapeError");
  } catch (const hgb::ShapeError& e) {
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
}

TEST_CASE("gradient through an embedding row matches finite differences") {
  const auto g = two_type();
  hgb::ParameterStore store;
  hgb::Rng rng(3);
  hgb::TypedProjector proj(store, "", g, hgb::apply_feature_mode(g, {FeatureModeKind::TargetOnly, {0}}), 3, rng);
  REQUIRE(proj.table(1) != nullptr);
  const DenseMatrix probe = oracle::random_matrix(g.node_count(), 3, rng);
  auto errors = oracle::gradcheck_parameters(store, [&](hgb::Tape& tape) {
    auto h = hgb::ops::elu(proj.project(tape, g));
    return hgb::ops::sum(hgb::ops::mul(h, tape.constant(probe)));
  });
  for (const auto& [name, err] : errors) {
    INFO(name);
    CHECK(err < 1e-6);
  }
}
