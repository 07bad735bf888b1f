#include <cmath>

#include "doctest.h"
#include "hgb/errors.hpp"
#include "hgb/kernels.hpp"
#include "support/oracles.hpp"

using hgb::DenseMatrix;
using hgb::Index;
namespace serial = hgb::kernels::serial;
namespace par = hgb::kernels::parallel;

namespace {
std::vector<Index> random_index(std::size_t n, std::size_t bound, hgb::Rng& rng) {
  std::vector<Index> idx(n);
  for (auto& i : idx) i = rng.below(bound);
  return idx;
}
}  // namespace

TEST_CASE("matmul hand cases") {
  const auto m = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  CHECK(par::matmul(DenseMatrix::identity(2), m) == m);
  const auto r = par::matmul(m, DenseMatrix::from_rows({{1}, {1}}));
  CHECK(r == DenseMatrix::from_rows({{3}, {7}}));
  CHECK_THROWS_AS(par::matmul(m, DenseMatrix(3, 1)), hgb::ShapeError);
}

TEST_CASE("matmul shape error names both shapes") {
  try {
    serial::matmul(DenseMatrix(2, 3), DenseMatrix(4, 5));
    FAIL("expected throw");
  } catch (const hgb::ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  hgb::Rng rng(11);
  par::set_threads(4);
  const auto a = oracle::random_matrix(130, 70, rng);
  const auto b = oracle::random_matrix(70, 90, rng);
  const auto c = oracle::random_matrix(130, 90, rng);
  CHECK(par::matmul(a, b) == serial::matmul(a, b));
  CHECK(par::matmul_tn(a, c) == serial::matmul_tn(a, c));
  const auto d = oracle::random_matrix(40, 90, rng);
  CHECK(par::matmul_nt(c, d) == serial::matmul_nt(c, d));
  CHECK(max_abs_diff(par::matmul(a, b), oracle::naive_matmul(a, b)) < 1e-12);

  const std::size_t nodes = 300;
  const auto idx = random_index(5000, nodes, rng);
  const auto msgs = oracle::random_matrix(idx.size(), 8, rng);
  CHECK(par::scatter_rows(msgs, idx, nodes) == serial::scatter_rows(msgs, idx, nodes));
  CHECK(par::gather_rows(msgs, idx) == serial::gather_rows(msgs, idx));
  const auto scores = oracle::random_matrix(idx.size(), 4, rng, -5, 5);
  const auto soft = par::segment_softmax(scores, idx, nodes);
  CHECK(soft == serial::segment_softmax(scores, idx, nodes));
  const auto g = oracle::random_matrix(idx.size(), 4, rng);
  CHECK(par::segment_softmax_backward(soft, g, idx, nodes) ==
        serial::segment_softmax_backward(soft, g, idx, nodes));
  par::set_threads(1);
}

TEST_CASE("scatter_sum examples") {
  const std::vector<Index> single{1};
  const auto r = par::scatter_rows(DenseMatrix::from_rows({{1, 2}}), single, 2);
  CHECK(r == DenseMatrix::from_rows({{0, 0}, {1, 2}}));

  const std::vector<Index> both{0, 0};
  const auto r2 = par::scatter_rows(DenseMatrix::from_rows({{1, 0}, {0, 1}}), both, 1);
  CHECK(r2 == DenseMatrix::from_rows({{1, 1}}));

  const std::vector<Index> bad{3};
  CHECK_THROWS_AS(par::scatter_rows(DenseMatrix(1, 2), bad, 2), hgb::IndexError);
  CHECK_THROWS_AS(serial::scatter_rows(DenseMatrix(1, 2), bad, 2), hgb::IndexError);
}

TEST_CASE("scatter_sum equals dense adjacency-transpose multiply") {
  hgb::Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(100);
    const auto dst = random_index(trial == 0 ? 50 : rng.below(300), n, rng);
    const auto m = oracle::random_matrix(dst.size(), 3, rng);
    CHECK(max_abs_diff(par::scatter_rows(m, dst, n), oracle::dense_scatter(m, dst, n)) < 1e-12);
  }
}

TEST_CASE("segment_softmax examples") {
  const std::vector<Index> two{0, 0};
  const auto half = par::segment_softmax(DenseMatrix::from_rows({{0}, {0}}), two, 1);
  CHECK(half(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half(1, 0) == doctest::Approx(0.5).epsilon(1e-15));

  const auto thirds = par::segment_softmax(DenseMatrix::from_rows({{std::log(2.0)}, {0}}), two, 1);
  CHECK(std::abs(thirds(0, 0) - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(thirds(1, 0) - 1.0 / 3.0) < 1e-15);

  const auto empty = par::segment_softmax(DenseMatrix(0, 1), std::vector<Index>{}, 3);
  CHECK(empty.rows() == 0);
}

TEST_CASE("segment_softmax groups sum to one and ignore per-group shifts") {
  hgb::Rng rng(9);
  for (double magnitude : {1.0, 10.0, 1e3}) {
    const auto dst = random_index(20, 4, rng);
    auto scores = oracle::random_matrix(20, 1, rng, -magnitude, magnitude);
    const auto out = par::segment_softmax(scores, dst, 4);
    std::vector<double> sums(4, 0.0);
    std::vector<int> counts(4, 0);
    for (std::size_t e = 0; e < dst.size(); ++e) {
      sums[dst[e]] += out(e, 0);
      ++counts[dst[e]];
      CHECK(std::isfinite(out(e, 0)));
    }
    for (int g = 0; g < 4; ++g) {
      if (counts[g] > 0) CHECK(std::abs(sums[g] - 1.0) < 1e-9);
    }
    const double shift[4] = {3.0, -7.5, 100.0, 0.25};
    for (std::size_t e = 0; e < dst.size(); ++e) scores(e, 0) += shift[dst[e]];
    CHECK(max_abs_diff(par::segment_softmax(scores, dst, 4), out) < 1e-12);
  }
}

TEST_CASE("group_by is a stable counting sort") {
  const std::vector<Index> keys{2, 0, 2, 1, 0};
  const auto g = hgb::kernels::group_by(keys, 3);
  CHECK(g.groups() == 3);
  CHECK(std::vector<Index>(g.members(0).begin(), g.members(0).end()) == std::vector<Index>{1, 4});
  CHECK(std::vector<Index>(g.members(1).begin(), g.members(1).end()) == std::vector<Index>{3});
  CHECK(std::vector<Index>(g.members(2).begin(), g.members(2).end()) == std::vector<Index>{0, 2});
}
