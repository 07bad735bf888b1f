#include <cmath>
#include <limits>

#include "doctest.h"
#include "hgb/adam.hpp"
#include "hgb/errors.hpp"

using hgb::DenseMatrix;

TEST_CASE("zero gradient without decay leaves parameters unchanged") {
  hgb::ParameterStore store;
  auto& p = store.add("w", DenseMatrix::from_rows({{1.5, -2.0}}));
  hgb::AdamState state;
  const auto before = p.value;
  auto params = store.trainable();
  hgb::adam_step(params, state, {.lr = 0.1, .weight_decay = 0.0});
  CHECK(p.value == before);
}

TEST_CASE("decay only: lr=1, wd=0.1, zero gradient scales by 0.9") {
  hgb::ParameterStore store;
  auto& p = store.add("w", DenseMatrix::from_rows({{1.0, -2.0, 4.0}}));
  hgb::AdamState state;
  auto params = store.trainable();
  hgb::adam_step(params, state, {.lr = 1.0, .weight_decay = 0.1});
  CHECK(p.value(0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(p.value(0, 1) == doctest::Approx(-1.8).epsilon(1e-15));
  CHECK(p.value(0, 2) == doctest::Approx(3.6).epsilon(1e-15));
}

TEST_CASE("200 steps on x^2 from x=1 with lr=0.1 reach |x| < 1e-2") {
  hgb::ParameterStore store;
  auto& p = store.add("x", DenseMatrix(1, 1, 1.0));
  hgb::AdamState state;
  auto params = store.trainable();
  for (int i = 0; i < 200; ++i) {
    p.grad(0, 0) = 2.0 * p.value(0, 0);
    hgb::adam_step(params, state, {.lr = 0.1, .weight_decay = 0.0});
  }
  CHECK(std::abs(p.value(0, 0)) < 1e-2);
}

TEST_CASE("non-finite gradient aborts the step and names the parameter") {
  hgb::ParameterStore store;
  auto& a = store.add("layer0.W", DenseMatrix(1, 2, 1.0));
  auto& b = store.add("layer1.a", DenseMatrix(1, 1, 1.0));
  a.grad(0, 0) = 0.5;
  b.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  hgb::AdamState state;
  auto params = store.trainable();
  try {
    hgb::adam_step(params, state, {.lr = 0.1});
    FAIL("expected NumericError");
  } catch (const hgb::NumericError& e) {
    CHECK(std::string(e.what()).find("layer1.a") != std::string::npos);
  }
  CHECK(a.value == DenseMatrix(1, 2, 1.0));
  CHECK(state.step == 0);
}

TEST_CASE("frozen parameters are never updated") {
  hgb::ParameterStore store;
  auto& f = store.add("frozen", DenseMatrix(2, 2, 3.0), false);
  f.grad = DenseMatrix(2, 2, 1.0);
  hgb::AdamState state;
  auto params = store.all();
  hgb::adam_step(params, state, {.lr = 0.5, .weight_decay = 0.1});
  CHECK(f.value == DenseMatrix(2, 2, 3.0));
}

TEST_CASE("invalid hyperparameters are rejected") {
  hgb::ParameterStore store;
  store.add("w", DenseMatrix(1, 1, 1.0));
  hgb::AdamState state;
  auto params = store.trainable();
  CHECK_THROWS_AS(hgb::adam_step(params, state, {.lr = 0.0}), hgb::ContractError);
  CHECK_THROWS_AS(hgb::adam_step(params, state, {.lr = 0.1, .weight_decay = -1.0}),
                  hgb::ContractError);
}
