#include <cmath>
#include <vector>

#include "doctest.h"

#include "dpsgd/error.hpp"
#include "dpsgd/shared_slab.hpp"

using namespace dpsgd;

namespace {

UpdateVector uv(std::vector<double> d, std::uint64_t base = 0) { return UpdateVector{std::move(d), base, 0}; }

}  // namespace

TEST_CASE("ParamVector rejects empty and non-finite input") {
  CHECK_THROWS_AS(ParamVector(std::size_t{0}), ConfigError);
  CHECK_THROWS_AS(ParamVector(std::vector<double>{}), ConfigError);
  CHECK_THROWS_AS(ParamVector(std::vector<double>{1.0, std::nan("")}), NumericFault);
  const ParamVector z(3);
  CHECK(z.dim() == 3);
  CHECK(z[2] == 0.0);
}

TEST_CASE("apply_global_update examples") {
  const ParamVector v0(std::vector<double>{0, 0});
  const std::vector<UpdateVector> two = {uv({1, 0}), uv({0, 1})};
  CHECK(apply_global_update(v0, two, 0.5) == ParamVector(std::vector<double>{0.5, 0.5}));

  const ParamVector v1(std::vector<double>{2, 3});
  CHECK(apply_global_update(v1, {}, 0.1) == v1);

  const ParamVector v2(std::vector<double>{1, 1, 1});
  const std::vector<UpdateVector> cancel = {uv({1, 2, 3}), uv({-1, -2, -3})};
  CHECK(apply_global_update(v2, cancel, 7.0) == v2);
}

TEST_CASE("apply_global_update errors") {
  const ParamVector v(std::vector<double>{0, 0});
  const std::vector<UpdateVector> bad = {uv({1, 0, 0})};
  CHECK_THROWS_AS(apply_global_update(v, bad, 1.0), ConfigError);
  const std::vector<UpdateVector> ok = {uv({1, 0})};
  CHECK_THROWS_AS(apply_global_update(v, ok, 0.0), ConfigError);
  const std::vector<UpdateVector> huge = {uv({1e308, 0}), uv({1e308, 0})};
  try {
    apply_global_update(v, huge, 1.0);
    FAIL("expected NumericFault");
  } catch (const NumericFault& e) {
    CHECK(e.dimension() == 0);
  }
}

TEST_CASE("apply_global_update is associative over batching for representable values") {
  const ParamVector v(std::vector<double>{0.5, -1.25, 3});
  const UpdateVector w1 = uv({0.25, 0.5, -1}), w2 = uv({-0.125, 2, 0.75});
  const std::vector<UpdateVector> both = {w1, w2};
  const std::vector<UpdateVector> first = {w1}, second = {w2};
  CHECK(apply_global_update(v, both, 0.5) == apply_global_update(apply_global_update(v, first, 0.5), second, 0.5));
}

TEST_CASE("make_update_vector examples") {
  SharedSlab slab(2);
  const ParamVector base(std::vector<double>{0.5, 0.5});
  slab.assign(base.values());
  UpdateVector w = make_update_vector(slab, base, 3);
  CHECK(w.delta == std::vector<double>{0, 0});

  const std::vector<double> content{1, 2};
  slab.assign(content);
  w = make_update_vector(slab, base, 7, 4);
  CHECK(w.delta == std::vector<double>{0.5, 1.5});
  CHECK(w.base_version == 7);
  CHECK(w.worker_id == 4);

  const ParamVector wrong(std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(make_update_vector(slab, wrong, 0), ConfigError);
}

TEST_CASE("B serial steps give delta = -eta * sum of the gradients") {
  // Dyadic values keep every intermediate exact.
  const ParamVector base(std::vector<double>{1, -2, 0.5});
  const std::vector<std::vector<double>> grads = {{0.5, 1, -2}, {0.25, -0.75, 1}, {-1, 0.125, 0.5}};
  const double eta = 0.5;
  SharedSlab slab(3);
  slab.assign(base.values());
  for (const auto& g : grads) slab.write_step(g, eta);
  const UpdateVector w = make_update_vector(slab, base, 0);
  for (std::size_t k = 0; k < 3; ++k) {
    const double expected = -eta * (grads[0][k] + grads[1][k] + grads[2][k]);
    CHECK(w.delta[k] == expected);
  }
}
