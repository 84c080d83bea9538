#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"

#include "dpsgd/engine/config.hpp"
#include "dpsgd/engine/schedules.hpp"
#include "dpsgd/engine/wire.hpp"
#include "dpsgd/error.hpp"

using namespace dpsgd;
using namespace dpsgd::engine;

namespace {

double corollary1_oracle(long double f0, long double A, long double alpha, long double T, long double M,
                         long double Bt) {
  return static_cast<double>(std::sqrt(std::sqrt(f0) / (A * alpha * std::sqrt(T * M * Bt))));
}

}  // namespace

TEST_CASE("constant-rate law examples") {
  CHECK(rho_corollary1(1, 1, 1, 1, 1, 1) == 1.0);
  // rho^2 = 2 / (1 * 1 * 4) = 0.5
  CHECK(rho_corollary1(4, 1, 1, 16, 1, 1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  const double cases[][6] = {{0.5, 1, 1, 1e3, 2, 10}, {0.5, 1, 1, 1e5, 2, 10}, {3.0, 2.0, 0.5, 777, 3, 1},
                             {1e-3, 10, 0.1, 1, 1, 1000}};
  for (const auto& c : cases) {
    const auto T = static_cast<std::uint64_t>(c[3]), M = static_cast<std::uint64_t>(c[4]),
               Bt = static_cast<std::uint64_t>(c[5]);
    const double got = rho_corollary1(c[0], c[1], c[2], T, M, Bt);
    const double want = corollary1_oracle(c[0], c[1], c[2], c[3], c[4], c[5]);
    CHECK(std::abs(got - want) <= 4 * std::numeric_limits<double>::epsilon() * want);
  }
  // rho scales as (T M Btilde)^(-1/4)
  CHECK(rho_corollary1(1, 1, 1, 16, 1, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(rho_corollary1(0, 1, 1, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(rho_corollary1(1, 1, 1, 0, 1, 1), ConfigError);
  CHECK_THROWS_AS(rho_corollary1(1, -1, 1, 1, 1, 1), ConfigError);
}

TEST_CASE("rate rescaling between configurations") {
  CHECK(rho_rescale(0.37, 3, 7, 2, 3, 7, 2) == 0.37);
  CHECK(rho_rescale(0.1, 1, 1, 1, 16, 1, 1) == 0.05);
  CHECK(rho_rescale(0.1, 1, 1, 1, 2, 8, 1) == 0.05);
  CHECK(rho_rescale(0.1, 1, 1, 1, 2, 3, 5) == doctest::Approx(0.1 / std::pow(30.0, 0.25)).epsilon(1e-15));
  CHECK(rho_rescale(0.05, 16, 1, 1, 1, 1, 1) == 0.1);
  CHECK_THROWS_AS(rho_rescale(0.0, 1, 1, 1, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(rho_rescale(0.1, 1, 0, 1, 1, 1, 1), ConfigError);

  RunConfig c;
  c.p = 2;
  c.B = 3;
  c.M = 5;
  c.rho_schedule.kind = RhoKind::kRescaled;
  c.rho_schedule.rho_base = 0.1;
  CHECK(c.rho_at(0) == rho_rescale(0.1, 1, 1, 1, 2, 3, 5));
  CHECK(c.rho_at(999) == c.rho_at(0));
}

TEST_CASE("schedule evaluation on RunConfig") {
  RunConfig c;
  c.rho_schedule.kind = RhoKind::kRobbinsMonro;
  c.rho_schedule.tau0 = 4.0;
  c.rho_schedule.kappa = 0.5;
  CHECK(c.rho_at(0) == 0.5);
  CHECK(c.rho_at(5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  c.rho_schedule.kind = RhoKind::kCorollary1;
  c.T = 16;
  c.theory.f0_minus_fstar = 1.0;
  CHECK(c.rho_at(3) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.effective_eta() == c.rho_at(0));
  c.rho_schedule.kind = RhoKind::kConstant;
  c.eta = 0.3;
  CHECK(c.effective_eta() == 0.3);
}

TEST_CASE("run config validation") {
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return c;
  };
  CHECK_NOTHROW(RunConfig{}.validate());
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.T = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.M = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.nW = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.p = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.B = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.eta = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.eta = NAN; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.rho_schedule.rho = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.batch_size = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.sim_grad_cost_us = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) { c.delay.enforce = true; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) {
                    c.delay.kind = DelayKind::kUniform;
                    c.delay.lo_us = 5;
                    c.delay.hi_us = 1;
                  }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) {
                    c.rho_schedule.kind = RhoKind::kCorollary1;
                    c.theory.A = 0;
                  }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) {
                    c.rho_schedule.kind = RhoKind::kRescaled;
                    c.rho_schedule.base_B = 0;
                  }).validate(),
                  ConfigError);
  CHECK_THROWS_AS(bad([](RunConfig& c) {
                    c.rho_schedule.kind = RhoKind::kRobbinsMonro;
                    c.rho_schedule.kappa = 0;
                  }).validate(),
                  ConfigError);
}

TEST_CASE("delay sampling") {
  Stream rng{1};
  DelayModel d;
  CHECK(d.sample_latency_us(rng) == 0.0);
  d.kind = DelayKind::kFixed;
  d.latency_us = 7.5;
  CHECK(d.sample_latency_us(rng) == 7.5);
  d.kind = DelayKind::kUniform;
  d.lo_us = 2;
  d.hi_us = 4;
  for (int i = 0; i < 1000; ++i) {
    const double x = d.sample_latency_us(rng);
    CHECK((x >= 2.0 && x < 4.0));
  }
  d.kind = DelayKind::kSeededJitter;
  d.latency_us = 10;
  d.jitter_us = 3;
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double x = d.sample_latency_us(rng);
    CHECK(x >= 10.0);
    sum += x;
  }
  CHECK(sum / 100000 == doctest::Approx(13.0).epsilon(0.01));
}

TEST_CASE("feasibility warnings") {
  RunConfig c;
  c.eta = 0.01;
  c.theory.mu = 2.0;
  c.theory.L = 1.0;
  c.theory.D = 0;
  CHECK(feasibility_warnings(c).empty());
  c.theory.mu = 1.0;
  REQUIRE(feasibility_warnings(c).size() == 1);
  CHECK(feasibility_warnings(c)[0].find("mu") != std::string::npos);
  c.theory.mu = 2.0;
  c.eta = 0.2;  // 1 - 0.2 - 9 * 0.2 < 0
  CHECK(feasibility_warnings(c).size() == 1);
  c.eta = 0.01;
  c.delay.max_staleness = 50;
  c.M = 10;
  c.B = 100;
  const auto w = feasibility_warnings(c);
  REQUIRE(w.size() == 1);
  CHECK(w[0].find("delay condition") != std::string::npos);
  c.delay.max_staleness = 0;
  CHECK(feasibility_warnings(c).empty());
}

// ---------------------------------------------------------------------------
// Wire codec

TEST_CASE("wire golden bytes") {
  using B = std::vector<std::uint8_t>;
  CHECK(wire::encode(wire::PullReq{7}) == B{'D', 'P', 'S', 'G', 0, 4, 0, 0, 0, 7, 0, 0, 0});
  CHECK(wire::encode(wire::Shutdown{}) == B{'D', 'P', 'S', 'G', 3, 0, 0, 0, 0});
  auto le = [](B& out, std::uint64_t x, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  };
  B model{'D', 'P', 'S', 'G', 1, 24, 0, 0, 0};
  le(model, 1, 8);                   // version
  le(model, 1, 8);                   // dim
  le(model, 0x3FF0000000000000, 8);  // 1.0
  CHECK(model.size() == 33);
  CHECK(wire::encode(wire::Model{1, {1.0}}) == model);
  wire::Push push;
  push.update.worker_id = 2;
  push.update.base_version = 3;
  push.update.delta = {-2.0};
  B pushed{'D', 'P', 'S', 'G', 2, 28, 0, 0, 0};
  le(pushed, 2, 4);                   // worker
  le(pushed, 3, 8);                   // base version
  le(pushed, 1, 8);                   // dim
  le(pushed, 0xC000000000000000, 8);  // -2.0
  CHECK(pushed.size() == 37);
  CHECK(wire::encode(push) == pushed);
  CHECK(std::get<wire::Push>(wire::decode(pushed)) == push);
  CHECK(std::get<wire::Model>(wire::decode(model)) == wire::Model{1, {1.0}});
}

TEST_CASE("wire round trips") {
  const std::vector<wire::Message> msgs{
      wire::PullReq{0xDEADBEEF}, wire::Model{~0ULL, {1e-300, -0.0, 3.5, 1e300}}, wire::Shutdown{},
      wire::Push{UpdateVector{{0.1, 0.2, -0.3}, 42, 9}}};
  for (const auto& m : msgs) {
    const auto bytes = wire::encode(m);
    CHECK(wire::decode(bytes) == m);
    const auto h = wire::decode_header(bytes);
    CHECK(h.type == wire::type_of(m));
    CHECK(h.payload_len + wire::kHeaderSize == bytes.size());
  }
}

TEST_CASE("wire rejects malformed frames") {
  const auto good = wire::encode(wire::Model{5, {1.0, 2.0}});
  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(wire::decode(bad_magic), wire::WireError);
  auto bad_type = good;
  bad_type[4] = 9;
  CHECK_THROWS_AS(wire::decode(bad_type), wire::WireError);
  CHECK_THROWS_AS(wire::decode(std::span(good).first(5)), wire::WireError);
  CHECK_THROWS_AS(wire::decode(std::span(good).first(good.size() - 1)), wire::WireError);
  auto trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(wire::decode(trailing), wire::WireError);

  // dim 0 and a payload length that disagrees with dim
  const std::vector<std::uint8_t> dim0{'D', 'P', 'S', 'G', 1, 16, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,
                                       0,   0,   0,   0,   0, 0,  0, 0};
  CHECK_THROWS_AS(wire::decode(dim0), wire::WireError);
  auto wrong_dim = good;
  wrong_dim[17] = 3;
  CHECK_THROWS_AS(wire::decode(wrong_dim), wire::WireError);

  // non-finite entry
  auto nan_frame = good;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan_frame.data() + 25, &nan, sizeof nan);
  CHECK_THROWS_AS(wire::decode(nan_frame), wire::WireError);

  // PULL_REQ with extra payload, SHUTDOWN with payload
  const std::vector<std::uint8_t> long_pull{'D', 'P', 'S', 'G', 0, 5, 0, 0, 0, 1, 0, 0, 0, 0};
  CHECK_THROWS_AS(wire::decode(long_pull), wire::WireError);
  const std::vector<std::uint8_t> long_shutdown{'D', 'P', 'S', 'G', 3, 1, 0, 0, 0, 0};
  CHECK_THROWS_AS(wire::decode(long_shutdown), wire::WireError);
  const std::vector<std::uint8_t> huge{'D', 'P', 'S', 'G', 1, 0xFF, 0xFF, 0xFF, 0xFF};
  CHECK_THROWS_AS(wire::decode_header(huge), wire::WireError);
  CHECK_THROWS_AS(wire::encode(wire::Model{0, {}}), wire::WireError);
}
