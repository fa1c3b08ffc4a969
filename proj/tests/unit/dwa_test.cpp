#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ape/dwa.hpp"
#include "ape/error.hpp"
#include "ape/rng.hpp"

namespace ape {
namespace {

using Row = std::vector<double>;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Feeds two epochs whose ratios are `omega`.
DwaState with_ratios(const Row& omega, double temperature) {
  DwaState s(omega.size(), temperature);
  s.record_epoch(Row(omega.size(), 1.0));
  s.record_epoch(omega);
  s.update_weights();
  return s;
}

TEST(Dwa, StartsAtOne) {
  DwaState s(4, 2.0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(s.weight_for(k), 1.0);
  s.record_epoch(Row{1, 2, 3, 4});
  s.update_weights();
  EXPECT_EQ(s.weights(), Row(4, 1.0));
}

TEST(Dwa, RecordAppendsInOrder) {
  DwaState s(2, 2.0);
  s.record_epoch(Row{1.0, 2.0});
  EXPECT_EQ(s.history().size(), 1u);
  s.record_epoch(Row{3.0, 4.0});
  EXPECT_EQ(s.history(), (std::vector<Row>{{1.0, 2.0}, {3.0, 4.0}}));
}

TEST(Dwa, RejectsBadLosses) {
  DwaState s(2, 2.0);
  EXPECT_THROW(s.record_epoch(Row{std::nan(""), 1.0}), LossError);
  EXPECT_THROW(s.record_epoch(Row{0.0, 1.0}), LossError);
  EXPECT_THROW(s.record_epoch(Row{-1.0, 1.0}), LossError);
  EXPECT_THROW(s.record_epoch(Row{std::numeric_limits<double>::infinity(), 1.0}), LossError);
  EXPECT_THROW(s.record_epoch(Row{1.0}), LossError);
  EXPECT_TRUE(s.history().empty());
}

TEST(Dwa, BadConstruction) {
  EXPECT_THROW(DwaState(0, 2.0), ConfigError);
  EXPECT_THROW(DwaState(2, 0.0), ConfigError);
  EXPECT_THROW(DwaState(2, -1.0), ConfigError);
}

TEST(Dwa, IndexOutOfRange) { EXPECT_THROW(DwaState(3, 2.0).weight_for(3), std::out_of_range); }

TEST(Dwa, EqualRatiosGiveOne) {
  DwaState s(3, 2.0);
  s.record_epoch(Row{2.0, 4.0, 8.0});
  s.record_epoch(Row{1.0, 2.0, 4.0});
  s.update_weights();
  for (double w : s.weights()) EXPECT_NEAR(w, 1.0, 1e-15);
}

TEST(Dwa, TwoTaskExample) {
  const auto s = with_ratios({0.5, 1.0}, 2.0);
  const double a = std::exp(0.25);
  const double b = std::exp(0.5);
  EXPECT_NEAR(s.weight_for(0), 2 * a / (a + b), 1e-12);
  EXPECT_NEAR(s.weight_for(1), 2 * b / (a + b), 1e-12);
  EXPECT_NEAR(s.weight_for(0), 0.87560, 1e-4);
  EXPECT_NEAR(s.weight_for(1), 1.12440, 1e-4);
  EXPECT_NEAR(sum(s.weights()), 2.0, 1e-12);
  EXPECT_NEAR(s.ratios()[0], 0.5, 1e-15);
}

TEST(Dwa, UsesOnlyTheLastTwoEpochs) {
  DwaState s(2, 2.0);
  s.record_epoch(Row{9.0, 1.0});
  s.record_epoch(Row{1.0, 1.0});
  s.record_epoch(Row{0.5, 1.0});
  s.update_weights();
  EXPECT_NEAR(s.weight_for(0), with_ratios({0.5, 1.0}, 2.0).weight_for(0), 1e-15);
}

TEST(Dwa, SumsToKAndMatchesSoftmax) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(7);
    Row omega(k);
    for (auto& w : omega) w = rng.uniform(0.05, 3.0);
    const double t = rng.uniform(0.2, 10.0);
    const auto s = with_ratios(omega, t);
    EXPECT_NEAR(sum(s.weights()), static_cast<double>(k), 1e-9);
    double z = 0.0;
    for (double w : omega) z += std::exp(w / t);
    for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(s.weight_for(i), k * std::exp(omega[i] / t) / z, 1e-12);
  }
}

TEST(Dwa, ScaleInvariant) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    DwaState a(3, 2.0);
    DwaState b(3, 2.0);
    const double c = rng.uniform(0.01, 100.0);
    for (int e = 0; e < 4; ++e) {
      Row row = {rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5)};
      a.record_epoch(row);
      row[1] *= c;
      b.record_epoch(row);
    }
    a.update_weights();
    b.update_weights();
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.weight_for(i), b.weight_for(i), 1e-12);
  }
}

TEST(Dwa, Monotone) {
  Row omega = {0.8, 1.0, 1.2};
  auto prev = with_ratios(omega, 2.0);
  for (int step = 0; step < 20; ++step) {
    omega[1] += 0.05;
    const auto next = with_ratios(omega, 2.0);
    EXPECT_GT(next.weight_for(1), prev.weight_for(1));
    EXPECT_LT(next.weight_for(0), prev.weight_for(0));
    EXPECT_LT(next.weight_for(2), prev.weight_for(2));
    prev = next;
  }
  // The task whose loss falls faster gets the smaller weight.
  const auto s = with_ratios({0.6, 0.9}, 2.0);
  EXPECT_LT(s.weight_for(0), s.weight_for(1));
}

TEST(Dwa, HighTemperatureIsUniform) {
  const auto s = with_ratios({0.1, 1.0, 3.0, 0.5}, 1e6);
  for (double w : s.weights()) EXPECT_NEAR(w, 1.0, 1e-3);
}

TEST(Dwa, RestoreRecomputes) {
  DwaState s(2, 2.0);
  s.restore({{1.0, 1.0}, {0.5, 1.0}});
  EXPECT_EQ(s, with_ratios({0.5, 1.0}, 2.0));
}

}  // namespace
}  // namespace ape
