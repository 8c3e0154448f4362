// Copyright 2026 The pubfeat-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <vector>

#include "pubfeat/csv.hpp"
#include "pubfeat/suffstats.hpp"

using namespace pubfeat;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Per-item sums recomputed example by example, the reference the fast path
// must match bit for bit (same accumulation order).
std::vector<ItemStats> brute_stats(const InteractionDataset& ds,
                                   const UserEncoder& users, double clip_u,
                                   double clip_y) {
  const int d = users.dim();
  std::vector<ItemStats> stats(static_cast<size_t>(ds.item_count));
  for (auto& st : stats) {
    st.A = Eigen::MatrixXd::Zero(d, d);
    st.b = Eigen::VectorXd::Zero(d);
  }
  for (const Interaction& ex : ds.examples) {
    const Eigen::VectorXd u = clip(users.embed(ex.user), clip_u);
    const double y = clip(ex.label, clip_y);
    stats[static_cast<size_t>(ex.item)].A += ex.weight * u * u.transpose();
    stats[static_cast<size_t>(ex.item)].b += ex.weight * y * u;
  }
  return stats;
}

InteractionDataset random_dataset(int users, int items, int64_t examples,
                                  uint64_t seed, double weight_spread = 0.0) {
  InteractionDataset ds;
  ds.user_count = users;
  ds.item_count = items;
  Substream s = RngRoot(seed).stream("ds");
  for (int64_t i = 0; i < examples; ++i) {
    Interaction ex;
    ex.user = static_cast<int>(s.uniform_int(static_cast<uint64_t>(users)));
    ex.item = static_cast<int>(s.uniform_int(static_cast<uint64_t>(items)));
    ex.label = 3.0 * s.gaussian();
    ex.weight = 1.0 + weight_spread * s.uniform();
    ds.examples.push_back(ex);
  }
  return ds;
}

}  // namespace

TEST_CASE("vector clip scales onto the bound") {
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  const Eigen::VectorXd inside = clip(x, 10.0);
  CHECK(inside == x);
  const Eigen::VectorXd clipped = clip(x, 1.0);
  CHECK(clipped.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clipped[0] / clipped[1] == doctest::Approx(0.75));
  CHECK(clip(x, kInf) == x);
}

TEST_CASE("matrix clip uses the Frobenius norm") {
  Eigen::MatrixXd m(2, 2);
  m << 3.0, 0.0, 0.0, 4.0;
  CHECK(clip(m, 6.0) == m);
  const Eigen::MatrixXd clipped = clip(m, 2.5);
  CHECK(clipped.norm() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("scalar clip clamps magnitude") {
  CHECK(clip(0.5, 1.0) == 0.5);
  CHECK(clip(-7.0, 2.0) == -2.0);
  CHECK(clip(7.0, 2.0) == 2.0);
  CHECK(clip(-0.25, kInf) == -0.25);
}

TEST_CASE("clip validates its arguments") {
  Eigen::VectorXd x(1);
  x << 1.0;
  CHECK_THROWS_AS(clip(x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(clip(x, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(clip(1.0, std::nan("")), std::invalid_argument);
  x[0] = std::nan("");
  CHECK_THROWS_AS(clip(x, 1.0), std::invalid_argument);
}

TEST_CASE("single example stats pin the documented values") {
  InteractionDataset ds;
  ds.user_count = 1;
  ds.item_count = 1;
  ds.examples = {{0, 0, 2.0, 1.0}};
  UserEncoder users(Eigen::MatrixXd::Zero(1, 2));
  users.set_row(0, (Eigen::VectorXd(2) << 1.0, 0.0).finished());
  const auto stats = compute_stats(ds, partition(ds), users, 10.0, 10.0);
  REQUIRE(stats.size() == 1);
  Eigen::MatrixXd want_a(2, 2);
  want_a << 1.0, 0.0, 0.0, 0.0;
  CHECK(stats[0].A == want_a);
  CHECK(stats[0].b == (Eigen::VectorXd(2) << 2.0, 0.0).finished());
}

TEST_CASE("orthonormal users give identity stats") {
  InteractionDataset ds;
  ds.user_count = 2;
  ds.item_count = 1;
  ds.examples = {{0, 0, 1.0, 1.0}, {1, 0, 1.0, 1.0}};
  Eigen::MatrixXd table(2, 2);
  table << 1.0, 0.0, 0.0, 1.0;
  const UserEncoder users(table);
  const auto stats = compute_stats(ds, partition(ds), users, 10.0, 10.0);
  CHECK(stats[0].A == Eigen::MatrixXd::Identity(2, 2));
  CHECK(stats[0].b == Eigen::VectorXd::Ones(2));
}

TEST_CASE("compute_stats matches the example-order reference exactly") {
  const InteractionDataset ds = random_dataset(7, 5, 200, 31, 1.5);
  const UserEncoder users =
      UserEncoder::random(7, 3, RngRoot(32).stream("u"));
  for (double cu : {0.5, kInf}) {
    for (double cy : {1.0, kInf}) {
      const auto fast = compute_stats(ds, partition(ds), users, cu, cy);
      const auto ref = brute_stats(ds, users, cu, cy);
      REQUIRE(fast.size() == ref.size());
      for (size_t j = 0; j < fast.size(); ++j) {
        CHECK(fast[j].A == ref[j].A);
        CHECK(fast[j].b == ref[j].b);
      }
    }
  }
}

TEST_CASE("items without examples produce zero stats") {
  InteractionDataset ds;
  ds.user_count = 1;
  ds.item_count = 3;
  ds.examples = {{0, 1, 1.0, 1.0}};
  const UserEncoder users =
      UserEncoder::random(1, 2, RngRoot(1).stream("u"));
  const auto stats = compute_stats(ds, partition(ds), users, 1.0, 1.0);
  CHECK(stats[0].A.norm() == 0.0);
  CHECK(stats[0].b.norm() == 0.0);
  CHECK(stats[2].A.norm() == 0.0);
}

TEST_CASE("stats A is symmetric positive semidefinite") {
  const InteractionDataset ds = random_dataset(9, 4, 150, 33);
  const UserEncoder users =
      UserEncoder::random(9, 3, RngRoot(34).stream("u"));
  const auto stats = compute_stats(ds, partition(ds), users, 1.0, 1.0);
  for (const ItemStats& st : stats) {
    CHECK((st.A - st.A.transpose()).norm() == 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.A);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("symmetric_gaussian mirrors the upper triangle") {
  const RngRoot rng(35);
  Substream s = rng.stream("n");
  const Eigen::MatrixXd m = symmetric_gaussian(4, s);
  CHECK((m - m.transpose()).norm() == 0.0);
  CHECK(rng.gaussian_draws() == 4 * 5 / 2);
}

TEST_CASE("noise_stats draws nothing at sigma zero") {
  const InteractionDataset ds = random_dataset(5, 3, 40, 36);
  const UserEncoder users =
      UserEncoder::random(5, 2, RngRoot(37).stream("u"));
  auto stats = compute_stats(ds, partition(ds), users, 1.0, 1.0);
  const auto before = stats;
  const RngRoot rng(38);
  noise_stats(stats, 0.0, 1.0, 1.0, rng, "ssp/noise", 0);
  CHECK(rng.gaussian_draws() == 0);
  for (size_t j = 0; j < stats.size(); ++j) {
    CHECK(stats[j].A == before[j].A);
    CHECK(stats[j].b == before[j].b);
  }
}

TEST_CASE("noise_stats draw count matches the release shape") {
  const int m = 6;
  const int d = 3;
  std::vector<ItemStats> stats(m);
  for (auto& st : stats) {
    st.A = Eigen::MatrixXd::Zero(d, d);
    st.b = Eigen::VectorXd::Zero(d);
  }
  const RngRoot rng(39);
  noise_stats(stats, 1.0, 1.0, 1.0, rng, "ssp/noise", 0);
  CHECK(rng.gaussian_draws() ==
        static_cast<uint64_t>(m) * (d * (d + 1) / 2 + d));
}

TEST_CASE("noise_stats is keyed, symmetric, and round-dependent") {
  const int d = 3;
  auto zeros = [&] {
    std::vector<ItemStats> stats(4);
    for (auto& st : stats) {
      st.A = Eigen::MatrixXd::Zero(d, d);
      st.b = Eigen::VectorXd::Zero(d);
    }
    return stats;
  };
  auto a = zeros();
  auto b = zeros();
  auto c = zeros();
  const RngRoot rng(40);
  noise_stats(a, 2.0, 1.5, 0.5, rng, "ssp/noise", 7);
  noise_stats(b, 2.0, 1.5, 0.5, rng, "ssp/noise", 7);
  noise_stats(c, 2.0, 1.5, 0.5, rng, "ssp/noise", 8);
  for (size_t j = 0; j < a.size(); ++j) {
    CHECK(a[j].A == b[j].A);  // same key, same noise
    CHECK(a[j].b == b[j].b);
    CHECK(a[j].A != c[j].A);  // new round, fresh noise
    CHECK((a[j].A - a[j].A.transpose()).norm() == 0.0);
  }
}

TEST_CASE("noise_stats scales match sigma and the clip bounds") {
  // Moment check over many items: entry std of A is sigma*clip_u^2 and of b
  // is sigma*clip_u*clip_y.
  const int m = 4000;
  const int d = 2;
  const double sigma = 1.7;
  const double cu = 2.0;
  const double cy = 3.0;
  std::vector<ItemStats> stats(m);
  for (auto& st : stats) {
    st.A = Eigen::MatrixXd::Zero(d, d);
    st.b = Eigen::VectorXd::Zero(d);
  }
  const RngRoot rng(41);
  noise_stats(stats, sigma, cu, cy, rng, "ssp/noise", 0);
  double sq_a = 0.0;
  double sq_b = 0.0;
  for (const auto& st : stats) {
    sq_a += st.A(0, 1) * st.A(0, 1);
    sq_b += st.b.squaredNorm();
  }
  const double std_a = std::sqrt(sq_a / m);
  const double std_b = std::sqrt(sq_b / (m * d));
  CHECK(std_a == doctest::Approx(sigma * cu * cu).epsilon(0.05));
  CHECK(std_b == doctest::Approx(sigma * cu * cy).epsilon(0.05));
}

TEST_CASE("noise_stats rejects invalid sigma") {
  std::vector<ItemStats> stats(1);
  stats[0].A = Eigen::MatrixXd::Zero(2, 2);
  stats[0].b = Eigen::VectorXd::Zero(2);
  const RngRoot rng(42);
  CHECK_THROWS_AS(noise_stats(stats, -1.0, 1.0, 1.0, rng, "t", 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(noise_stats(stats, std::nan(""), 1.0, 1.0, rng, "t", 0),
                  std::invalid_argument);
}

TEST_CASE("quadratic loss derivatives") {
  const QuadraticLoss loss;
  CHECK(loss.value(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(loss.d1(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(loss.d2(3.0, 1.0) == 1.0);
}

TEST_CASE("logistic loss matches cross-entropy and finite differences") {
  const LogisticLoss loss;
  for (double y : {0.0, 1.0}) {
    for (double s : {-3.0, -0.5, 0.0, 0.5, 3.0}) {
      const double p = 1.0 / (1.0 + std::exp(-s));
      const double want = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
      CHECK(loss.value(s, y) == doctest::Approx(want).epsilon(1e-12));
      const double h = 1e-6;
      const double fd1 =
          (loss.value(s + h, y) - loss.value(s - h, y)) / (2.0 * h);
      const double fd2 = (loss.d1(s + h, y) - loss.d1(s - h, y)) / (2.0 * h);
      CHECK(loss.d1(s, y) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(loss.d2(s, y) == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
  // Stays finite far into the tails.
  CHECK(std::isfinite(loss.value(-60.0, 1.0)));
  CHECK(std::isfinite(loss.value(60.0, 0.0)));
  CHECK(loss.d2(100.0, 1.0) >= 0.0);
}

TEST_CASE("convex stats with quadratic loss and open clips reduce to (A, b)") {
  const InteractionDataset ds = random_dataset(6, 4, 120, 43, 0.8);
  const RngRoot rng(44);
  const UserEncoder users = UserEncoder::random(6, 3, rng.stream("u"));
  SyntheticLinearConfig fcfg;
  fcfg.items = 4;
  fcfg.users = 6;
  fcfg.feature_dim = 9;
  fcfg.embed_dim = 3;
  fcfg.features_per_item = 3;
  fcfg.examples = 1;
  const PublicFeatureMatrix features =
      gen_synthetic_linear(fcfg).features;
  const LinearEncoder enc =
      LinearEncoder::random(9, 3, rng.stream("enc"));

  const auto stats = compute_stats(ds, partition(ds), users, 0.8, 2.0);
  const auto convex =
      compute_convex_stats(ds, partition(ds), users, enc, features,
                           QuadraticLoss(), 0.8, 2.0, kInf, kInf);
  REQUIRE(convex.size() == stats.size());
  for (size_t j = 0; j < stats.size(); ++j) {
    CHECK((convex[j].H - stats[j].A).norm() <=
          1e-12 * (1.0 + stats[j].A.norm()));
    const Eigen::VectorXd v0 = enc.forward(features.row(static_cast<int>(j)));
    CHECK(convex[j].anchor == v0);
    const Eigen::VectorXd want_g = stats[j].A * v0 - stats[j].b;
    CHECK((convex[j].g - want_g).norm() <= 1e-12 * (1.0 + want_g.norm()));
  }
}

TEST_CASE("noise_convex_stats keys and zero-sigma behave like noise_stats") {
  std::vector<ConvexItemStats> stats(3);
  for (auto& st : stats) {
    st.H = Eigen::MatrixXd::Zero(2, 2);
    st.g = Eigen::VectorXd::Zero(2);
    st.anchor = Eigen::VectorXd::Zero(2);
  }
  const RngRoot rng(45);
  noise_convex_stats(stats, 0.0, 1.0, 1.0, rng, "convex/noise", 0);
  CHECK(rng.gaussian_draws() == 0);
  noise_convex_stats(stats, 1.0, 2.0, 3.0, rng, "convex/noise", 0);
  for (const auto& st : stats) {
    CHECK((st.H - st.H.transpose()).norm() == 0.0);
    CHECK(st.H.norm() > 0.0);
    CHECK(st.anchor == Eigen::VectorXd::Zero(2));  // anchors are never noised
  }
}

TEST_CASE("stats CSV dump round-trips entries") {
  std::vector<ItemStats> stats(2);
  stats[0].A = (Eigen::MatrixXd(2, 2) << 1.0, 0.25, 0.25, 2.0).finished();
  stats[0].b = (Eigen::VectorXd(2) << -1.0, 1.0 / 3.0).finished();
  stats[1].A = Eigen::MatrixXd::Zero(2, 2);
  stats[1].b = Eigen::VectorXd::Zero(2);
  const std::string path =
      (std::filesystem::temp_directory_path() / "pubfeat_stats.csv").string();
  save_stats_csv(path, stats);
  csv::Reader reader(path, "item_id,kind,row,col,value");
  int rows = 0;
  bool saw_b_fraction = false;
  while (reader.next()) {
    ++rows;
    if (reader.fields()[1] == "b" && reader.int_field(0) == 0 &&
        reader.int_field(2) == 1) {
      CHECK(reader.double_field(4) == 1.0 / 3.0);
      saw_b_fraction = true;
    }
  }
  CHECK(rows == 2 * (4 + 2));
  CHECK(saw_b_fraction);
  std::remove(path.c_str());
}

// Example-level sensitivity certificate: adding one example moves the
// stacked (A, b) release by at most (clip_u^2, clip_u*clip_y).
TEST_CASE("example-level sensitivity never exceeds the certified bounds") {
  const double cu = 0.9;
  const double cy = 1.4;
  Substream s = RngRoot(46).stream("trials");
  for (int trial = 0; trial < 200; ++trial) {
    InteractionDataset ds = random_dataset(6, 4, 30, 1000 + trial);
    const UserEncoder users = UserEncoder::random(
        6, 3, RngRoot(2000 + trial).stream("u"));
    const auto base = compute_stats(ds, partition(ds), users, cu, cy);
    Interaction extra;
    extra.user = static_cast<int>(s.uniform_int(6));
    extra.item = static_cast<int>(s.uniform_int(4));
    extra.label = 5.0 * s.gaussian();
    extra.weight = 1.0;
    ds.examples.push_back(extra);
    const auto plus = compute_stats(ds, partition(ds), users, cu, cy);
    double diff_a = 0.0;
    double diff_b = 0.0;
    for (size_t j = 0; j < base.size(); ++j) {
      diff_a += (plus[j].A - base[j].A).squaredNorm();
      diff_b += (plus[j].b - base[j].b).squaredNorm();
    }
    CHECK(std::sqrt(diff_a) <= cu * cu + 1e-12);
    CHECK(std::sqrt(diff_b) <= cu * cy + 1e-12);
  }
}

TEST_CASE("worst-case example meets the sensitivity bound") {
  const double cu = 0.9;
  const double cy = 1.4;
  InteractionDataset ds;
  ds.user_count = 1;
  ds.item_count = 1;
  ds.examples = {{0, 0, 100.0, 1.0}};  // label clips to exactly cy
  UserEncoder users(Eigen::MatrixXd::Zero(1, 2));
  users.set_row(0, (Eigen::VectorXd(2) << 5.0, 0.0).finished());  // clips
  const auto stats = compute_stats(ds, partition(ds), users, cu, cy);
  CHECK(stats[0].A.norm() == doctest::Approx(cu * cu).epsilon(1e-9));
  CHECK(stats[0].b.norm() == doctest::Approx(cu * cy).epsilon(1e-9));
}
