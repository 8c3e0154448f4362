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
#include <fstream>
#include <memory>
#include <set>
#include <string>

#include "pubfeat/encoder.hpp"
#include "pubfeat/rng.hpp"

using namespace pubfeat;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pubfeat_enc_" + name))
      .string();
}

SparseVector make_x(std::vector<int> idx, std::vector<double> val) {
  SparseVector x;
  x.idx = std::move(idx);
  x.val = std::move(val);
  return x;
}

SparseVector random_x(int feature_dim, int nnz, Substream& s) {
  SparseVector x;
  x.idx = [&] {
    std::vector<int> out;
    for (int64_t v : sample_without_replacement(s, feature_dim, nnz)) {
      out.push_back(static_cast<int>(v));
    }
    return out;
  }();
  for (int i = 0; i < nnz; ++i) x.val.push_back(s.gaussian());
  return x;
}

// Central-difference derivative of <forward(x), r> along every parameter.
Eigen::VectorXd fd_vjp(PublicEncoder& enc, const SparseVector& x,
                       const Eigen::VectorXd& r, double h) {
  const Eigen::VectorXd theta0 = enc.flat_params();
  Eigen::VectorXd grad(theta0.size());
  for (Eigen::Index i = 0; i < theta0.size(); ++i) {
    Eigen::VectorXd theta = theta0;
    theta[i] += h;
    enc.set_flat_params(theta);
    const double up = enc.forward(x).dot(r);
    theta[i] = theta0[i] - h;
    enc.set_flat_params(theta);
    const double down = enc.forward(x).dot(r);
    grad[i] = (up - down) / (2.0 * h);
  }
  enc.set_flat_params(theta0);
  return grad;
}

}  // namespace

TEST_CASE("linear forward equals the dense matrix product") {
  const RngRoot rng(1);
  Substream s = rng.stream("t");
  LinearEncoder enc = LinearEncoder::random(10, 3, rng.stream("init"));
  for (int trial = 0; trial < 20; ++trial) {
    const SparseVector x = random_x(10, 4, s);
    Eigen::VectorXd dense_x = Eigen::VectorXd::Zero(10);
    for (int i = 0; i < x.nnz(); ++i) dense_x[x.idx[i]] = x.val[i];
    const Eigen::VectorXd want = enc.theta().transpose() * dense_x;
    const Eigen::VectorXd got = enc.forward(x);
    CHECK((want - got).norm() <= 1e-12 * (1.0 + want.norm()));
  }
}

TEST_CASE("zero input maps to zero for linear") {
  LinearEncoder enc = LinearEncoder::random(6, 2, RngRoot(2).stream("init"));
  const SparseVector x;
  CHECK(enc.forward(x).norm() == 0.0);
  CHECK(enc.sparsity_pattern(x).empty());
}

TEST_CASE("zero input maps through the dense block for two-layer") {
  TwoLayerEncoder enc = TwoLayerEncoder::random(6, 2, Activation::kTanh,
                                                RngRoot(2).stream("init"));
  const SparseVector x;
  // act(0) = 0 for tanh, so the output is exactly zero.
  CHECK(enc.forward(x).norm() == 0.0);
}

TEST_CASE("vjp matches finite differences") {
  const RngRoot rng(3);
  Substream s = rng.stream("t");
  const int p = 8;
  const int d = 3;
  std::vector<std::unique_ptr<PublicEncoder>> encs;
  encs.push_back(std::make_unique<LinearEncoder>(
      LinearEncoder::random(p, d, rng.stream("init", 0))));
  encs.push_back(std::make_unique<TwoLayerEncoder>(TwoLayerEncoder::random(
      p, d, Activation::kIdentity, rng.stream("init", 1))));
  encs.push_back(std::make_unique<TwoLayerEncoder>(TwoLayerEncoder::random(
      p, d, Activation::kTanh, rng.stream("init", 2))));
  for (auto& enc : encs) {
    for (int trial = 0; trial < 5; ++trial) {
      const SparseVector x = random_x(p, 3, s);
      Eigen::VectorXd r(d);
      for (int i = 0; i < d; ++i) r[i] = s.gaussian();
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc->param_count());
      enc->add_vjp(x, r, grad);
      const Eigen::VectorXd fd = fd_vjp(*enc, x, r, 1e-5);
      CHECK((grad - fd).norm() <= 1e-6 * (1.0 + fd.norm()));
    }
  }
}

TEST_CASE("vjp with zero cotangent is zero") {
  const RngRoot rng(4);
  TwoLayerEncoder enc = TwoLayerEncoder::random(5, 2, Activation::kTanh,
                                                rng.stream("init"));
  Substream s = rng.stream("t");
  const SparseVector x = random_x(5, 2, s);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  enc.add_vjp(x, Eigen::VectorXd::Zero(2), grad);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("sparsity pattern names exactly the active features") {
  const RngRoot rng(5);
  LinearEncoder lin = LinearEncoder::random(9, 2, rng.stream("init", 0));
  TwoLayerEncoder two = TwoLayerEncoder::random(9, 2, Activation::kTanh,
                                                rng.stream("init", 1));
  const SparseVector x = make_x({1, 4, 7}, {0.5, -1.0, 2.0});
  CHECK(lin.sparsity_pattern(x) == std::vector<int>{1, 4, 7});
  CHECK(two.sparsity_pattern(x) == std::vector<int>{1, 4, 7});
}

TEST_CASE("vjp touches only pattern rows in the first layer") {
  const RngRoot rng(6);
  Substream s = rng.stream("t");
  const int p = 12;
  const int d = 2;
  TwoLayerEncoder enc =
      TwoLayerEncoder::random(p, d, Activation::kTanh, rng.stream("init"));
  const SparseVector x = random_x(p, 3, s);
  Eigen::VectorXd r(d);
  for (int i = 0; i < d; ++i) r[i] = s.gaussian();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  enc.add_vjp(x, r, grad);
  const std::set<int> active(x.idx.begin(), x.idx.end());
  for (int row = 0; row < p; ++row) {
    const double row_norm = grad.segment(row * d, d).norm();
    if (active.count(row)) {
      CHECK(row_norm > 0.0);
    } else {
      CHECK(row_norm == 0.0);
    }
  }
}

TEST_CASE("gradient_step subtracts lr times grad exactly") {
  const RngRoot rng(7);
  for (int which = 0; which < 2; ++which) {
    std::unique_ptr<PublicEncoder> enc;
    if (which == 0) {
      enc = std::make_unique<LinearEncoder>(
          LinearEncoder::random(5, 2, rng.stream("init", 0)));
    } else {
      enc = std::make_unique<TwoLayerEncoder>(TwoLayerEncoder::random(
          5, 2, Activation::kIdentity, rng.stream("init", 1)));
    }
    Substream s = rng.stream("g", static_cast<uint64_t>(which));
    Eigen::VectorXd grad(enc->param_count());
    for (Eigen::Index i = 0; i < grad.size(); ++i) grad[i] = s.gaussian();
    const Eigen::VectorXd before = enc->flat_params();
    enc->gradient_step(grad, 0.25);
    const Eigen::VectorXd after = enc->flat_params();
    CHECK(after == Eigen::VectorXd(before - 0.25 * grad));
  }
}

TEST_CASE("flat params round-trip through set_flat_params") {
  const RngRoot rng(8);
  TwoLayerEncoder enc = TwoLayerEncoder::random(4, 3, Activation::kTanh,
                                                rng.stream("init"));
  const Eigen::VectorXd theta = enc.flat_params();
  REQUIRE(theta.size() == 4 * 3 + 3 * 3);
  TwoLayerEncoder other = TwoLayerEncoder::random(4, 3, Activation::kTanh,
                                                  rng.stream("init2"));
  other.set_flat_params(theta);
  CHECK(other.flat_params() == theta);
  CHECK(other.embedding() == enc.embedding());
  CHECK(other.dense() == enc.dense());
  CHECK_THROWS_AS(other.set_flat_params(Eigen::VectorXd::Zero(5)),
                  std::invalid_argument);
}

TEST_CASE("flat layout keeps first-layer rows contiguous") {
  Eigen::MatrixXd theta(3, 2);
  theta << 1, 2, 3, 4, 5, 6;
  const LinearEncoder enc(theta);
  const Eigen::VectorXd flat = enc.flat_params();
  // Row l occupies [l*d, l*d+d).
  Eigen::VectorXd want(6);
  want << 1, 2, 3, 4, 5, 6;
  CHECK(flat == want);
}

TEST_CASE("clone is deep") {
  LinearEncoder enc = LinearEncoder::random(4, 2, RngRoot(9).stream("init"));
  auto copy = enc.clone();
  const Eigen::VectorXd before = enc.flat_params();
  copy->gradient_step(Eigen::VectorXd::Ones(8), 1.0);
  CHECK(enc.flat_params() == before);
  CHECK(copy->flat_params() != before);
}

TEST_CASE("user encoder embeds rows and validates indices") {
  UserEncoder users = UserEncoder::random(5, 3, RngRoot(10).stream("init"));
  CHECK(users.user_count() == 5);
  CHECK(users.dim() == 3);
  const Eigen::VectorXd u = users.embed(2);
  CHECK(u == Eigen::VectorXd(users.table().row(2).transpose()));
  users.set_row(2, Eigen::VectorXd::Ones(3));
  CHECK(users.embed(2) == Eigen::VectorXd::Ones(3));
  CHECK_THROWS_AS(users.embed(5), std::out_of_range);
  CHECK_THROWS_AS(users.embed(-1), std::out_of_range);
  CHECK_THROWS_AS(users.set_row(0, Eigen::VectorXd::Ones(2)),
                  std::invalid_argument);
}

TEST_CASE("checkpoint round-trips all layer kinds") {
  const RngRoot rng(11);
  const std::string path = temp_path("ckpt.csv");

  SUBCASE("linear plus users") {
    LinearEncoder enc = LinearEncoder::random(6, 2, rng.stream("a"));
    UserEncoder users = UserEncoder::random(4, 2, rng.stream("b"));
    save_checkpoint(path, &enc, &users);
    const Checkpoint back = load_checkpoint(path);
    REQUIRE(back.encoder != nullptr);
    REQUIRE(back.users.has_value());
    CHECK(back.encoder->flat_params() == enc.flat_params());
    CHECK(back.users->table() == users.table());
    CHECK(dynamic_cast<LinearEncoder*>(back.encoder.get()) != nullptr);
  }

  SUBCASE("two-layer with activation supplied at load") {
    TwoLayerEncoder enc =
        TwoLayerEncoder::random(5, 3, Activation::kTanh, rng.stream("a"));
    save_checkpoint(path, &enc, nullptr);
    const Checkpoint back = load_checkpoint(path, Activation::kTanh);
    auto* two = dynamic_cast<TwoLayerEncoder*>(back.encoder.get());
    REQUIRE(two != nullptr);
    CHECK(two->embedding() == enc.embedding());
    CHECK(two->dense() == enc.dense());
    CHECK(two->activation() == Activation::kTanh);
    CHECK(!back.users.has_value());
  }

  SUBCASE("users only") {
    UserEncoder users = UserEncoder::random(3, 2, rng.stream("b"));
    save_checkpoint(path, nullptr, &users);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.encoder == nullptr);
    REQUIRE(back.users.has_value());
    CHECK(back.users->table() == users.table());
  }

  std::remove(path.c_str());
}

TEST_CASE("checkpoint load rejects malformed files") {
  const std::string path = temp_path("ckpt_bad.csv");
  auto write = [&](const std::string& body) {
    std::ofstream out(path);
    out << "layer,row,col,value\n" << body;
  };
  write("mystery,0,0,1.0\n");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write("linear,0,0,1.0\nlinear,0,0,2.0\n");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write("linear,0,0,1.0\nembedding,0,0,1.0\ndense,0,0,1.0\n");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write("embedding,0,0,1.0\n");  // embedding without its dense block
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  write("");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("random initialization is seed-deterministic") {
  LinearEncoder a = LinearEncoder::random(7, 3, RngRoot(12).stream("init"));
  LinearEncoder b = LinearEncoder::random(7, 3, RngRoot(12).stream("init"));
  LinearEncoder c = LinearEncoder::random(7, 3, RngRoot(13).stream("init"));
  CHECK(a.theta() == b.theta());
  CHECK(a.theta() != c.theta());
}
