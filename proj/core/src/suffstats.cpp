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

#include "pubfeat/suffstats.hpp"

#include <cmath>
#include <stdexcept>

#include "pubfeat/csv.hpp"
#include "pubfeat/parallel.hpp"

namespace pubfeat {
namespace {

void check_bound(double bound, const char* who) {
  if (std::isnan(bound) || bound <= 0.0) {
    throw std::invalid_argument(std::string(who) +
                                ": clip bound must be positive");
  }
}

}  // namespace

Eigen::VectorXd clip(const Eigen::VectorXd& x, double bound) {
  check_bound(bound, "clip");
  if (!x.allFinite()) throw std::invalid_argument("clip: non-finite input");
  const double norm = x.norm();
  if (norm <= bound) return x;
  return x * (bound / norm);
}

Eigen::MatrixXd clip(const Eigen::MatrixXd& x, double bound) {
  check_bound(bound, "clip");
  if (!x.allFinite()) throw std::invalid_argument("clip: non-finite input");
  const double norm = x.norm();  // Frobenius
  if (norm <= bound) return x;
  return x * (bound / norm);
}

double clip(double x, double bound) {
  check_bound(bound, "clip");
  if (!std::isfinite(x)) throw std::invalid_argument("clip: non-finite input");
  const double mag = std::abs(x);
  if (mag <= bound) return x;
  return x * (bound / mag);
}

std::vector<ItemStats> compute_stats(const InteractionDataset& ds,
                                     const Partition& part,
                                     const UserEncoder& users, double clip_u,
                                     double clip_y) {
  check_bound(clip_u, "compute_stats: clip_u");
  check_bound(clip_y, "compute_stats: clip_y");
  if (static_cast<int>(part.by_item.size()) != ds.item_count) {
    throw std::invalid_argument("compute_stats: partition/dataset mismatch");
  }
  if (users.user_count() < ds.user_count) {
    throw std::invalid_argument("compute_stats: user table too small");
  }
  const int d = users.dim();

  // Clip each user vector once; examples of the same user share it.
  Eigen::MatrixXd clipped(users.user_count(), d);
  for (int k = 0; k < users.user_count(); ++k) {
    clipped.row(k) = clip(users.embed(k), clip_u).transpose();
  }

  std::vector<ItemStats> stats(static_cast<size_t>(ds.item_count));
  parallel_for(ds.item_count, [&](int64_t j) {
    ItemStats& st = stats[static_cast<size_t>(j)];
    st.A = Eigen::MatrixXd::Zero(d, d);
    st.b = Eigen::VectorXd::Zero(d);
    for (int64_t i : part.by_item[static_cast<size_t>(j)]) {
      const Interaction& ex = ds.examples[static_cast<size_t>(i)];
      const auto u = clipped.row(ex.user).transpose();
      const double y = clip(ex.label, clip_y);
      st.A.noalias() += ex.weight * (u * u.transpose());
      st.b.noalias() += ex.weight * y * u;
    }
  });
  return stats;
}

Eigen::MatrixXd symmetric_gaussian(int dim, Substream& s) {
  if (dim < 1) throw std::invalid_argument("symmetric_gaussian: dim >= 1");
  Eigen::MatrixXd out(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i; j < dim; ++j) {
      const double g = s.gaussian();
      out(i, j) = g;
      out(j, i) = g;
    }
  }
  return out;
}

void noise_stats(std::vector<ItemStats>& stats, double sigma, double clip_u,
                 double clip_y, const RngRoot& rng, std::string_view tag,
                 uint64_t round) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw std::invalid_argument("noise_stats: sigma must be >= 0");
  }
  if (sigma == 0.0) return;
  check_bound(clip_u, "noise_stats: clip_u");
  check_bound(clip_y, "noise_stats: clip_y");
  const double a_scale = sigma * clip_u * clip_u;
  const double b_scale = sigma * clip_u * clip_y;
  parallel_for(static_cast<int64_t>(stats.size()), [&](int64_t j) {
    ItemStats& st = stats[static_cast<size_t>(j)];
    const int d = static_cast<int>(st.b.size());
    Substream sa = rng.stream(tag, round, static_cast<uint64_t>(j), 0);
    st.A += a_scale * symmetric_gaussian(d, sa);
    Substream sb = rng.stream(tag, round, static_cast<uint64_t>(j), 1);
    for (int r = 0; r < d; ++r) st.b(r) += b_scale * sb.gaussian();
  });
}

double QuadraticLoss::value(double s, double y) const {
  const double r = s - y;
  return 0.5 * r * r;
}
double QuadraticLoss::d1(double s, double y) const { return s - y; }
double QuadraticLoss::d2(double /*s*/, double /*y*/) const { return 1.0; }

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double LogisticLoss::value(double s, double y) const {
  const double z = (2.0 * y - 1.0) * s;
  if (z > 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

double LogisticLoss::d1(double s, double y) const {
  const double sign = 2.0 * y - 1.0;
  return sign * (logistic(sign * s) - 1.0);
}

double LogisticLoss::d2(double s, double y) const {
  const double p = logistic((2.0 * y - 1.0) * s);
  return p * (1.0 - p);
}

std::vector<ConvexItemStats> compute_convex_stats(
    const InteractionDataset& ds, const Partition& part,
    const UserEncoder& users, const PublicEncoder& enc,
    const PublicFeatureMatrix& features, const ScalarLoss& loss,
    double clip_u, double clip_y, double clip_h, double clip_g) {
  check_bound(clip_u, "compute_convex_stats: clip_u");
  check_bound(clip_y, "compute_convex_stats: clip_y");
  check_bound(clip_h, "compute_convex_stats: clip_h");
  check_bound(clip_g, "compute_convex_stats: clip_g");
  if (static_cast<int>(part.by_item.size()) != ds.item_count ||
      features.item_count() < ds.item_count) {
    throw std::invalid_argument(
        "compute_convex_stats: partition/features/dataset mismatch");
  }
  if (users.user_count() < ds.user_count) {
    throw std::invalid_argument("compute_convex_stats: user table too small");
  }
  const int d = users.dim();

  Eigen::MatrixXd clipped(users.user_count(), d);
  for (int k = 0; k < users.user_count(); ++k) {
    clipped.row(k) = clip(users.embed(k), clip_u).transpose();
  }

  std::vector<ConvexItemStats> stats(static_cast<size_t>(ds.item_count));
  parallel_for(ds.item_count, [&](int64_t j) {
    ConvexItemStats& st = stats[static_cast<size_t>(j)];
    st.anchor = enc.forward(features.row(static_cast<int>(j)));
    st.H = Eigen::MatrixXd::Zero(d, d);
    st.g = Eigen::VectorXd::Zero(d);
    for (int64_t i : part.by_item[static_cast<size_t>(j)]) {
      const Interaction& ex = ds.examples[static_cast<size_t>(i)];
      const Eigen::VectorXd u = clipped.row(ex.user).transpose();
      const double y = clip(ex.label, clip_y);
      const double s = u.dot(st.anchor);
      const Eigen::MatrixXd curv = loss.d2(s, y) * (u * u.transpose());
      st.H.noalias() += ex.weight * clip(curv, clip_h);
      const Eigen::VectorXd slope = loss.d1(s, y) * u;
      st.g.noalias() += ex.weight * clip(slope, clip_g);
    }
  });
  return stats;
}

void noise_convex_stats(std::vector<ConvexItemStats>& stats, double sigma,
                        double clip_h, double clip_g, const RngRoot& rng,
                        std::string_view tag, uint64_t round) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw std::invalid_argument("noise_convex_stats: sigma must be >= 0");
  }
  if (sigma == 0.0) return;
  check_bound(clip_h, "noise_convex_stats: clip_h");
  check_bound(clip_g, "noise_convex_stats: clip_g");
  const double h_scale = sigma * clip_h;
  const double g_scale = sigma * clip_g;
  parallel_for(static_cast<int64_t>(stats.size()), [&](int64_t j) {
    ConvexItemStats& st = stats[static_cast<size_t>(j)];
    const int d = static_cast<int>(st.g.size());
    Substream sh = rng.stream(tag, round, static_cast<uint64_t>(j), 0);
    st.H += h_scale * symmetric_gaussian(d, sh);
    Substream sg = rng.stream(tag, round, static_cast<uint64_t>(j), 1);
    for (int r = 0; r < d; ++r) st.g(r) += g_scale * sg.gaussian();
  });
}

namespace {

void write_matrix_kind(csv::Writer& writer, int64_t item,
                       std::string_view kind, const Eigen::MatrixXd& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      writer.begin_row();
      writer.field(item);
      writer.field(kind);
      writer.field(static_cast<int64_t>(r));
      writer.field(static_cast<int64_t>(c));
      writer.field(mat(r, c));
      writer.end_row();
    }
  }
}

void write_vector_kind(csv::Writer& writer, int64_t item,
                       std::string_view kind, const Eigen::VectorXd& vec) {
  for (Eigen::Index r = 0; r < vec.size(); ++r) {
    writer.begin_row();
    writer.field(item);
    writer.field(kind);
    writer.field(static_cast<int64_t>(r));
    writer.field(static_cast<int64_t>(0));
    writer.field(vec(r));
    writer.end_row();
  }
}

}  // namespace

void save_stats_csv(const std::string& path,
                    const std::vector<ItemStats>& stats) {
  csv::Writer writer(path, "item_id,kind,row,col,value");
  for (size_t j = 0; j < stats.size(); ++j) {
    write_matrix_kind(writer, static_cast<int64_t>(j), "A", stats[j].A);
    write_vector_kind(writer, static_cast<int64_t>(j), "b", stats[j].b);
  }
}

void save_convex_stats_csv(const std::string& path,
                           const std::vector<ConvexItemStats>& stats) {
  csv::Writer writer(path, "item_id,kind,row,col,value");
  for (size_t j = 0; j < stats.size(); ++j) {
    write_matrix_kind(writer, static_cast<int64_t>(j), "H", stats[j].H);
    write_vector_kind(writer, static_cast<int64_t>(j), "g", stats[j].g);
  }
}

}  // namespace pubfeat
