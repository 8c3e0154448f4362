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

#include "pubfeat/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pubfeat/csv.hpp"
#include "pubfeat/suffstats.hpp"

namespace pubfeat {

std::string Endpoint::str() const {
  switch (party) {
    case Party::kDistributor:
      return "distributor";
    case Party::kClients:
      return "clients";
    case Party::kClient:
      return "client" + std::to_string(index);
    case Party::kAggregator:
      return "aggregator";
    case Party::kServer:
      return "server";
  }
  throw std::invalid_argument("endpoint: unknown party");
}

std::string payload_kind_name(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kUserParams:
      return "params";
    case PayloadKind::kClientUpload:
      return "upload";
    case PayloadKind::kNoisedStats:
      return "stats";
  }
  throw std::invalid_argument("payload: unknown kind");
}

void save_transcript_csv(const std::string& path,
                         const Transcript& transcript) {
  csv::Writer writer(path, "seq,from,to,kind,scalars");
  for (size_t i = 0; i < transcript.messages.size(); ++i) {
    const Message& msg = transcript.messages[i];
    writer.begin_row();
    writer.field(static_cast<int64_t>(i));
    writer.field(msg.from.str());
    writer.field(msg.to.str());
    writer.field(payload_kind_name(msg.kind));
    writer.field(msg.scalars);
    writer.end_row();
  }
}

InteractionDataset sort_by_user(const InteractionDataset& ds) {
  std::vector<int64_t> order(static_cast<size_t>(ds.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
    return ds.examples[static_cast<size_t>(a)].user <
           ds.examples[static_cast<size_t>(b)].user;
  });
  InteractionDataset out;
  out.user_count = ds.user_count;
  out.item_count = ds.item_count;
  out.examples.reserve(ds.examples.size());
  for (int64_t i : order) {
    out.examples.push_back(ds.examples[static_cast<size_t>(i)]);
  }
  return out;
}

FederatedResult run_federated_ssp2(PublicEncoder& enc,
                                   const InteractionDataset& ds,
                                   const PublicFeatureMatrix& features,
                                   const UserEncoder& users,
                                   const TrainConfig& cfg, double sigma,
                                   const RngRoot& rng) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw std::invalid_argument("run_federated_ssp2: sigma must be >= 0");
  }
  ds.validate();
  const int n = ds.user_count;
  const int m = ds.item_count;
  const int64_t d = users.dim();

  FederatedResult result;

  // Distributor broadcasts the user-side parameters to every client.
  result.transcript.messages.push_back(
      Message{Endpoint{Party::kDistributor, -1}, Endpoint{Party::kClients, -1},
              PayloadKind::kUserParams, static_cast<int64_t>(n) * d});

  // Each client uploads its user vector plus (item, label) pairs.
  const InteractionDataset canonical = sort_by_user(ds);
  const Partition part = partition(canonical);
  for (int k = 0; k < n; ++k) {
    const auto count =
        static_cast<int64_t>(part.by_user[static_cast<size_t>(k)].size());
    result.transcript.messages.push_back(
        Message{Endpoint{Party::kClient, k}, Endpoint{Party::kAggregator, -1},
                PayloadKind::kClientUpload, d + 2 * count});
  }

  // Trusted aggregator: statistics over the canonical order, noised once.
  const uint64_t draws_before = rng.gaussian_draws();
  std::vector<ItemStats> stats =
      compute_stats(canonical, part, users, cfg.clip_u, cfg.clip_y);
  noise_stats(stats, sigma, cfg.clip_u, cfg.clip_y, rng, "ssp/noise", 0);
  result.transcript.aggregator_gaussian_draws =
      rng.gaussian_draws() - draws_before;

  result.transcript.messages.push_back(
      Message{Endpoint{Party::kAggregator, -1}, Endpoint{Party::kServer, -1},
              PayloadKind::kNoisedStats,
              static_cast<int64_t>(m) * (d * d + d)});

  // Server-side descent sees only the released statistics.
  result.trace = item_steps_on_stats(enc, features, stats, cfg, rng);
  result.trace.sigma = sigma;
  result.trace.stat_releases += 2;
  return result;
}

AuditReport audit_server_view(const Transcript& transcript) {
  AuditReport report;
  for (size_t i = 0; i < transcript.messages.size(); ++i) {
    const Message& msg = transcript.messages[i];
    bool legal = false;
    switch (msg.kind) {
      case PayloadKind::kUserParams:
        legal = msg.from.party == Party::kDistributor &&
                msg.to.party == Party::kClients;
        break;
      case PayloadKind::kClientUpload:
        legal = msg.from.party == Party::kClient &&
                msg.to.party == Party::kAggregator;
        break;
      case PayloadKind::kNoisedStats:
        legal = msg.from.party == Party::kAggregator &&
                msg.to.party == Party::kServer;
        break;
    }
    if (!legal) {
      report.ok = false;
      report.violations.push_back(
          "seq " + std::to_string(i) + ": " + payload_kind_name(msg.kind) +
          " message on illegal edge " + msg.from.str() + "->" + msg.to.str());
    }
    if (msg.to.party == Party::kServer &&
        msg.kind != PayloadKind::kNoisedStats) {
      report.ok = false;
      report.violations.push_back("seq " + std::to_string(i) +
                                  ": raw payload reaches the server");
    }
  }
  return report;
}

}  // namespace pubfeat
