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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/encoder.hpp"
#include "pubfeat/trainers.hpp"

namespace pubfeat {

// Parties of the one-round federated protocol. kClients is the broadcast
// address covering every client.
enum class Party { kDistributor, kClients, kClient, kAggregator, kServer };

struct Endpoint {
  Party party = Party::kServer;
  int index = -1;  // client id for kClient, -1 otherwise

  std::string str() const;
  bool operator==(const Endpoint&) const = default;
};

enum class PayloadKind { kUserParams, kClientUpload, kNoisedStats };

std::string payload_kind_name(PayloadKind kind);

struct Message {
  Endpoint from;
  Endpoint to;
  PayloadKind kind = PayloadKind::kUserParams;
  int64_t scalars = 0;  // payload size
};

struct Transcript {
  std::vector<Message> messages;
  // Gaussians the trusted aggregator drew while noising the statistics.
  uint64_t aggregator_gaussian_draws = 0;
};

// Transcript CSV with header seq,from,to,kind,scalars.
void save_transcript_csv(const std::string& path,
                         const Transcript& transcript);

// Stable re-ordering by user (ties keep dataset order); the canonical
// example order reconstructed by the aggregator from per-client uploads.
InteractionDataset sort_by_user(const InteractionDataset& ds);

struct FederatedResult {
  TrainTrace trace;
  Transcript transcript;
};

// One protocol round followed by server-side training:
//   1. distributor -> clients: broadcast of the user parameters (n*d
//      scalars, one message),
//   2. client k -> aggregator: (u_k, {(j_i, y_i)}), d + 2*|examples of k|
//      scalars,
//   3. aggregator: builds the canonical dataset, computes and noises the
//      statistics exactly as ssp2 would,
//   4. aggregator -> server: noised stats, m*(d^2+d) scalars,
//   5. server: item_steps_on_stats (never sees users or labels; trace rows
//      carry NaN loss).
// With the same seed, the trained encoder is bit-identical to
// ssp2_minibatch on sort_by_user(ds).
FederatedResult run_federated_ssp2(PublicEncoder& enc,
                                   const InteractionDataset& ds,
                                   const PublicFeatureMatrix& features,
                                   const UserEncoder& users,
                                   const TrainConfig& cfg, double sigma,
                                   const RngRoot& rng);

struct AuditReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// Structural audit of what the server could observe: every message must use
// a legal edge for its kind (params: distributor->clients; upload:
// client->aggregator; stats: aggregator->server), and nothing but noised
// statistics may reach the server.
AuditReport audit_server_view(const Transcript& transcript);

}  // namespace pubfeat
