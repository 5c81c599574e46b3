#include "vcache/consensus/engine.hpp"

#include <algorithm>
#include <limits>

#include "vcache/core/error.hpp"

namespace vcache::consensus {

ledger::Bytes ConfirmMessage::signed_payload() const {
  ledger::ByteWriter w;
  w.fixed(verifier);
  w.fixed(leader);
  w.u8(agree ? 1 : 0);
  w.fixed(self.audited);
  return w.take();
}

nlohmann::json RoundReport::to_json() const {
  nlohmann::json j = {{"round", round},
                      {"leader", leader},
                      {"agree_count", agree_count},
                      {"verifier_count", verifier_count},
                      {"accepted", accepted},
                      {"skipped", skipped},
                      {"tx_count", tx_count},
                      {"T_bb", delays.broadcast},
                      {"T_cv", delays.cross},
                      {"T_bc", delays.confirm},
                      {"T_total", delays.total()},
                      {"utility_per_bs", utility_per_bs},
                      {"clock", clock}};
  j["block_index"] = block_index ? nlohmann::json(*block_index) : nlohmann::json(nullptr);
  return j;
}

bool quorum_reached(std::size_t agree, std::size_t verifier_count) {
  return 3 * agree > 2 * verifier_count;
}

ConsensusEngine::ConsensusEngine(std::vector<BaseStation> stations, ConsensusParams params,
                                 ledger::Chain chain, Rng rng)
    : stations_(std::move(stations)),
      params_(params),
      chain_(std::move(chain)),
      rng_(std::move(rng)) {
  params_.validate(stations_.size());
  if (chain_.max_txs() < params_.max_txs) {
    throw InvalidArgument("chain transaction cap is below the consensus block cap");
  }
  commission_.delegates.resize(params_.commission_size);
  for (std::size_t k = 0; k < params_.commission_size; ++k) commission_.delegates[k] = k;
}

bool ConsensusEngine::submit(PendingTx tx) {
  if (!tx.tx.verify()) return false;
  if (chain_.seen(tx.tx.sig) || pending_sigs_.contains(tx.tx.sig)) return false;
  pending_sigs_.insert(tx.tx.sig);
  mempool_.push_back(std::move(tx));
  return true;
}

void ConsensusEngine::set_commission(DelegateCommission c) {
  if (c.delegates.size() != params_.commission_size) {
    throw InvalidArgument("commission size does not match the consensus parameters");
  }
  std::set<std::size_t> distinct(c.delegates.begin(), c.delegates.end());
  if (distinct.size() != c.delegates.size() || *distinct.rbegin() >= stations_.size()) {
    throw InvalidArgument("commission must name distinct known stations");
  }
  if (c.cursor >= c.delegates.size()) throw InvalidArgument("leader cursor out of range");
  commission_ = std::move(c);
}

void ConsensusEngine::set_message_sizes(double block_bits, double result_bits,
                                        double audit_bits) {
  ConsensusParams next = params_;
  next.block_bits = block_bits;
  next.result_bits = result_bits;
  next.audit_bits = audit_bits;
  next.validate(stations_.size());
  params_ = next;
}

void ConsensusEngine::elect(std::span<const Vote> votes) {
  set_commission(elect_commission(votes, stations_.size(), params_.commission_size));
}

ledger::Block ConsensusEngine::build_block(std::size_t tx_count) const {
  ledger::Block b;
  b.index = chain_.tip().index + 1;
  b.prev_hash = chain_.tip().hash();
  b.timestamp = clock_;
  b.txs.reserve(tx_count);
  for (std::size_t k = 0; k < tx_count; ++k) b.txs.push_back(mempool_[k].tx);
  return b;
}

AuditResult ConsensusEngine::audit(std::size_t station, const BroadcastMessage& bro) const {
  AuditResult res;
  res.verifier = station;
  ledger::Block b;
  try {
    b = ledger::Block::decode(bro.block);
  } catch (const ParseError&) {
    return res;
  }
  res.audited = b.hash();
  const auto& leader_pk = stations_[commission_.leader()].identity.pk();
  const bool linked = b.index == chain_.tip().index + 1 && b.prev_hash == chain_.tip().hash();
  res.block_ok = linked && b.producer == leader_pk && bro.leader == leader_pk &&
                 b.txs.size() <= params_.max_txs && b.signature_ok();
  std::set<ledger::Signature> in_block;
  for (std::size_t k = 0; k < b.txs.size(); ++k) {
    const auto& t = b.txs[k];
    if (!t.verify() || chain_.seen(t.sig) || !in_block.insert(t.sig).second) {
      res.bad_txs.push_back(k);
    }
  }
  return res;
}

void ConsensusEngine::advance_leader(RoundReport& report) {
  ++round_;
  ++commission_.rounds;
  ++commission_.cursor;
  if (commission_.cursor == commission_.delegates.size()) {
    commission_.cursor = 0;
    auto& d = commission_.delegates;
    for (std::size_t k = d.size() - 1; k > 0; --k) {
      std::swap(d[k], d[rng_.uniform_index(k + 1)]);
    }
    report.rotation_complete = true;
  }
  report.clock = clock_;
}

RoundReport ConsensusEngine::run_round() {
  const auto it = faults_.find(round_);
  return run_round(it == faults_.end() ? RoundFaults{} : it->second);
}

RoundReport ConsensusEngine::run_round(const RoundFaults& faults) {
  RoundReport report;
  report.round = round_;
  const std::size_t leader = commission_.leader();
  const auto verifiers = commission_.verifiers();
  report.leader = leader;
  report.verifier_count = verifiers.size();

  const std::size_t tx_count = std::min(params_.max_txs, mempool_.size());
  report.tx_count = tx_count;
  double transmission = 0.0;
  double tau = tx_count == 0 ? params_.default_deadline : std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tx_count; ++k) {
    transmission = std::max(transmission, mempool_[k].transmission);
    tau = std::min(tau, mempool_[k].deadline);
  }

  std::vector<Node> verifier_nodes;
  for (std::size_t v : verifiers) verifier_nodes.push_back(stations_[v].node);
  report.delays = block_time(stations_[leader].node, verifier_nodes, params_, transmission);
  report.utility_per_bs.reserve(stations_.size());
  for (std::size_t m = 0; m < stations_.size(); ++m) {
    report.utility_per_bs.push_back(station_utility(stations_, m, params_, transmission, tau));
  }

  if (faults.leader_fails) {
    report.skipped = true;
    clock_ += params_.hash_delay;
    advance_leader(report);
    return report;
  }

  // Leader: assemble, optionally corrupt, sign and broadcast.
  ledger::Block block = build_block(tx_count);
  if (faults.tamper_tx && *faults.tamper_tx < block.txs.size()) {
    block.txs[*faults.tamper_tx].coins += 1;
  }
  const auto& leader_id = stations_[leader].identity;
  block.sign_with(leader_id.keys);
  if (faults.forge_leader_sig) block.leader_sig.bytes[0] ^= 0x01;
  ledger::Bytes wire = block.encode();
  if (faults.tamper_byte && !wire.empty()) wire[*faults.tamper_byte % wire.size()] ^= 0x01;

  // Verifiers: audit their copy, exchange audits, report to the leader.
  std::vector<AuditResult> audits;
  audits.reserve(verifiers.size());
  for (std::size_t v : verifiers) {
    const BroadcastMessage bro{leader_id.pk(), stations_[v].identity.pk(), clock_, wire};
    AuditResult a = audit(v, bro);
    if (faults.rejecting.contains(v)) a.block_ok = false;
    audits.push_back(std::move(a));
  }
  std::vector<ConfirmMessage> confirms;
  confirms.reserve(verifiers.size());
  for (std::size_t k = 0; k < verifiers.size(); ++k) {
    ConfirmMessage con;
    con.verifier = stations_[verifiers[k]].identity.pk();
    con.leader = leader_id.pk();
    con.self = audits[k];
    for (std::size_t o = 0; o < audits.size(); ++o) {
      if (o != k) con.received.push_back(audits[o]);
    }
    con.agree = con.self.agrees();
    con.sig = ledger::sign(stations_[verifiers[k]].identity.keys.sk, con.signed_payload());
    confirms.push_back(std::move(con));
  }

  // Leader: count signed agreements on exactly the block it holds.
  const ledger::Digest held = block.hash();
  for (std::size_t k = 0; k < confirms.size(); ++k) {
    const auto& con = confirms[k];
    const bool authentic =
        con.verifier == stations_[verifiers[k]].identity.pk() &&
        ledger::verify(con.verifier, con.signed_payload(), con.sig);
    if (authentic && con.agree && con.self.audited == held) ++report.agree_count;
  }
  report.audits = std::move(audits);

  if (quorum_reached(report.agree_count, verifiers.size()) &&
      chain_.append(block) == ledger::AppendStatus::ok) {
    report.accepted = true;
    report.block_index = block.index;
    for (std::size_t k = 0; k < tx_count; ++k) pending_sigs_.erase(mempool_[k].tx.sig);
    mempool_.erase(mempool_.begin(), mempool_.begin() + static_cast<std::ptrdiff_t>(tx_count));
  }

  clock_ += report.delays.total();
  advance_leader(report);
  return report;
}

}  // namespace vcache::consensus
