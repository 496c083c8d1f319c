#pragma once

// Off-chain payment: 2/2 micropayment channels, hop-by-hop payment forwarding,
// consumer-pay-all, and a deterministic mock settlement ledger.

#include "r2p2/crypto.hpp"
#include "r2p2/path.hpp"
#include "r2p2/wire.hpp"

#include <iosfwd>
#include <map>

namespace r2p2::payment {

using ChannelId = std::uint64_t;
using KeyRing = std::map<NodeAddr, crypto::KeyPair>;

struct LedgerAccount
{
  NodeAddr owner;
  Tokens balance = 0;
};

enum class ChannelStatus { Open, Settled };

struct ChannelSigs
{
  crypto::Signature a{};
  crypto::Signature b{};

  bool operator==(const ChannelSigs&) const = default;
};

/// Off-chain channel state. party_a pays party_b.
struct ChannelState
{
  ChannelId id = 0;
  NodeAddr party_a;
  NodeAddr party_b;
  Tokens deposit_a = 0;
  Tokens deposit_b = 0;
  Tokens balance_a = 0;
  Tokens balance_b = 0;
  std::uint64_t sequence = 0;
  std::optional<ChannelSigs> sigs; ///< over (id, sequence, balance_a, balance_b)
  ChannelStatus status = ChannelStatus::Open;

  Tokens
  pool() const
  {
    return deposit_a + deposit_b;
  }

  bool operator==(const ChannelState&) const = default;
};

enum class ErrorKind {
  InsufficientFunds,
  Overdraw,
  BadSignature,
  StaleSequence,
  ChannelClosed,
  UnknownChannel,
  UnknownAccount,
  NoChannel,
  ConservationViolated,
};

std::string_view
to_string(ErrorKind kind);

class PaymentError : public std::runtime_error
{
public:
  PaymentError(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what)
    , kind_(kind)
  {
  }

  ErrorKind
  kind() const
  {
    return kind_;
  }

private:
  ErrorKind kind_;
};

/// Bytes both parties sign for a state.
Bytes
state_message(const ChannelState& ch);

bool
verify_state(const ChannelState& ch, const crypto::PublicKey& key_a, const crypto::PublicKey& key_b);

/// Moves `delta_to_b` from a to b, bumps the sequence and attaches both signatures.
/// Throws PaymentError on a closed channel, overdraw, or keys that do not belong to the parties.
ChannelState
channel_update(const ChannelState& ch, Tokens delta_to_b, const crypto::KeyPair& key_a,
               const crypto::KeyPair& key_b);

/// Payer-signed voucher authorising `amount` on `channel`.
Payment
make_voucher(ChannelId channel, Tokens amount, std::uint64_t sequence, const crypto::KeyPair& payer);

bool
verify_voucher(const Payment& p, const crypto::PublicKey& payer);

enum class LogOp { Account, Open, Update, Settle };

struct LogRecord
{
  std::uint64_t seq = 0;
  SimTime time{};
  LogOp op = LogOp::Account;
  ChannelState channel;         ///< Open/Update/Settle: state after the operation
  LedgerAccount account_a;      ///< Account: the new account; Open/Settle: party a's account after
  LedgerAccount account_b;      ///< Open/Settle: party b's account after
  crypto::PublicKey public_key{}; ///< Account only
};

/// In-process settlement ledger: accounts, channel registry, and the off-chain book of the
/// latest committed channel states. Every mutation appends a LogRecord.
class Ledger
{
public:
  void
  set_time(SimTime now)
  {
    now_ = now;
  }

  void
  create_account(const NodeAddr& owner, const crypto::PublicKey& key, Tokens balance);

  const LedgerAccount&
  account(const NodeAddr& owner) const;

  /// Debits both deposits; throws InsufficientFunds without side effects.
  ChannelState
  open_channel(const NodeAddr& a, const NodeAddr& b, Tokens deposit_a, Tokens deposit_b);

  /// Records an off-chain update. The state must extend the latest committed one by exactly
  /// one sequence step, conserve the pool and carry valid signatures from both parties.
  void
  commit(const ChannelState& next);

  /// Credits both parties from `state` and closes the channel.
  /// Rejects settled channels, states older than the latest committed one, and bad signatures.
  std::pair<LedgerAccount, LedgerAccount>
  settle(const ChannelState& state);

  const ChannelState&
  channel(ChannelId id) const;

  /// Lowest-id open channel in which `payer` pays `payee`.
  std::optional<ChannelId>
  find_channel(const NodeAddr& payer, const NodeAddr& payee) const;

  /// Issues the payer's next voucher on `id`.
  Payment
  issue_voucher(ChannelId id, Tokens amount, const crypto::KeyPair& payer);

  std::uint64_t
  last_accepted_voucher(ChannelId id) const;

  void
  accept_voucher(ChannelId id, std::uint64_t sequence);

  /// Sum of account balances plus the pools of open channels.
  Tokens
  total_supply() const;

  const std::map<NodeAddr, LedgerAccount>&
  accounts() const
  {
    return accounts_;
  }

  const std::map<ChannelId, ChannelState>&
  channels() const
  {
    return channels_;
  }

  const std::vector<LogRecord>&
  log() const
  {
    return log_;
  }

  std::size_t
  channels_opened() const
  {
    return channels_.size();
  }

  std::size_t
  settlements() const;

  /// Appends one NDJSON line per log record.
  void
  write_log(std::ostream& os) const;

private:
  LedgerAccount&
  mutable_account(const NodeAddr& owner);

  void
  append(LogOp op, const ChannelState& ch, const LedgerAccount& a, const LedgerAccount& b,
         const crypto::PublicKey& key = {});

  SimTime now_{};
  std::map<NodeAddr, LedgerAccount> accounts_;
  std::map<NodeAddr, crypto::PublicKey> keys_;
  std::map<ChannelId, ChannelState> channels_;
  std::map<ChannelId, std::uint64_t> vouchers_issued_;
  std::map<ChannelId, std::uint64_t> vouchers_accepted_;
  std::vector<LogRecord> log_;
  ChannelId next_id_ = 1;
};

struct HopPaymentPlan
{
  std::vector<NodeAddr> route;   ///< consumer -> producer
  std::vector<Tokens> per_hop_cost; ///< aligned to route edges
  Tokens total = 0;
};

HopPaymentPlan
plan_payment(const DiscoveredPath& path);

struct RelayOutcome
{
  enum class Kind {
    Forward,             ///< paid; `outgoing` must ride with the Interest to the next hop
    Final,               ///< paid; no next hop (producer)
    InsufficientPayment, ///< amount below cost; nothing mutated
    Rejected,            ///< unusable payment (bad voucher, missing channel, overdraw)
  };

  Kind kind = Kind::Rejected;
  std::optional<Payment> outgoing;
  std::string reason;
};

/// Relay side of hop-by-hop payment: verifies the voucher, keeps `my_cost`, commits the
/// incoming update and issues a voucher for the remainder on `next_channel`.
RelayOutcome
relay_process_payment(Ledger& ledger, const NodeAddr& self, const Payment& incoming, Tokens my_cost,
                      std::optional<ChannelId> next_channel, const KeyRing& keys);

/// One update per (payer, node) channel; all-or-nothing.
std::vector<ChannelState>
consumer_pay_all(Ledger& ledger, const NodeAddr& payer, std::span<const NodeAddr> nodes,
                 std::span<const Tokens> amounts, const KeyRing& keys);

struct AuditResult
{
  std::size_t records = 0;
  std::vector<std::string> violations;

  bool
  ok() const
  {
    return violations.empty();
  }
};

/// Replays an NDJSON transaction log and checks conservation, sequence monotonicity and
/// signatures.
AuditResult
audit_log(std::istream& is);

} // namespace r2p2::payment
