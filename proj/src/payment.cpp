#include "r2p2/payment.hpp"

#include <json.hpp>

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

namespace r2p2::payment {

namespace {

void
put_u64(Bytes& out, std::uint64_t v)
{
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::string_view
op_name(LogOp op)
{
  switch (op) {
  case LogOp::Account:
    return "account";
  case LogOp::Open:
    return "open";
  case LogOp::Update:
    return "update";
  case LogOp::Settle:
    return "settle";
  }
  return "?";
}

} // namespace

std::string_view
to_string(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::InsufficientFunds:
    return "InsufficientFunds";
  case ErrorKind::Overdraw:
    return "Overdraw";
  case ErrorKind::BadSignature:
    return "BadSignature";
  case ErrorKind::StaleSequence:
    return "StaleSequence";
  case ErrorKind::ChannelClosed:
    return "ChannelClosed";
  case ErrorKind::UnknownChannel:
    return "UnknownChannel";
  case ErrorKind::UnknownAccount:
    return "UnknownAccount";
  case ErrorKind::NoChannel:
    return "NoChannel";
  case ErrorKind::ConservationViolated:
    return "ConservationViolated";
  }
  return "Unknown";
}

Bytes
state_message(const ChannelState& ch)
{
  constexpr std::string_view label = "r2p2-channel";
  Bytes msg(label.begin(), label.end());
  put_u64(msg, ch.id);
  put_u64(msg, ch.sequence);
  put_u64(msg, ch.balance_a);
  put_u64(msg, ch.balance_b);
  return msg;
}

bool
verify_state(const ChannelState& ch, const crypto::PublicKey& key_a, const crypto::PublicKey& key_b)
{
  if (ch.balance_a + ch.balance_b != ch.pool())
    return false;
  if (!ch.sigs)
    return ch.sequence == 0 && ch.balance_a == ch.deposit_a && ch.balance_b == ch.deposit_b;
  auto msg = state_message(ch);
  return crypto::verify(key_a, msg, ch.sigs->a) && crypto::verify(key_b, msg, ch.sigs->b);
}

ChannelState
channel_update(const ChannelState& ch, Tokens delta_to_b, const crypto::KeyPair& key_a,
               const crypto::KeyPair& key_b)
{
  if (ch.status != ChannelStatus::Open)
    throw PaymentError(ErrorKind::ChannelClosed, "channel " + std::to_string(ch.id) + " is settled");
  if (key_a.owner != ch.party_a || key_b.owner != ch.party_b)
    throw PaymentError(ErrorKind::BadSignature, "keys do not belong to the channel parties");
  if (delta_to_b > ch.balance_a)
    throw PaymentError(ErrorKind::Overdraw, "channel " + std::to_string(ch.id) + ": " +
                                              std::to_string(delta_to_b) + "u exceeds payer balance " +
                                              std::to_string(ch.balance_a) + "u");
  ChannelState next = ch;
  next.balance_a -= delta_to_b;
  next.balance_b += delta_to_b;
  next.sequence += 1;
  auto msg = state_message(next);
  next.sigs = ChannelSigs{crypto::sign(key_a, msg), crypto::sign(key_b, msg)};
  return next;
}

namespace {

Bytes
voucher_message(ChannelId channel, Tokens amount, std::uint64_t sequence)
{
  constexpr std::string_view label = "r2p2-voucher";
  Bytes msg(label.begin(), label.end());
  put_u64(msg, channel);
  put_u64(msg, sequence);
  put_u64(msg, amount);
  return msg;
}

} // namespace

Payment
make_voucher(ChannelId channel, Tokens amount, std::uint64_t sequence, const crypto::KeyPair& payer)
{
  auto sig = crypto::sign(payer, voucher_message(channel, amount, sequence));
  return Payment{channel, amount, sequence, Bytes(sig.begin(), sig.end())};
}

bool
verify_voucher(const Payment& p, const crypto::PublicKey& payer)
{
  if (p.payer_sig.size() != crypto::Signature{}.size())
    return false;
  crypto::Signature sig{};
  std::copy(p.payer_sig.begin(), p.payer_sig.end(), sig.begin());
  return crypto::verify(payer, voucher_message(p.channel_id, p.amount, p.sequence), sig);
}

// ---- Ledger ----------------------------------------------------------------

void
Ledger::create_account(const NodeAddr& owner, const crypto::PublicKey& key, Tokens balance)
{
  if (accounts_.count(owner) != 0)
    throw InvalidArgument("account for " + owner.to_string() + " already exists");
  accounts_[owner] = LedgerAccount{owner, balance};
  keys_[owner] = key;
  append(LogOp::Account, ChannelState{}, accounts_[owner], LedgerAccount{}, key);
}

const LedgerAccount&
Ledger::account(const NodeAddr& owner) const
{
  auto it = accounts_.find(owner);
  if (it == accounts_.end())
    throw PaymentError(ErrorKind::UnknownAccount, owner.to_string());
  return it->second;
}

LedgerAccount&
Ledger::mutable_account(const NodeAddr& owner)
{
  auto it = accounts_.find(owner);
  if (it == accounts_.end())
    throw PaymentError(ErrorKind::UnknownAccount, owner.to_string());
  return it->second;
}

ChannelState
Ledger::open_channel(const NodeAddr& a, const NodeAddr& b, Tokens deposit_a, Tokens deposit_b)
{
  if (a == b)
    throw InvalidArgument("channel parties must differ");
  auto& acc_a = mutable_account(a);
  auto& acc_b = mutable_account(b);
  if (acc_a.balance < deposit_a || acc_b.balance < deposit_b)
    throw PaymentError(ErrorKind::InsufficientFunds, "deposit exceeds account balance");

  acc_a.balance -= deposit_a;
  acc_b.balance -= deposit_b;
  ChannelState ch;
  ch.id = next_id_++;
  ch.party_a = a;
  ch.party_b = b;
  ch.deposit_a = ch.balance_a = deposit_a;
  ch.deposit_b = ch.balance_b = deposit_b;
  channels_[ch.id] = ch;
  append(LogOp::Open, ch, acc_a, acc_b);
  return ch;
}

const ChannelState&
Ledger::channel(ChannelId id) const
{
  auto it = channels_.find(id);
  if (it == channels_.end())
    throw PaymentError(ErrorKind::UnknownChannel, "channel " + std::to_string(id));
  return it->second;
}

void
Ledger::commit(const ChannelState& next)
{
  auto it = channels_.find(next.id);
  if (it == channels_.end())
    throw PaymentError(ErrorKind::UnknownChannel, "channel " + std::to_string(next.id));
  const ChannelState& cur = it->second;
  if (cur.status != ChannelStatus::Open)
    throw PaymentError(ErrorKind::ChannelClosed, "channel " + std::to_string(next.id));
  if (next.sequence != cur.sequence + 1)
    throw PaymentError(ErrorKind::StaleSequence, "expected sequence " + std::to_string(cur.sequence + 1) +
                                                   ", got " + std::to_string(next.sequence));
  if (next.party_a != cur.party_a || next.party_b != cur.party_b || next.pool() != cur.pool() ||
      next.balance_a + next.balance_b != cur.pool())
    throw PaymentError(ErrorKind::ConservationViolated, "channel " + std::to_string(next.id));
  if (!next.sigs || !verify_state(next, keys_.at(cur.party_a), keys_.at(cur.party_b)))
    throw PaymentError(ErrorKind::BadSignature, "channel " + std::to_string(next.id));

  it->second = next;
  append(LogOp::Update, next, accounts_.at(next.party_a), accounts_.at(next.party_b));
}

std::pair<LedgerAccount, LedgerAccount>
Ledger::settle(const ChannelState& state)
{
  auto it = channels_.find(state.id);
  if (it == channels_.end())
    throw PaymentError(ErrorKind::UnknownChannel, "channel " + std::to_string(state.id));
  ChannelState& cur = it->second;
  if (cur.status == ChannelStatus::Settled)
    throw PaymentError(ErrorKind::ChannelClosed, "channel " + std::to_string(state.id) + " already settled");
  if (state.sequence < cur.sequence)
    throw PaymentError(ErrorKind::StaleSequence, "channel " + std::to_string(state.id) + ": sequence " +
                                                   std::to_string(state.sequence) + " older than " +
                                                   std::to_string(cur.sequence));
  if (state.party_a != cur.party_a || state.party_b != cur.party_b || state.pool() != cur.pool())
    throw PaymentError(ErrorKind::ConservationViolated, "channel " + std::to_string(state.id));
  if (!verify_state(state, keys_.at(cur.party_a), keys_.at(cur.party_b)))
    throw PaymentError(ErrorKind::BadSignature, "channel " + std::to_string(state.id));

  auto& acc_a = mutable_account(cur.party_a);
  auto& acc_b = mutable_account(cur.party_b);
  acc_a.balance += state.balance_a;
  acc_b.balance += state.balance_b;
  cur = state;
  cur.status = ChannelStatus::Settled;
  append(LogOp::Settle, cur, acc_a, acc_b);
  return {acc_a, acc_b};
}

std::optional<ChannelId>
Ledger::find_channel(const NodeAddr& payer, const NodeAddr& payee) const
{
  for (const auto& [id, ch] : channels_)
    if (ch.status == ChannelStatus::Open && ch.party_a == payer && ch.party_b == payee)
      return id;
  return std::nullopt;
}

Payment
Ledger::issue_voucher(ChannelId id, Tokens amount, const crypto::KeyPair& payer)
{
  const auto& ch = channel(id);
  if (ch.party_a != payer.owner)
    throw PaymentError(ErrorKind::BadSignature, "only party a issues vouchers on channel " + std::to_string(id));
  auto seq = ++vouchers_issued_[id];
  return make_voucher(id, amount, seq, payer);
}

std::uint64_t
Ledger::last_accepted_voucher(ChannelId id) const
{
  auto it = vouchers_accepted_.find(id);
  return it == vouchers_accepted_.end() ? 0 : it->second;
}

void
Ledger::accept_voucher(ChannelId id, std::uint64_t sequence)
{
  vouchers_accepted_[id] = sequence;
}

Tokens
Ledger::total_supply() const
{
  Tokens total = 0;
  for (const auto& [owner, acc] : accounts_)
    total += acc.balance;
  for (const auto& [id, ch] : channels_)
    if (ch.status == ChannelStatus::Open)
      total += ch.pool();
  return total;
}

std::size_t
Ledger::settlements() const
{
  return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(),
                                                [] (const auto& r) { return r.op == LogOp::Settle; }));
}

void
Ledger::append(LogOp op, const ChannelState& ch, const LedgerAccount& a, const LedgerAccount& b,
               const crypto::PublicKey& key)
{
  LogRecord r;
  r.seq = log_.size() + 1;
  r.time = now_;
  r.op = op;
  r.channel = ch;
  r.account_a = a;
  r.account_b = b;
  r.public_key = key;
  log_.push_back(std::move(r));
}

void
Ledger::write_log(std::ostream& os) const
{
  for (const auto& r : log_) {
    nlohmann::json j;
    j["seq"] = r.seq;
    j["t_us"] = r.time.count();
    j["op"] = op_name(r.op);
    if (r.op == LogOp::Account) {
      j["owner"] = r.account_a.owner.to_string();
      j["balance"] = r.account_a.balance;
      j["pub"] = to_hex(Bytes(r.public_key.begin(), r.public_key.end()));
    }
    else {
      const auto& ch = r.channel;
      j["channel"] = ch.id;
      j["a"] = ch.party_a.to_string();
      j["b"] = ch.party_b.to_string();
      j["sequence"] = ch.sequence;
      j["balance_a"] = ch.balance_a;
      j["balance_b"] = ch.balance_b;
      if (r.op == LogOp::Open) {
        j["deposit_a"] = ch.deposit_a;
        j["deposit_b"] = ch.deposit_b;
      }
      if (r.op != LogOp::Update) {
        j["account_a"] = r.account_a.balance;
        j["account_b"] = r.account_b.balance;
      }
      if (ch.sigs) {
        j["sig_a"] = to_hex(Bytes(ch.sigs->a.begin(), ch.sigs->a.end()));
        j["sig_b"] = to_hex(Bytes(ch.sigs->b.begin(), ch.sigs->b.end()));
      }
    }
    os << j.dump() << '\n';
  }
}

// ---- hop-by-hop ------------------------------------------------------------

HopPaymentPlan
plan_payment(const DiscoveredPath& path)
{
  HopPaymentPlan plan;
  plan.route = path.route;
  plan.per_hop_cost = path.hop_costs;
  plan.total = std::accumulate(plan.per_hop_cost.begin(), plan.per_hop_cost.end(), Tokens{0});
  return plan;
}

RelayOutcome
relay_process_payment(Ledger& ledger, const NodeAddr& self, const Payment& incoming, Tokens my_cost,
                      std::optional<ChannelId> next_channel, const KeyRing& keys)
{
  using Kind = RelayOutcome::Kind;
  auto reject = [] (std::string why) { return RelayOutcome{Kind::Rejected, std::nullopt, std::move(why)}; };

  auto& channels = ledger.channels();
  auto in_it = channels.find(incoming.channel_id);
  if (in_it == channels.end() || in_it->second.status != ChannelStatus::Open || in_it->second.party_b != self)
    return reject("no open incoming channel " + std::to_string(incoming.channel_id));
  const ChannelState& in_ch = in_it->second;

  auto payer_key = keys.find(in_ch.party_a);
  auto own_key = keys.find(self);
  if (payer_key == keys.end() || own_key == keys.end())
    return reject("missing key material");
  if (!verify_voucher(incoming, payer_key->second.public_key))
    return reject("voucher signature does not verify");
  if (incoming.sequence <= ledger.last_accepted_voucher(in_ch.id))
    return reject("replayed voucher " + std::to_string(incoming.sequence));

  if (incoming.amount < my_cost)
    return RelayOutcome{Kind::InsufficientPayment, std::nullopt,
                        std::to_string(incoming.amount) + "u < cost " + std::to_string(my_cost) + "u"};
  if (incoming.amount > in_ch.balance_a)
    return reject("payer channel balance exhausted");

  Tokens remainder = incoming.amount - my_cost;
  if (next_channel) {
    auto out_it = channels.find(*next_channel);
    if (out_it == channels.end() || out_it->second.status != ChannelStatus::Open ||
        out_it->second.party_a != self)
      return reject("no open channel with next hop");
    if (out_it->second.balance_a < remainder)
      return reject("own channel balance cannot cover forwarded payment");
  }

  ledger.commit(channel_update(in_ch, incoming.amount, payer_key->second, own_key->second));
  ledger.accept_voucher(incoming.channel_id, incoming.sequence);

  if (!next_channel)
    return RelayOutcome{Kind::Final, std::nullopt, {}};
  return RelayOutcome{Kind::Forward, ledger.issue_voucher(*next_channel, remainder, own_key->second), {}};
}

std::vector<ChannelState>
consumer_pay_all(Ledger& ledger, const NodeAddr& payer, std::span<const NodeAddr> nodes,
                 std::span<const Tokens> amounts, const KeyRing& keys)
{
  if (nodes.size() != amounts.size())
    throw InvalidArgument("one amount per paid node");

  std::vector<ChannelId> ids;
  std::map<ChannelId, Tokens> owed;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto id = ledger.find_channel(payer, nodes[i]);
    if (!id)
      throw PaymentError(ErrorKind::NoChannel, payer.to_string() + " -> " + nodes[i].to_string());
    if (keys.count(nodes[i]) == 0)
      throw PaymentError(ErrorKind::BadSignature, "no key for " + nodes[i].to_string());
    owed[*id] += amounts[i];
    ids.push_back(*id);
  }
  for (const auto& [id, total] : owed)
    if (ledger.channel(id).balance_a < total)
      throw PaymentError(ErrorKind::Overdraw, "channel " + std::to_string(id));

  const auto& payer_key = keys.at(payer);
  std::vector<ChannelState> updates;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto next = channel_update(ledger.channel(ids[i]), amounts[i], payer_key, keys.at(nodes[i]));
    ledger.commit(next);
    updates.push_back(std::move(next));
  }
  return updates;
}

// ---- audit -----------------------------------------------------------------

AuditResult
audit_log(std::istream& is)
{
  struct Chan
  {
    std::string a, b;
    Tokens pool = 0;
    Tokens balance_a = 0, balance_b = 0;
    std::uint64_t sequence = 0;
    bool open = true;
  };

  AuditResult result;
  std::map<std::string, Tokens> accounts;
  std::map<std::string, crypto::PublicKey> keys;
  std::map<std::uint64_t, Chan> channels;
  Tokens supply = 0;
  bool genesis_done = false;
  std::uint64_t expected_seq = 1;

  auto violation = [&] (std::uint64_t seq, const std::string& what) {
    result.violations.push_back("record " + std::to_string(seq) + ": " + what);
  };
  auto current_supply = [&] {
    Tokens t = 0;
    for (const auto& [k, v] : accounts)
      t += v;
    for (const auto& [k, c] : channels)
      if (c.open)
        t += c.pool;
    return t;
  };

  std::string line;
  while (std::getline(is, line)) {
    if (line.empty())
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception& e) {
      result.violations.push_back("line " + std::to_string(result.records + 1) + ": unparsable: " + e.what());
      ++result.records;
      continue;
    }
    ++result.records;
    try {
      auto seq = j.at("seq").get<std::uint64_t>();
      if (seq != expected_seq)
        violation(seq, "out-of-order record, expected " + std::to_string(expected_seq));
      expected_seq = seq + 1;
      auto op = j.at("op").get<std::string>();

      if (op == "account") {
        if (genesis_done)
          violation(seq, "account created after the first channel operation mints tokens");
        auto owner = j.at("owner").get<std::string>();
        accounts[owner] = j.at("balance").get<Tokens>();
        auto pub = from_hex(j.at("pub").get<std::string>());
        if (pub.size() == 32)
          std::copy(pub.begin(), pub.end(), keys[owner].begin());
        supply += accounts[owner];
        continue;
      }
      genesis_done = true;
      auto id = j.at("channel").get<std::uint64_t>();
      auto bal_a = j.at("balance_a").get<Tokens>();
      auto bal_b = j.at("balance_b").get<Tokens>();
      auto cseq = j.at("sequence").get<std::uint64_t>();

      if (op == "open") {
        Chan c;
        c.a = j.at("a").get<std::string>();
        c.b = j.at("b").get<std::string>();
        auto da = j.at("deposit_a").get<Tokens>();
        auto db = j.at("deposit_b").get<Tokens>();
        if (accounts[c.a] < da || accounts[c.b] < db)
          violation(seq, "deposit exceeds account balance");
        accounts[c.a] -= std::min(accounts[c.a], da);
        accounts[c.b] -= std::min(accounts[c.b], db);
        c.pool = da + db;
        c.balance_a = da;
        c.balance_b = db;
        if (bal_a != da || bal_b != db || cseq != 0)
          violation(seq, "channel does not open at its deposits");
        channels[id] = c;
      }
      else if (op == "update" || op == "settle") {
        auto it = channels.find(id);
        if (it == channels.end()) {
          violation(seq, "unknown channel " + std::to_string(id));
          continue;
        }
        Chan& c = it->second;
        if (!c.open)
          violation(seq, "operation on settled channel " + std::to_string(id));
        if (bal_a + bal_b != c.pool)
          violation(seq, "channel " + std::to_string(id) + " balances do not sum to its pool");
        if (op == "update" && cseq != c.sequence + 1)
          violation(seq, "update sequence does not advance by one");
        if (op == "settle" && cseq < c.sequence)
          violation(seq, "settlement of a stale sequence");
        if (cseq > 0) {
          ChannelState st;
          st.id = id;
          st.sequence = cseq;
          st.balance_a = bal_a;
          st.balance_b = bal_b;
          auto sa = from_hex(j.value("sig_a", std::string()));
          auto sb = from_hex(j.value("sig_b", std::string()));
          bool ok = sa.size() == 64 && sb.size() == 64;
          if (ok) {
            crypto::Signature siga{}, sigb{};
            std::copy(sa.begin(), sa.end(), siga.begin());
            std::copy(sb.begin(), sb.end(), sigb.begin());
            auto msg = state_message(st);
            ok = crypto::verify(keys[c.a], msg, siga) && crypto::verify(keys[c.b], msg, sigb);
          }
          if (!ok)
            violation(seq, "channel " + std::to_string(id) + " state signatures do not verify");
        }
        c.balance_a = bal_a;
        c.balance_b = bal_b;
        c.sequence = cseq;
        if (op == "settle") {
          accounts[c.a] += bal_a;
          accounts[c.b] += bal_b;
          c.open = false;
        }
      }
      else {
        violation(seq, "unknown op '" + op + "'");
      }
      if (current_supply() != supply)
        violation(seq, "global token supply changed");
    }
    catch (const std::exception& e) {
      result.violations.push_back("line " + std::to_string(result.records) + ": " + e.what());
    }
  }
  return result;
}

} // namespace r2p2::payment
