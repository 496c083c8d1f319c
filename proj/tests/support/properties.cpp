#include "support/properties.hpp"

#include "r2p2/payment.hpp"
#include "r2p2/simnet.hpp"
#include "support/oracle.hpp"

#include <sstream>

namespace props {

using namespace r2p2;

CodecSweep
codec_sweep(std::uint64_t seed, std::size_t packets, std::size_t fuzz_inputs)
{
  CodecSweep s;
  oracle::PacketGen gen(seed);
  for (std::size_t k = 0; k < packets; ++k) {
    auto p = gen.packet();
    auto bytes = encode(p);
    ++s.packets;
    if (bytes != oracle::reference_encode(p))
      ++s.reference_mismatches;
    auto back = decode(bytes);
    if (back != p)
      ++s.roundtrip_failures;
    if (encode(back) != bytes)
      ++s.canonical_failures;
  }

  for (std::size_t k = 0; k < fuzz_inputs; ++k) {
    Bytes b;
    if (k % 2 == 0) {
      b = gen.bytes(96);
      if (!b.empty() && gen.coin())
        b[0] = std::array<std::uint8_t, 4>{0x03, 0x05, 0x06, 0x0a}[gen.below(4)];
    }
    else {
      b = encode(gen.packet());
      auto at = gen.below(b.size());
      switch (gen.below(4)) {
      case 0:
        b[at] ^= static_cast<std::uint8_t>(1 + gen.below(255));
        break;
      case 1:
        b.resize(at);
        break;
      case 2:
        b.insert(b.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(gen.below(256)));
        break;
      default:
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(at));
      }
    }
    ++s.fuzz_inputs;
    try {
      auto p = decode(b);
      ++s.fuzz_accepted;
      if (encode(p) != b)
        ++s.fuzz_noncanonical;
    }
    catch (const DecodeError&) {
    }
    catch (...) {
      ++s.fuzz_crashes;
    }
  }
  return s;
}

PofFixture
honest_chunk(std::uint32_t packets, std::uint32_t packet_size)
{
  PofFixture f;
  std::vector<NodeAddr> path{NodeAddr::parse("02-00-00-00-00-20"), NodeAddr::parse("02-00-00-00-00-11"),
                             NodeAddr::parse("02-00-00-00-00-12")};
  f.path = path;
  f.chunk.descriptor = pof::ChunkDescriptor{Name::parse("/clip/0"), packets, packet_size};
  for (std::uint32_t k = 0; k < packets * packet_size; ++k)
    f.chunk.payload.push_back(static_cast<std::uint8_t>((k * 131 + 7) & 0xff));
  for (const auto& a : path) {
    auto key = crypto::derive_keypair(99, a);
    f.directory[a] = key.public_key;
    f.chunk = pof::sign_chunk(f.chunk, key);
  }
  return f;
}

MutationSweep
pof_mutation_sweep(unsigned masks_per_byte)
{
  MutationSweep s;
  auto f = honest_chunk();
  s.honest_valid = pof::verify_chain(f.chunk, f.path, f.directory).valid();

  std::vector<std::uint8_t> masks;
  for (unsigned m = 0; m < masks_per_byte; ++m)
    masks.push_back(static_cast<std::uint8_t>(m < 8 ? 1u << m : (m * 37 + 3) | 1u));

  auto check = [&] (const pof::SignedChunk& mutated) {
    ++s.mutations;
    if (pof::verify_chain(mutated, f.path, f.directory).valid())
      ++s.false_valids;
  };

  for (std::size_t i = 0; i < f.chunk.payload.size(); ++i)
    for (auto m : masks) {
      auto c = f.chunk;
      c.payload[i] ^= m;
      check(c);
      ++s.payload_mutations;
    }

  auto mutate_bytes = [&] (auto get) {
    auto probe = f.chunk;
    std::size_t n = get(probe).size();
    for (std::size_t i = 0; i < n; ++i)
      for (auto m : masks) {
        auto c = f.chunk;
        get(c)[i] ^= m;
        check(c);
        ++s.chain_mutations;
      }
  };
  mutate_bytes([] (pof::SignedChunk& c) -> crypto::Digest& { return *c.digest; });
  for (std::size_t h = 0; h < f.chunk.chain.size(); ++h) {
    for (std::size_t i = 0; i < NodeAddr::size; ++i)
      for (auto m : masks) {
        auto c = f.chunk;
        auto o = c.chain[h].signer.octets();
        o[i] ^= m;
        c.chain[h].signer = NodeAddr(o);
        check(c);
        ++s.chain_mutations;
      }
    mutate_bytes([h] (pof::SignedChunk& c) -> crypto::PublicKey& { return c.chain[h].signer_pub; });
    mutate_bytes([h] (pof::SignedChunk& c) -> crypto::Signature& { return c.chain[h].sig; });
  }
  return s;
}

ConservationSweep
conservation_sweep(std::uint64_t seed, std::size_t ops)
{
  ConservationSweep s;
  std::mt19937_64 rng(seed);
  auto below = [&] (std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); };

  payment::Ledger ledger;
  std::vector<crypto::KeyPair> keys;
  for (std::uint8_t i = 1; i <= 8; ++i) {
    auto kp = crypto::derive_keypair(seed, NodeAddr(NodeAddr::Octets{0x02, 0, 0, 0, 1, i}));
    ledger.create_account(kp.owner, kp.public_key, 5000 + 1000 * i);
    keys.push_back(kp);
  }
  auto key_of = [&] (const NodeAddr& a) -> const crypto::KeyPair& {
    return *std::find_if(keys.begin(), keys.end(), [&] (const auto& k) { return k.owner == a; });
  };
  const Tokens supply = ledger.total_supply();
  std::map<payment::ChannelId, std::vector<payment::ChannelState>> history;

  auto open_ids = [&] {
    std::vector<payment::ChannelId> ids;
    for (const auto& [id, ch] : ledger.channels())
      if (ch.status == payment::ChannelStatus::Open)
        ids.push_back(id);
    return ids;
  };
  auto expect_rejected = [&] (auto&& attempt) {
    ++s.stale_replays;
    try {
      attempt();
      ++s.stale_accepted;
    }
    catch (const payment::PaymentError&) {
    }
  };

  for (std::size_t step = 0; step < ops; ++step) {
    ++s.ops;
    auto roll = below(100);
    auto ids = open_ids();
    try {
      if (roll < 25 || ids.empty()) {
        auto a = keys[below(keys.size())].owner;
        auto b = keys[below(keys.size())].owner;
        if (a == b)
          continue;
        // occasionally ask for more than the account holds
        Tokens da = below(below(10) == 0 ? 50000 : 2000);
        Tokens db = below(4) == 0 ? below(500) : 0;
        auto ch = ledger.open_channel(a, b, da, db);
        history[ch.id].push_back(ch);
        ++s.opens;
      }
      else if (roll < 85) {
        auto id = ids[below(ids.size())];
        const auto cur = ledger.channel(id);
        Tokens delta = below(cur.balance_a + (below(10) == 0 ? 100 : 1));
        auto next = payment::channel_update(cur, delta, key_of(cur.party_a), key_of(cur.party_b));
        ledger.commit(next);
        history[id].push_back(next);
        ++s.updates;
        if (below(20) == 0)
          expect_rejected([&] { ledger.commit(next); }); // same update twice
      }
      else {
        auto id = ids[below(ids.size())];
        const auto& states = history[id];
        if (states.size() > 1 && below(2) == 0) {
          const auto& old = states[below(states.size() - 1)];
          expect_rejected([&] { ledger.settle(old); });
        }
        ledger.settle(states.back());
        ++s.settles;
        expect_rejected([&] { ledger.settle(states.back()); });
      }
    }
    catch (const payment::PaymentError&) {
      ++s.refused;
    }

    if (ledger.total_supply() != supply)
      ++s.drift_events;
    for (const auto& [id, ch] : ledger.channels())
      if (ch.balance_a + ch.balance_b != ch.pool())
        ++s.channel_violations;
  }

  for (auto id : open_ids())
    ledger.settle(history[id].back());
  if (ledger.total_supply() != supply)
    ++s.drift_events;

  std::stringstream log;
  ledger.write_log(log);
  s.log_audit_ok = payment::audit_log(log).ok();
  return s;
}

RunOutput
run_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed)
{
  Simulator sim(load_scenario(path), SimOptions{seed});
  sim.run();
  RunOutput out;
  std::ostringstream trace, ledger;
  sim.write_trace(trace);
  sim.ledger().write_log(ledger);
  out.trace = trace.str();
  out.report = sim.report().dump(2);
  out.ledger = ledger.str();
  return out;
}

} // namespace props
