#include "r2p2/tables.hpp"
#include "support/oracle.hpp"

#include <doctest.h>

#include <numeric>

using namespace r2p2;

namespace {

NodeAddr
addr(std::uint8_t i)
{
  return NodeAddr(NodeAddr::Octets{0x02, 0, 0, 0, 0, i});
}

const Name v = Name::parse("/v");

} // namespace

TEST_CASE("pit insert and consume")
{
  Pit pit;
  auto a = addr(1), d = addr(4);
  CHECK(pit.insert(v, a, 11, ms(0)) == PitInsertResult::New);
  CHECK(pit.insert(v, a, 11, ms(1)) == PitInsertResult::DuplicateNonce);
  CHECK(pit.insert(v, d, 12, ms(2)) == PitInsertResult::Aggregated);
  auto downs = pit.consume(v, ms(3));
  REQUIRE(downs.size() == 2);
  CHECK(downs[0] == std::pair{a, Nonce{11}});
  CHECK(downs[1] == std::pair{d, Nonce{12}});
  CHECK(pit.consume(v, ms(3)).empty()); // entry removed: further Data is unsolicited

  pit.insert(v, a, 1, ms(0), ms(100));
  CHECK(pit.consume(v, ms(100)).empty());
}

TEST_CASE("pit matches a reference list model")
{
  struct Rec
  {
    NodeAddr addr;
    Nonce nonce;
    SimTime expiry;
  };
  std::map<Name, std::vector<Rec>> model;
  Pit pit;
  oracle::PacketGen gen(5);
  std::vector<Name> names{Name::parse("/a"), Name::parse("/b"), Name::parse("/a/b")};
  SimTime now{};
  for (int step = 0; step < 20000; ++step) {
    now += SimTime(gen.below(40'000));
    const auto& name = names[gen.below(names.size())];
    auto live = [&] (std::vector<Rec>& recs) {
      std::erase_if(recs, [&] (const Rec& r) { return r.expiry <= now; });
    };
    switch (gen.below(4)) {
    case 0:
    case 1: {
      auto who = addr(static_cast<std::uint8_t>(gen.below(5)));
      Nonce nonce = gen.below(3);
      SimTime lifetime = ms(static_cast<std::int64_t>(1 + gen.below(400)));
      auto& recs = model[name];
      live(recs);
      PitInsertResult expected;
      auto it = std::find_if(recs.begin(), recs.end(), [&] (const Rec& r) { return r.addr == who; });
      if (recs.empty()) {
        recs.push_back({who, nonce, now + lifetime});
        expected = PitInsertResult::New;
      }
      else if (it != recs.end() && it->nonce == nonce) {
        expected = PitInsertResult::DuplicateNonce;
      }
      else if (it != recs.end()) {
        *it = Rec{who, nonce, now + lifetime};
        expected = PitInsertResult::Aggregated;
      }
      else {
        recs.push_back({who, nonce, now + lifetime});
        expected = PitInsertResult::Aggregated;
      }
      REQUIRE(pit.insert(name, who, nonce, now, lifetime) == expected);
      break;
    }
    case 2: {
      auto& recs = model[name];
      live(recs);
      std::vector<std::pair<NodeAddr, Nonce>> expected;
      for (const auto& r : recs)
        expected.emplace_back(r.addr, r.nonce);
      model.erase(name);
      auto got = pit.consume(name, now);
      REQUIRE(got == expected);
      break;
    }
    default:
      pit.expire(now);
      for (auto& [n, recs] : model)
        live(recs);
      for (const auto& [n, entry] : pit.entries()) {
        REQUIRE_FALSE(entry.downstreams.empty());
        for (const auto& d : entry.downstreams)
          REQUIRE(d.expiry > now);
      }
    }
  }
}

TEST_CASE("price window minimum")
{
  PriceWindow w(8);
  CHECK_THROWS(w.min());
  for (Tokens p : {5, 2, 3})
    w.push(p, ms(0));
  CHECK(w.min() == 2);

  PriceWindow asc(8);
  for (Tokens p = 1; p <= 20; ++p)
    asc.push(p, ms(0));
  CHECK(asc.min() == 13);
  CHECK(asc.size() == 8);

  CHECK_THROWS_AS(PriceWindow(0), InvalidArgument);
}

TEST_CASE("price window agrees with a naive scan")
{
  oracle::PacketGen gen(9);
  for (std::size_t cap : {1u, 2u, 3u, 8u, 13u}) {
    PriceWindow w(cap);
    std::vector<std::uint64_t> all;
    for (int k = 0; k < 3000; ++k) {
      auto p = gen.below(k % 500 < 250 ? 50 : 5000);
      all.push_back(p);
      w.push(p, ms(k));
      REQUIRE(w.size() == std::min(all.size(), cap));
      REQUIRE(w.min() == oracle::window_min(all, cap));
    }
  }
}

TEST_CASE("fib min-cost hop")
{
  auto b = addr(2), c = addr(3), e = addr(5);
  Fib fib;
  fib.update(v, c, 15, ms(0));
  CHECK(fib.min_cost_hop(v) == std::pair{c, Tokens{15}});
  CHECK(fib.min_cost_hop(Name::parse("/v/seg#3")) == std::pair{c, Tokens{15}});
  CHECK_FALSE(fib.min_cost_hop(Name::parse("/w")).has_value());

  Fib f2;
  f2.update(v, b, 5, ms(0));
  f2.update(v, e, 7, ms(0));
  CHECK(f2.min_cost_hop(v)->first == b);
  f2.set_enabled(b, false);
  CHECK(f2.min_cost_hop(v) == std::pair{e, Tokens{7}});
  CHECK(f2.min_cost_hop(v, {e}) == std::nullopt);
  f2.set_enabled(e, false);
  CHECK_FALSE(f2.min_cost_hop(v).has_value());
  CHECK(f2.longest_prefix(Name::parse("/v/x")) == v);
}

TEST_CASE("fib ties go to the lowest address for every insertion order")
{
  std::vector<NodeAddr> hops{addr(9), addr(3), addr(7), addr(5)};
  std::sort(hops.begin(), hops.end());
  do {
    Fib fib;
    for (const auto& h : hops)
      fib.update(v, h, 4, ms(0));
    REQUIRE(fib.min_cost_hop(v)->first == addr(3));
  } while (std::next_permutation(hops.begin(), hops.end()));
}

TEST_CASE("fib longest prefix wins over a cheaper shorter prefix")
{
  Fib fib;
  fib.update(Name::parse("/v"), addr(1), 1, ms(0));
  fib.update(Name::parse("/v/hd"), addr(2), 9, ms(0));
  CHECK(fib.min_cost_hop(Name::parse("/v/hd/3"))->first == addr(2));
  CHECK(fib.min_cost_hop(Name::parse("/v/sd/3"))->first == addr(1));
}

TEST_CASE("keep-alive liveness")
{
  TableConfig cfg;
  NodeTables t(cfg);
  auto c = addr(3);
  t.fib.update(v, c, 12, ms(0));
  CHECK(t.keepalive_heard(c, ms(0)));
  CHECK(t.keepalive_sweep(ms(250)).empty());
  CHECK(t.is_alive(c));
  auto dead = t.keepalive_sweep(ms(310));
  CHECK(dead == std::vector<NodeAddr>{c});
  CHECK_FALSE(t.is_alive(c));
  CHECK_FALSE(t.fib.min_cost_hop(v).has_value());
  CHECK(t.keepalive_sweep(ms(400)).empty()); // only newly dead are reported
  CHECK(t.keepalive_heard(c, ms(500)));
  CHECK(t.fib.min_cost_hop(v)->first == c);
  CHECK_FALSE(t.keepalive_heard(c, ms(550)));
}

TEST_CASE("liveness follows a reference model")
{
  NodeTables t;
  const auto timeout = t.keepalive_config().timeout;
  std::map<NodeAddr, SimTime> heard;
  std::map<NodeAddr, bool> alive;
  oracle::PacketGen gen(31);
  for (std::uint8_t i = 0; i < 4; ++i)
    t.fib.update(v, addr(i), i, ms(0));
  SimTime now{};
  for (int step = 0; step < 5000; ++step) {
    now += SimTime(gen.below(120'000));
    if (gen.coin()) {
      auto n = addr(static_cast<std::uint8_t>(gen.below(4)));
      bool was_dead = !alive.count(n) || !alive[n];
      REQUIRE(t.keepalive_heard(n, now) == was_dead);
      heard[n] = now;
      alive[n] = true;
    }
    else {
      std::vector<NodeAddr> expected;
      for (auto& [n, last] : heard)
        if (alive[n] && now - last >= timeout) {
          alive[n] = false;
          expected.push_back(n);
        }
      REQUIRE(t.keepalive_sweep(now) == expected);
    }
    // min_cost_hop only ever returns a live neighbour; ties and prices follow the address
    auto best = t.fib.min_cost_hop(v);
    std::optional<NodeAddr> expect;
    for (std::uint8_t i = 0; i < 4 && !expect; ++i)
      if (!heard.count(addr(i)) || alive[addr(i)])
        expect = addr(i);
    REQUIRE((best ? std::optional(best->first) : std::nullopt) == expect);
  }
}

TEST_CASE("content store respects its byte budget")
{
  ContentStore cs(100);
  cs.insert(Name::parse("/a"), Bytes(40, 1));
  cs.insert(Name::parse("/b"), Bytes(40, 2));
  CHECK(cs.lookup(Name::parse("/a")).has_value()); // /a becomes most recent
  cs.insert(Name::parse("/c"), Bytes(40, 3));      // evicts /b
  CHECK_FALSE(cs.lookup(Name::parse("/b")).has_value());
  CHECK(cs.lookup(Name::parse("/a")) == Bytes(40, 1));
  cs.insert(Name::parse("/huge"), Bytes(101, 0));
  CHECK_FALSE(cs.lookup(Name::parse("/huge")).has_value());
  CHECK(cs.size() == 2);

  oracle::PacketGen gen(3);
  ContentStore r(1000);
  for (int k = 0; k < 20000; ++k) {
    auto name = Name(std::vector<std::string>{"n" + std::to_string(gen.below(60))});
    if (gen.coin())
      r.insert(name, Bytes(gen.below(400), 0));
    else
      r.lookup(name);
    std::size_t sum = 0;
    for (const auto& [n, b] : r.entries())
      sum += b.size();
    REQUIRE(sum == r.bytes_used());
    REQUIRE(r.bytes_used() <= r.capacity());
  }
}
