#pragma once

#include "r2p2/types.hpp"

namespace r2p2 {

/// A route learned through discovery, as recorded by the consumer.
struct DiscoveredPath
{
  Name prefix;
  std::vector<NodeAddr> route;  ///< consumer first, producer last
  Tokens price = 0;             ///< cumulative price carried by the discovery Data
  std::vector<Tokens> hop_costs; ///< cost of each edge route[i] -> route[i+1], i.e. of route[i+1]
  SimTime last_seen{};
  bool distrusted = false;

  const NodeAddr&
  producer() const
  {
    return route.back();
  }
};

} // namespace r2p2
