#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "riskprop/graph.hpp"
#include "riskprop/rng.hpp"
#include "riskprop/synthgen.hpp"

namespace riskprop::pairs {

using graph::HeteroGraph;
using graph::NodeId;
using synth::DefaultEvent;

enum class Label : std::uint8_t { white = 0, black = 1 };

struct PropagationPair {
  NodeId source = 0;
  NodeId target = 0;
  Label label = Label::white;
  std::size_t hop_distance = 0;
  friend auto operator<=>(const PropagationPair&, const PropagationPair&) = default;
};

/// Steps 1-3 of pair construction, before balancing: every defaulted issuer
/// is a source; every other issuer within `max_hops` over the union of edge
/// types is a target; the pair is black iff the target's default time is
/// strictly later than the source's. Sorted by (source, target).
std::vector<PropagationPair> enumerate_pairs(const HeteroGraph& g, std::span<const DefaultEvent> events,
                                             std::size_t max_hops);

/// Step 4: keeps every black pair and a uniform sample of min(#white, #black)
/// white pairs. Output stays sorted by (source, target).
std::vector<PropagationPair> balance_pairs(std::span<const PropagationPair> pairs, Rng& rng);

/// enumerate_pairs followed by balance_pairs. Throws when no pair is black.
std::vector<PropagationPair> build_pairs(const HeteroGraph& g, std::span<const DefaultEvent> events,
                                         std::size_t max_hops, Rng& rng);

struct PairDatasetSplit {
  std::vector<PropagationPair> train;
  std::vector<PropagationPair> test;
  std::uint64_t split_seed = 0;
};

/// Stratified shuffle split: round(train_frac * class size) of each class go
/// to train. Requires at least 5 pairs per class.
PairDatasetSplit split(std::span<const PropagationPair> pairs, double train_frac, std::uint64_t seed);

void save_pairs(const PairDatasetSplit& split, const std::filesystem::path& path);
PairDatasetSplit load_pairs(const std::filesystem::path& path);

}  // namespace riskprop::pairs
