#pragma once

#include <cstddef>
#include <vector>

#include "rfsearch/rng.hpp"
#include "rfsearch/types.hpp"

namespace rfsearch {

struct EliteEntry {
    NodeId id;
    double score = 0.0;
    bool operator==(const EliteEntry&) const = default;
};

/// Capacity-bounded top-F store, ordered by score descending with ties kept
/// in insertion order.
class EliteSet {
public:
    explicit EliteSet(std::size_t capacity = 8);

    std::size_t capacity() const { return capacity_; }
    const std::vector<EliteEntry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    /// Inserts when there is room or `score` beats the current minimum, then
    /// evicts the lowest entry if over capacity. Returns true if inserted.
    bool update(NodeId id, double score);

    /// k distinct ids without replacement; the entry at rank r (1-based)
    /// weighs 1/r, renormalized after each draw. Throws EliteEmpty.
    std::vector<NodeId> sample(std::size_t k, Rng& rng) const;

    /// Copy of this set without `id` (ranks shift up).
    EliteSet without(NodeId id) const;

    static EliteSet from_entries(std::size_t capacity, std::vector<EliteEntry> entries);

    bool operator==(const EliteSet&) const = default;

private:
    std::size_t capacity_;
    std::vector<EliteEntry> entries_;
};

}  // namespace rfsearch
