#include "rfsearch/elite_set.hpp"

#include <algorithm>

#include "rfsearch/errors.hpp"

namespace rfsearch {

EliteSet::EliteSet(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw Error("elite capacity must be positive");
}

bool EliteSet::update(NodeId id, double score) {
    if (entries_.size() >= capacity_ && score <= entries_.back().score) return false;
    // Insert after every entry with an equal or higher score so ties keep
    // insertion order.
    auto pos = std::find_if(entries_.begin(), entries_.end(), [&](const EliteEntry& e) { return e.score < score; });
    entries_.insert(pos, EliteEntry{id, score});
    if (entries_.size() > capacity_) entries_.pop_back();
    return true;
}

std::vector<NodeId> EliteSet::sample(std::size_t k, Rng& rng) const {
    if (entries_.empty()) throw EliteEmpty("cannot sample from an empty elite set");
    k = std::min(k, entries_.size());
    std::vector<double> weights(entries_.size());
    for (std::size_t r = 0; r < entries_.size(); ++r) weights[r] = 1.0 / static_cast<double>(r + 1);

    std::vector<NodeId> picked;
    picked.reserve(k);
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = 0.0;
        for (double w : weights) total += w;
        const double u = rng.uniform() * total;
        double acc = 0.0;
        std::size_t chosen = weights.size();
        for (std::size_t r = 0; r < weights.size(); ++r) {
            if (weights[r] == 0.0) continue;
            acc += weights[r];
            chosen = r;
            if (u < acc) break;
        }
        picked.push_back(entries_[chosen].id);
        weights[chosen] = 0.0;
    }
    return picked;
}

EliteSet EliteSet::without(NodeId id) const {
    EliteSet copy = *this;
    std::erase_if(copy.entries_, [&](const EliteEntry& e) { return e.id == id; });
    return copy;
}

EliteSet EliteSet::from_entries(std::size_t capacity, std::vector<EliteEntry> entries) {
    EliteSet set(capacity);
    if (entries.size() > capacity) throw Error("elite entries exceed capacity");
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (entries[i].score > entries[i - 1].score) throw Error("elite entries not sorted by score");
    set.entries_ = std::move(entries);
    return set;
}

}  // namespace rfsearch
