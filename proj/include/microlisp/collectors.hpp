#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace microlisp {

// A run of free slots. Extents are disjoint, sorted by address, and never
// adjacent; adjacency is always coalesced.
struct Extent {
    uint32_t address = 0;
    uint32_t size = 0;

    friend bool operator==(const Extent&, const Extent&) = default;
};

struct FreeList {
    std::vector<Extent> extents;

    uint64_t total_slots() const {
        uint64_t total = 0;
        for (const Extent& e : extents) total += e.size;
        return total;
    }
};

// First-fit: returns the lowest address of an extent with size >= requested,
// shrinking or removing that extent; nullopt when nothing fits.
std::optional<uint32_t> free_list_allocate(FreeList& free_list, uint32_t size);

// Surfaced to the metrics layer after every collection.
struct CollectionStats {
    uint64_t objects_visited = 0;      // marked or copied objects
    uint64_t sweep_slots_visited = 0;  // slots traversed by full-arena passes
    uint64_t bytes_reclaimed = 0;
    uint64_t pause_ns = 0;
    uint64_t live_slots = 0;
};

}  // namespace microlisp
