#include <algorithm>
#include <stdexcept>
#include <vector>

#include "microlisp/heap.hpp"

namespace microlisp {

// All slot-level work lives here; the public collect_* functions and
// Heap::collect_now route through it.
struct GcInternal {
    using Slot = Heap::Slot;

    static bool has_refs(PayloadKind kind) {
        return kind == PayloadKind::Cons || kind == PayloadKind::Lambda;
    }

    static void set_color(Slot& s, Color color) {
        s.meta = (s.meta & ~(0x3u << 27)) | (static_cast<uint32_t>(color) << 27);
    }

    // Full pass over object headers in address order, old free extents
    // skipped. fn(index, slot) is invoked per object.
    template <typename Fn>
    static void walk_objects(Heap& h, Fn&& fn) {
        if (h.config_.collector == CollectorKind::Cheney) {
            uint32_t address = h.active_base_;
            while (address < h.alloc_cursor_) {
                Slot& s = h.slots_[address];
                uint32_t size = Heap::meta_size(s.meta);
                fn(address, s);
                address += size;
            }
            return;
        }
        uint32_t address = 0;
        size_t next_free = 0;
        while (address < h.arena_slots_) {
            if (next_free < h.free_.extents.size() &&
                h.free_.extents[next_free].address == address) {
                address += h.free_.extents[next_free].size;
                ++next_free;
                continue;
            }
            Slot& s = h.slots_[address];
            fn(address, s);
            address += Heap::meta_size(s.meta);
        }
    }

    // Tri-color trace: every color reset to White, then a gray worklist
    // seeded from the root registry; processing an object grays its referents
    // and blackens it until the gray set is empty. Returns objects blackened.
    static uint64_t mark(Heap& h) {
        walk_objects(h, [](uint32_t, Slot& s) { set_color(s, Color::White); });

        std::vector<uint32_t> gray;
        auto shade = [&](HeapAddress ref) {
            if (ref.is_nil()) return;
            Slot& s = h.slots_[ref.index];
            if (Heap::meta_color(s.meta) == Color::White) {
                set_color(s, Color::Gray);
                gray.push_back(ref.index);
            }
        };
        for (HeapAddress root : h.roots_) shade(root);

        uint64_t blackened = 0;
        while (!gray.empty()) {
            uint32_t index = gray.back();
            gray.pop_back();
            Slot& s = h.slots_[index];
            if (has_refs(Heap::meta_kind(s.meta))) {
                shade(HeapAddress{s.word0});
                shade(HeapAddress{s.word1});
            }
            set_color(s, Color::Black);
            ++blackened;
        }
        return blackened;
    }

    // When the gray set is empty no black object may reference a white one.
    static void check_tricolor(Heap& h) {
        walk_objects(h, [&](uint32_t, Slot& s) {
            if (Heap::meta_color(s.meta) != Color::Black) return;
            if (!has_refs(Heap::meta_kind(s.meta))) return;
            for (uint32_t word : {s.word0, s.word1}) {
                HeapAddress ref{word};
                if (ref.is_nil()) continue;
                if (Heap::meta_color(h.slots_[ref.index].meta) == Color::White) {
                    throw std::logic_error("tri-color invariant violated: black -> white");
                }
            }
        });
    }

    static CollectionStats mark_sweep(Heap& h) {
        CollectionStats out;
        out.objects_visited = mark(h);
        if (h.config_.validate_after_gc) check_tricolor(h);

        // Linear sweep reclaims every White object; adjacent free extents are
        // coalesced as they are produced. No object moves.
        std::vector<Extent> fresh;
        auto add_free = [&](uint32_t address, uint32_t size) {
            if (!fresh.empty() &&
                fresh.back().address + fresh.back().size == address) {
                fresh.back().size += size;
            } else {
                fresh.push_back(Extent{address, size});
            }
        };

        uint64_t visits = 0;
        uint64_t freed = 0;
        uint64_t live = 0;
        uint32_t address = 0;
        size_t next_free = 0;
        while (address < h.arena_slots_) {
            if (next_free < h.free_.extents.size() &&
                h.free_.extents[next_free].address == address) {
                uint32_t size = h.free_.extents[next_free].size;
                add_free(address, size);
                visits += size;
                address += size;
                ++next_free;
                continue;
            }
            Slot& s = h.slots_[address];
            uint32_t size = Heap::meta_size(s.meta);
            if (Heap::meta_color(s.meta) == Color::Black) {
                live += size;
            } else {
                add_free(address, size);
                freed += size;
            }
            visits += size;
            address += size;
        }
        h.free_.extents = std::move(fresh);

        out.sweep_slots_visited = visits;
        out.bytes_reclaimed = freed * Heap::kSlotBytes;
        out.live_slots = live;
        return out;
    }

    static CollectionStats cheney(Heap& h) {
        CollectionStats out;
        const uint32_t from_base = h.active_base_;
        const uint32_t to_base = from_base == 0 ? h.semispace_slots_ : 0;
        const uint32_t previously_used = h.alloc_cursor_ - from_base;
        uint32_t alloc = to_base;
        uint32_t scan = to_base;

        // Copy once per object; the forwarding address lives in the from-space
        // object's first payload word, flagged in its header.
        auto evacuate = [&](HeapAddress ref) -> HeapAddress {
            if (ref.is_nil()) return ref;
            Slot& old = h.slots_[ref.index];
            if (Heap::meta_forwarded(old.meta)) return HeapAddress{old.word0};
            uint32_t size = Heap::meta_size(old.meta);
            std::copy_n(h.slots_.begin() + ref.index, size, h.slots_.begin() + alloc);
            uint32_t target = alloc;
            alloc += size;
            old.meta |= 1u << 29;
            old.word0 = target;
            ++out.objects_visited;
            return HeapAddress{target};
        };

        for (HeapAddress& root : h.roots_) root = evacuate(root);
        while (scan < alloc) {
            Slot& s = h.slots_[scan];
            if (has_refs(Heap::meta_kind(s.meta))) {
                s.word0 = evacuate(HeapAddress{s.word0}).index;
                s.word1 = evacuate(HeapAddress{s.word1}).index;
            }
            scan += Heap::meta_size(s.meta);
        }

        h.active_base_ = to_base;
        h.alloc_cursor_ = alloc;
        out.live_slots = alloc - to_base;
        out.bytes_reclaimed =
            static_cast<uint64_t>(previously_used - out.live_slots) * Heap::kSlotBytes;

        if (h.config_.validate_after_gc) {
            // Scrub the evacuated space so stale addresses fail loudly.
            std::fill_n(h.slots_.begin() + from_base, h.semispace_slots_, Slot{});
        }
        return out;
    }

    static CollectionStats lisp2(Heap& h) {
        CollectionStats out;
        out.objects_visited = mark(h);
        if (h.config_.validate_after_gc) check_tricolor(h);

        // Pass 1: walk the arena in address order and assign each live object
        // its post-slide address in the reserved header word.
        std::vector<uint32_t> live_headers;
        uint64_t pass_slots = 0;
        uint64_t freed = 0;
        uint32_t cursor = 0;
        {
            uint32_t address = 0;
            size_t next_free = 0;
            while (address < h.arena_slots_) {
                if (next_free < h.free_.extents.size() &&
                    h.free_.extents[next_free].address == address) {
                    uint32_t size = h.free_.extents[next_free].size;
                    pass_slots += size;
                    address += size;
                    ++next_free;
                    continue;
                }
                Slot& s = h.slots_[address];
                uint32_t size = Heap::meta_size(s.meta);
                if (Heap::meta_color(s.meta) == Color::Black) {
                    s.scratch = cursor;
                    cursor += size;
                    live_headers.push_back(address);
                } else {
                    freed += size;
                }
                pass_slots += size;
                address += size;
            }
        }

        // Pass 2: rewrite every reference field in live objects and every
        // root slot to the target's new address.
        auto relocated = [&](uint32_t word) -> uint32_t {
            HeapAddress ref{word};
            return ref.is_nil() ? word : h.slots_[ref.index].scratch;
        };
        for (uint32_t index : live_headers) {
            Slot& s = h.slots_[index];
            if (has_refs(Heap::meta_kind(s.meta))) {
                s.word0 = relocated(s.word0);
                s.word1 = relocated(s.word1);
            }
        }
        for (HeapAddress& root : h.roots_) {
            if (!root.is_nil()) root = HeapAddress{h.slots_[root.index].scratch};
        }

        // Pass 3: slide each live object down in ascending order; relative
        // order is preserved and targets never overlap pending sources.
        for (uint32_t index : live_headers) {
            Slot& s = h.slots_[index];
            uint32_t target = s.scratch;
            uint32_t size = Heap::meta_size(s.meta);
            if (target != index) {
                std::copy_n(h.slots_.begin() + index, size, h.slots_.begin() + target);
            }
        }

        h.free_.extents.clear();
        if (cursor < h.arena_slots_) {
            h.free_.extents.push_back(Extent{cursor, h.arena_slots_ - cursor});
        }

        out.sweep_slots_visited = pass_slots;
        out.bytes_reclaimed = freed * Heap::kSlotBytes;
        out.live_slots = cursor;
        return out;
    }
};

CollectionStats detail_collect_mark_sweep(Heap& heap) { return GcInternal::mark_sweep(heap); }
CollectionStats detail_collect_cheney(Heap& heap) { return GcInternal::cheney(heap); }
CollectionStats detail_collect_lisp2(Heap& heap) { return GcInternal::lisp2(heap); }

namespace {

CollectionStats collect_with(Heap& heap, CollectorKind expected) {
    if (heap.config().collector != expected) {
        throw std::invalid_argument(std::string("heap is configured for ") +
                                    to_string(heap.config().collector) + ", not " +
                                    to_string(expected));
    }
    heap.collect_now();
    return heap.last_collection();
}

}  // namespace

CollectionStats collect_mark_sweep(Heap& heap) {
    return collect_with(heap, CollectorKind::MarkSweep);
}
CollectionStats collect_cheney(Heap& heap) { return collect_with(heap, CollectorKind::Cheney); }
CollectionStats collect_lisp2(Heap& heap) { return collect_with(heap, CollectorKind::Lisp2); }

std::set<HeapAddress> reachable_set_oracle(const Heap& heap) {
    std::set<HeapAddress> reached;
    std::vector<HeapAddress> work;
    auto visit = [&](HeapAddress address) {
        if (address.is_nil()) return;
        if (reached.insert(address).second) work.push_back(address);
    };
    for (size_t i = 0; i < heap.root_count(); ++i) visit(heap.root_at(i));
    while (!work.empty()) {
        HeapAddress address = work.back();
        work.pop_back();
        switch (heap.kind(address)) {
            case PayloadKind::Cons:
                visit(heap.cons_car(address));
                visit(heap.cons_cdr(address));
                break;
            case PayloadKind::Lambda:
                visit(heap.lambda_code(address));
                visit(heap.lambda_env(address));
                break;
            default:
                break;
        }
    }
    return reached;
}

}  // namespace microlisp
