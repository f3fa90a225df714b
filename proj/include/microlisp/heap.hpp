#pragma once

#include <cassert>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "microlisp/collectors.hpp"
#include "microlisp/metrics.hpp"

namespace microlisp {

// Index of a slot in the managed arena. The distinguished NIL sentinel is the
// empty list; every other address held by the mutator designates the header
// slot of a live object.
struct HeapAddress {
    static constexpr uint32_t kNilIndex = 0xFFFFFFFFu;

    uint32_t index = kNilIndex;

    constexpr bool is_nil() const { return index == kNilIndex; }
    static constexpr HeapAddress nil() { return HeapAddress{}; }
    static constexpr HeapAddress at(uint32_t i) { return HeapAddress{i}; }

    friend constexpr auto operator<=>(HeapAddress, HeapAddress) = default;
};

enum class PayloadKind : uint8_t { Cons, Integer, Symbol, Boolean, Builtin, Lambda };

enum class Color : uint8_t { White, Gray, Black };

enum class CollectorKind { MarkSweep, Cheney, Lisp2 };

const char* to_string(CollectorKind kind);
std::optional<CollectorKind> collector_from_string(std::string_view name);

enum class BuiltinOp : uint8_t {
    Car, Cdr, Cons, Equal, Atom, Not,
    Add, Sub, Mul, Div,
    NumEq, Gt, Ge, Lt, Le,
};
const char* builtin_name(BuiltinOp op);

// Decoded view of a header slot. forwarded is only ever set while a copying
// collection is in flight; the mutator never observes it.
struct ObjectHeader {
    uint32_t size = 1;  // slots, header included
    PayloadKind kind = PayloadKind::Integer;
    Color color = Color::White;
    bool forwarded = false;
};

struct ConsPayload {
    HeapAddress car;
    HeapAddress cdr;
};
// code points at the (params body) list of the originating LAMBDA form.
struct LambdaPayload {
    HeapAddress code;
    HeapAddress env;
};
struct SymbolPayload {
    uint32_t id = 0;
};
struct BuiltinPayload {
    BuiltinOp op = BuiltinOp::Car;
};

using Payload =
    std::variant<ConsPayload, int32_t, SymbolPayload, bool, BuiltinPayload, LambdaPayload>;

struct ObjectView {
    ObjectHeader header;
    Payload payload;
};

enum class Field : uint8_t { Car, Cdr, LambdaCode, LambdaEnv };

struct HeapConfig {
    size_t capacity_bytes = 10240;
    CollectorKind collector = CollectorKind::Cheney;
    bool stress_gc = false;        // collect before every allocation
    bool validate_after_gc = false;  // full-heap audit after each collection
};

class HeapError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The retry after a collection could not satisfy the request: the heap is
// genuinely exhausted by live data.
class OutOfMemory : public HeapError {
  public:
    using HeapError::HeapError;
};

class InvalidAddress : public HeapError {
  public:
    using HeapError::HeapError;
};

// Print names live outside the collected arena; a Symbol payload holds only
// the table index.
class SymbolTable {
  public:
    uint32_t intern(std::string_view name);
    const std::string& name(uint32_t id) const;
    size_t size() const { return names_.size(); }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, uint32_t> ids_;
};

class Heap;

// Handle to one rewritable registry slot. Moving collectors update the slot
// in place, so get() always yields the current address of the same logical
// object. clear() empties the slot without popping it, releasing the object
// while keeping push/pop strictly LIFO.
class Rooted {
  public:
    Rooted() = default;

    HeapAddress get() const;
    void set(HeapAddress value);
    void clear() { set(HeapAddress::nil()); }
    explicit operator bool() const { return heap_ != nullptr; }

  private:
    friend class Heap;
    friend class RootScope;
    Rooted(Heap* heap, size_t slot) : heap_(heap), slot_(slot) {}

    Heap* heap_ = nullptr;
    size_t slot_ = 0;
};

// Pops every slot it pushed, in LIFO order, when destroyed.
class RootScope {
  public:
    explicit RootScope(Heap& heap);
    ~RootScope();
    RootScope(const RootScope&) = delete;
    RootScope& operator=(const RootScope&) = delete;

    Rooted root(HeapAddress value);

  private:
    Heap& heap_;
    size_t base_;
};

// Flat slot arena together with the root registry and the allocation entry
// point that invokes the configured collector on exhaustion.
class Heap {
  public:
    static constexpr size_t kSlotBytes = 16;

    explicit Heap(const HeapConfig& config);

    // Allocation may run one collection; reference arguments are rooted
    // internally, so callers only need to protect addresses they hold across
    // the call. extra_slots pads the object for variable-size tests.
    HeapAddress allocate_cons(HeapAddress car, HeapAddress cdr, uint32_t extra_slots = 0);
    HeapAddress allocate_integer(int32_t value, uint32_t extra_slots = 0);
    HeapAddress allocate_symbol(uint32_t symbol_id, uint32_t extra_slots = 0);
    HeapAddress allocate_boolean(bool truth, uint32_t extra_slots = 0);
    HeapAddress allocate_builtin(BuiltinOp op, uint32_t extra_slots = 0);
    HeapAddress allocate_lambda(HeapAddress code, HeapAddress env, uint32_t extra_slots = 0);

    ObjectView read_object(HeapAddress address) const;
    void write_field(HeapAddress address, Field field, HeapAddress value);

    // Typed accessors; throw InvalidAddress on NIL, out-of-bounds, or a kind
    // mismatch.
    PayloadKind kind(HeapAddress address) const;
    HeapAddress cons_car(HeapAddress address) const;
    HeapAddress cons_cdr(HeapAddress address) const;
    int32_t integer_value(HeapAddress address) const;
    uint32_t symbol_id(HeapAddress address) const;
    bool boolean_value(HeapAddress address) const;
    BuiltinOp builtin_op(HeapAddress address) const;
    HeapAddress lambda_code(HeapAddress address) const;
    HeapAddress lambda_env(HeapAddress address) const;

    Rooted push_root(HeapAddress value);
    void pop_root();  // aborts on an empty registry
    size_t root_count() const { return roots_.size(); }
    HeapAddress root_at(size_t slot) const { return roots_[slot]; }

    void collect_now();
    // Full structural audit: object walk, non-overlap, reference validity,
    // conservation (free + live = capacity for the non-copying configs).
    // Throws std::logic_error on any violation.
    void validate() const;

    const HeapConfig& config() const { return config_; }
    uint32_t arena_slots() const { return arena_slots_; }
    // Slots the mutator can actually fill: the active semispace under Cheney,
    // the whole arena otherwise.
    uint32_t mutator_slots() const;
    uint64_t live_slots() const;
    std::vector<HeapAddress> live_objects() const;

    const FreeList& free_list() const { return free_; }
    uint32_t allocation_cursor() const { return alloc_cursor_; }
    uint32_t active_base() const { return active_base_; }

    TimingStats& stats() { return stats_; }
    const TimingStats& stats() const { return stats_; }
    const CollectionStats& last_collection() const { return last_gc_; }

    SymbolTable& symbols() { return symbols_; }
    const SymbolTable& symbols() const { return symbols_; }

    void set_stress_gc(bool on) { config_.stress_gc = on; }

  private:
    friend class Rooted;
    friend class RootScope;
    friend struct GcInternal;

    // meta word layout: bits 0..23 size, 24..26 kind, 27..28 color,
    // bit 29 forwarded. scratch holds the Lisp-2 relocation target.
    struct Slot {
        uint32_t meta = 0;
        uint32_t scratch = 0;
        uint32_t word0 = 0;
        uint32_t word1 = 0;
    };
    static_assert(sizeof(Slot) == kSlotBytes);

    static uint32_t pack_meta(uint32_t size, PayloadKind kind, Color color, bool forwarded);
    static uint32_t meta_size(uint32_t meta) { return meta & 0xFFFFFFu; }
    static PayloadKind meta_kind(uint32_t meta) {
        return static_cast<PayloadKind>((meta >> 24) & 0x7u);
    }
    static Color meta_color(uint32_t meta) { return static_cast<Color>((meta >> 27) & 0x3u); }
    static bool meta_forwarded(uint32_t meta) { return (meta >> 29) & 0x1u; }

    const Slot& slot_at(HeapAddress address) const;
    Slot& slot_at(HeapAddress address);
    const Slot& checked_slot(HeapAddress address, PayloadKind expected) const;

    HeapAddress allocate_object(PayloadKind kind, uint32_t word0, uint32_t word1,
                                uint32_t extra_slots, bool refs_in_words);
    std::optional<uint32_t> try_allocate(uint32_t size);
    void run_collection();

    // Header indices of every object in address order, free extents skipped.
    std::vector<uint32_t> object_header_indices() const;

    HeapConfig config_;
    uint32_t arena_slots_ = 0;
    uint32_t semispace_slots_ = 0;  // Cheney only
    std::vector<Slot> slots_;
    std::vector<HeapAddress> roots_;
    FreeList free_;                // MarkSweep and Lisp2 configs
    uint32_t active_base_ = 0;     // Cheney: base of the space being allocated into
    uint32_t alloc_cursor_ = 0;    // Cheney: next free slot
    SymbolTable symbols_;
    TimingStats stats_;
    CollectionStats last_gc_;
    bool collecting_ = false;
};

// Collection entry points. Each runs to completion on the caller's thread
// with the mutator stopped, scanning from the root registry. The heap must be
// configured for the matching collector.
CollectionStats collect_mark_sweep(Heap& heap);
CollectionStats collect_cheney(Heap& heap);
CollectionStats collect_lisp2(Heap& heap);

// Dispatch targets behind Heap::collect_now (collectors.cpp).
CollectionStats detail_collect_mark_sweep(Heap& heap);
CollectionStats detail_collect_cheney(Heap& heap);
CollectionStats detail_collect_lisp2(Heap& heap);

// Brute-force worklist closure over payload reference fields, independent of
// every collector code path; the verification oracle.
std::set<HeapAddress> reachable_set_oracle(const Heap& heap);

inline HeapAddress Rooted::get() const {
    assert(heap_ != nullptr);
    return heap_->root_at(slot_);
}

}  // namespace microlisp
