#include "microlisp/heap.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>

namespace microlisp {

const char* to_string(CollectorKind kind) {
    switch (kind) {
        case CollectorKind::MarkSweep: return "mark-sweep";
        case CollectorKind::Cheney: return "cheney";
        case CollectorKind::Lisp2: return "lisp2";
    }
    return "unknown";
}

std::optional<CollectorKind> collector_from_string(std::string_view name) {
    if (name == "mark-sweep" || name == "marksweep") return CollectorKind::MarkSweep;
    if (name == "cheney") return CollectorKind::Cheney;
    if (name == "lisp2" || name == "lisp-2") return CollectorKind::Lisp2;
    return std::nullopt;
}

const char* builtin_name(BuiltinOp op) {
    switch (op) {
        case BuiltinOp::Car: return "CAR";
        case BuiltinOp::Cdr: return "CDR";
        case BuiltinOp::Cons: return "CONS";
        case BuiltinOp::Equal: return "EQUAL";
        case BuiltinOp::Atom: return "ATOM";
        case BuiltinOp::Not: return "NOT";
        case BuiltinOp::Add: return "+";
        case BuiltinOp::Sub: return "-";
        case BuiltinOp::Mul: return "*";
        case BuiltinOp::Div: return "/";
        case BuiltinOp::NumEq: return "=";
        case BuiltinOp::Gt: return ">";
        case BuiltinOp::Ge: return ">=";
        case BuiltinOp::Lt: return "<";
        case BuiltinOp::Le: return "<=";
    }
    return "?";
}

uint32_t SymbolTable::intern(std::string_view name) {
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    uint32_t id = static_cast<uint32_t>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

const std::string& SymbolTable::name(uint32_t id) const {
    if (id >= names_.size()) throw std::out_of_range("symbol id out of range");
    return names_[id];
}

std::optional<uint32_t> free_list_allocate(FreeList& free_list, uint32_t size) {
    for (size_t i = 0; i < free_list.extents.size(); ++i) {
        Extent& e = free_list.extents[i];
        if (e.size >= size) {
            uint32_t address = e.address;
            e.address += size;
            e.size -= size;
            if (e.size == 0) {
                free_list.extents.erase(free_list.extents.begin() +
                                        static_cast<ptrdiff_t>(i));
            }
            return address;
        }
    }
    return std::nullopt;
}

void Rooted::set(HeapAddress value) {
    assert(heap_ != nullptr);
    heap_->roots_[slot_] = value;
}

RootScope::RootScope(Heap& heap) : heap_(heap), base_(heap.root_count()) {}

RootScope::~RootScope() {
    while (heap_.root_count() > base_) heap_.pop_root();
}

Rooted RootScope::root(HeapAddress value) { return heap_.push_root(value); }

uint32_t Heap::pack_meta(uint32_t size, PayloadKind kind, Color color, bool forwarded) {
    assert(size <= 0xFFFFFFu);
    return (size & 0xFFFFFFu) | (static_cast<uint32_t>(kind) << 24) |
           (static_cast<uint32_t>(color) << 27) | (forwarded ? 1u << 29 : 0u);
}

Heap::Heap(const HeapConfig& config) : config_(config) {
    arena_slots_ = static_cast<uint32_t>(config.capacity_bytes / kSlotBytes);
    if (config.collector == CollectorKind::Cheney) {
        semispace_slots_ = arena_slots_ / 2;
        if (semispace_slots_ == 0) {
            throw std::invalid_argument("heap too small for two semispaces");
        }
        active_base_ = 0;
        alloc_cursor_ = 0;
    } else {
        if (arena_slots_ == 0) throw std::invalid_argument("heap too small for one slot");
        free_.extents.push_back(Extent{0, arena_slots_});
    }
    slots_.resize(arena_slots_);
    roots_.reserve(4096);
}

uint32_t Heap::mutator_slots() const {
    return config_.collector == CollectorKind::Cheney ? semispace_slots_ : arena_slots_;
}

const Heap::Slot& Heap::slot_at(HeapAddress address) const {
    if (address.is_nil() || address.index >= arena_slots_) {
        throw InvalidAddress("invalid heap address " +
                             (address.is_nil() ? std::string("NIL")
                                               : std::to_string(address.index)));
    }
    return slots_[address.index];
}

Heap::Slot& Heap::slot_at(HeapAddress address) {
    return const_cast<Slot&>(static_cast<const Heap*>(this)->slot_at(address));
}

const Heap::Slot& Heap::checked_slot(HeapAddress address, PayloadKind expected) const {
    const Slot& s = slot_at(address);
    if (meta_kind(s.meta) != expected) {
        throw InvalidAddress("object at " + std::to_string(address.index) +
                             " has unexpected kind");
    }
    return s;
}

PayloadKind Heap::kind(HeapAddress address) const { return meta_kind(slot_at(address).meta); }

HeapAddress Heap::cons_car(HeapAddress address) const {
    return HeapAddress{checked_slot(address, PayloadKind::Cons).word0};
}
HeapAddress Heap::cons_cdr(HeapAddress address) const {
    return HeapAddress{checked_slot(address, PayloadKind::Cons).word1};
}
int32_t Heap::integer_value(HeapAddress address) const {
    return static_cast<int32_t>(checked_slot(address, PayloadKind::Integer).word0);
}
uint32_t Heap::symbol_id(HeapAddress address) const {
    return checked_slot(address, PayloadKind::Symbol).word0;
}
bool Heap::boolean_value(HeapAddress address) const {
    return checked_slot(address, PayloadKind::Boolean).word0 != 0;
}
BuiltinOp Heap::builtin_op(HeapAddress address) const {
    return static_cast<BuiltinOp>(checked_slot(address, PayloadKind::Builtin).word0);
}
HeapAddress Heap::lambda_code(HeapAddress address) const {
    return HeapAddress{checked_slot(address, PayloadKind::Lambda).word0};
}
HeapAddress Heap::lambda_env(HeapAddress address) const {
    return HeapAddress{checked_slot(address, PayloadKind::Lambda).word1};
}

ObjectView Heap::read_object(HeapAddress address) const {
    const Slot& s = slot_at(address);
    ObjectView view;
    view.header.size = meta_size(s.meta);
    view.header.kind = meta_kind(s.meta);
    view.header.color = meta_color(s.meta);
    view.header.forwarded = meta_forwarded(s.meta);
    switch (view.header.kind) {
        case PayloadKind::Cons:
            view.payload = ConsPayload{HeapAddress{s.word0}, HeapAddress{s.word1}};
            break;
        case PayloadKind::Integer:
            view.payload = static_cast<int32_t>(s.word0);
            break;
        case PayloadKind::Symbol:
            view.payload = SymbolPayload{s.word0};
            break;
        case PayloadKind::Boolean:
            view.payload = s.word0 != 0;
            break;
        case PayloadKind::Builtin:
            view.payload = BuiltinPayload{static_cast<BuiltinOp>(s.word0)};
            break;
        case PayloadKind::Lambda:
            view.payload = LambdaPayload{HeapAddress{s.word0}, HeapAddress{s.word1}};
            break;
    }
    return view;
}

void Heap::write_field(HeapAddress address, Field field, HeapAddress value) {
    Slot& s = slot_at(address);
    PayloadKind k = meta_kind(s.meta);
    switch (field) {
        case Field::Car:
        case Field::Cdr:
            if (k != PayloadKind::Cons) {
                throw std::logic_error("car/cdr write on a non-cons object");
            }
            (field == Field::Car ? s.word0 : s.word1) = value.index;
            break;
        case Field::LambdaCode:
        case Field::LambdaEnv:
            if (k != PayloadKind::Lambda) {
                throw std::logic_error("lambda field write on a non-lambda object");
            }
            (field == Field::LambdaCode ? s.word0 : s.word1) = value.index;
            break;
    }
}

Rooted Heap::push_root(HeapAddress value) {
    roots_.push_back(value);
    return Rooted(this, roots_.size() - 1);
}

void Heap::pop_root() {
    if (roots_.empty()) {
        std::fprintf(stderr, "microlisp: pop_root on an empty root registry\n");
        std::abort();
    }
    roots_.pop_back();
}

std::optional<uint32_t> Heap::try_allocate(uint32_t size) {
    if (config_.collector == CollectorKind::Cheney) {
        if (alloc_cursor_ + size <= active_base_ + semispace_slots_) {
            uint32_t address = alloc_cursor_;
            alloc_cursor_ += size;
            return address;
        }
        return std::nullopt;
    }
    return free_list_allocate(free_, size);
}

HeapAddress Heap::allocate_object(PayloadKind kind, uint32_t word0, uint32_t word1,
                                  uint32_t extra_slots, bool refs_in_words) {
    const uint32_t size = 1 + extra_slots;
    if (size > mutator_slots()) {
        throw OutOfMemory("request of " + std::to_string(size) +
                          " slots exceeds mutator capacity");
    }
    const uint64_t start = monotonic_now_ns();
    std::optional<uint32_t> index;
    if (!config_.stress_gc) index = try_allocate(size);
    if (!index) {
        // A collection is required; the payload references ride through it
        // as roots so moving collectors rewrite them.
        if (refs_in_words) {
            RootScope scope(*this);
            Rooted ref0 = scope.root(HeapAddress{word0});
            Rooted ref1 = scope.root(HeapAddress{word1});
            run_collection();
            word0 = ref0.get().index;
            word1 = ref1.get().index;
        } else {
            run_collection();
        }
        index = try_allocate(size);
    }
    if (!index) {
        throw OutOfMemory("heap exhausted by live data (" +
                          std::to_string(config_.capacity_bytes) + " bytes, " +
                          to_string(config_.collector) + ")");
    }
    Slot& s = slots_[*index];
    s.meta = pack_meta(size, kind, Color::White, false);
    s.scratch = 0;
    s.word0 = word0;
    s.word1 = word1;
    for (uint32_t pad = 1; pad < size; ++pad) slots_[*index + pad] = Slot{};
    stats_.record_allocation(monotonic_now_ns() - start);
    return HeapAddress::at(*index);
}

HeapAddress Heap::allocate_cons(HeapAddress car, HeapAddress cdr, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Cons, car.index, cdr.index, extra_slots, true);
}
HeapAddress Heap::allocate_integer(int32_t value, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Integer, static_cast<uint32_t>(value), 0, extra_slots,
                           false);
}
HeapAddress Heap::allocate_symbol(uint32_t symbol_id, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Symbol, symbol_id, 0, extra_slots, false);
}
HeapAddress Heap::allocate_boolean(bool truth, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Boolean, truth ? 1 : 0, 0, extra_slots, false);
}
HeapAddress Heap::allocate_builtin(BuiltinOp op, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Builtin, static_cast<uint32_t>(op), 0, extra_slots,
                           false);
}
HeapAddress Heap::allocate_lambda(HeapAddress code, HeapAddress env, uint32_t extra_slots) {
    return allocate_object(PayloadKind::Lambda, code.index, env.index, extra_slots, true);
}

void Heap::run_collection() {
    if (collecting_) throw std::logic_error("collection triggered during a collection");
    collecting_ = true;
    const uint64_t start = monotonic_now_ns();
    CollectionStats stats;
    switch (config_.collector) {
        case CollectorKind::MarkSweep: stats = detail_collect_mark_sweep(*this); break;
        case CollectorKind::Cheney: stats = detail_collect_cheney(*this); break;
        case CollectorKind::Lisp2: stats = detail_collect_lisp2(*this); break;
    }
    stats.pause_ns = monotonic_now_ns() - start;
    stats_.record_collection(stats.pause_ns);
    last_gc_ = stats;
    collecting_ = false;
    if (config_.validate_after_gc) validate();
}

void Heap::collect_now() { run_collection(); }

std::vector<uint32_t> Heap::object_header_indices() const {
    std::vector<uint32_t> headers;
    if (config_.collector == CollectorKind::Cheney) {
        uint32_t address = active_base_;
        while (address < alloc_cursor_) {
            headers.push_back(address);
            uint32_t size = meta_size(slots_[address].meta);
            if (size == 0) throw std::logic_error("zero-size object in arena walk");
            address += size;
        }
        if (address != alloc_cursor_) {
            throw std::logic_error("arena walk overran the allocation cursor");
        }
        return headers;
    }
    uint32_t address = 0;
    size_t next_free = 0;
    while (address < arena_slots_) {
        if (next_free < free_.extents.size() &&
            free_.extents[next_free].address == address) {
            address += free_.extents[next_free].size;
            ++next_free;
            continue;
        }
        headers.push_back(address);
        uint32_t size = meta_size(slots_[address].meta);
        if (size == 0) throw std::logic_error("zero-size object in arena walk");
        address += size;
    }
    if (address != arena_slots_ || next_free != free_.extents.size()) {
        throw std::logic_error("arena walk out of step with the free list");
    }
    return headers;
}

std::vector<HeapAddress> Heap::live_objects() const {
    std::vector<HeapAddress> result;
    for (uint32_t index : object_header_indices()) result.push_back(HeapAddress::at(index));
    return result;
}

uint64_t Heap::live_slots() const {
    uint64_t total = 0;
    for (uint32_t index : object_header_indices()) total += meta_size(slots_[index].meta);
    return total;
}

void Heap::validate() const {
    // Free-list shape: in bounds, sorted, disjoint, no zero extents, never
    // adjacent.
    for (size_t i = 0; i < free_.extents.size(); ++i) {
        const Extent& e = free_.extents[i];
        if (e.size == 0) throw std::logic_error("empty extent in free list");
        if (static_cast<uint64_t>(e.address) + e.size > arena_slots_) {
            throw std::logic_error("free extent out of bounds");
        }
        if (i > 0) {
            const Extent& prev = free_.extents[i - 1];
            if (prev.address + prev.size > e.address) {
                throw std::logic_error("free extents overlap or are unsorted");
            }
            if (prev.address + prev.size == e.address) {
                throw std::logic_error("adjacent free extents left uncoalesced");
            }
        }
    }

    // Object walk doubles as the non-overlap proof: headers are visited in
    // address order and each object ends at or before the next block.
    std::vector<uint32_t> headers = object_header_indices();
    std::vector<bool> is_header(arena_slots_, false);
    uint64_t live = 0;
    for (uint32_t index : headers) {
        const Slot& s = slots_[index];
        if (meta_size(s.meta) == 0) throw std::logic_error("object with zero size");
        if (meta_forwarded(s.meta)) {
            throw std::logic_error("forwarded object visible between collections");
        }
        is_header[index] = true;
        live += meta_size(s.meta);
    }

    auto check_ref = [&](HeapAddress ref) {
        if (ref.is_nil()) return;
        if (ref.index >= arena_slots_ || !is_header[ref.index]) {
            throw std::logic_error("payload reference does not target a live header");
        }
        if (config_.collector == CollectorKind::Cheney &&
            (ref.index < active_base_ || ref.index >= alloc_cursor_)) {
            throw std::logic_error("reference escapes the active semispace");
        }
    };

    for (uint32_t index : headers) {
        const Slot& s = slots_[index];
        PayloadKind k = meta_kind(s.meta);
        if (k == PayloadKind::Cons || k == PayloadKind::Lambda) {
            check_ref(HeapAddress{s.word0});
            check_ref(HeapAddress{s.word1});
        }
    }
    for (HeapAddress root : roots_) check_ref(root);

    if (config_.collector != CollectorKind::Cheney) {
        if (live + free_.total_slots() != arena_slots_) {
            throw std::logic_error("conservation violated: live + free != capacity");
        }
    } else {
        if (live != alloc_cursor_ - active_base_) {
            throw std::logic_error("allocation cursor out of step with object sizes");
        }
    }
}

}  // namespace microlisp
