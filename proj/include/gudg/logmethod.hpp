#pragma once

// Priority-queue extension of the logarithmic method: transforms any static
// data structure for a decomposable search problem into a dynamic one that
// supports insert and delete-min, while keeping queries answerable by
// combining per-subset answers.
//
// The live set S is partitioned into subsets S_0, S_1, ..., S_{ceil(log n)}
// together with "min-prefix" subsets C_i <= S_i.  The maintained invariants:
//   I1: |S_i| <= 2^i.
//   I2: |C_0| = 0, |C_1| = 1, 2^{i-2} <= |C_i| <= 2^{i-1} for
//       2 <= i <= ceil(log n) - 1, and |C_{ceil(log n)}| <= 2^{ceil(log n)-1}.
//   I3: C_i holds the |C_i| smallest keys among S_i u S_{i+1} u ... (so the
//       overall minimum is in C_1 or S_0).
//   I4: S_i is empty for i > ceil(log n).
// Below kBruteForceThreshold live elements the structure degenerates to a
// flat list of singleton structures (valid because the search problem is
// decomposable), which keeps every operation cheap and every query exact.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gudg/geometry.hpp"

namespace gudg {

template <typename PayloadT>
struct KeyedItem {
    PayloadT payload{};
    double key = 0.0;
    std::uint64_t seq = 0;  // tie-breaker; (key, seq) unique among live items
};

template <typename PayloadT>
inline bool keyed_item_less(const KeyedItem<PayloadT>& a, const KeyedItem<PayloadT>& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.seq < b.seq;
}

struct LogMethodRebalanceEvent {
    std::uint64_t epoch = 0;      // leveled-mode epoch (bumped at each bootstrap)
    std::uint32_t level = 0;      // iteration index i of the rebalance
    bool deletion = false;        // false: insertion-induced, true: deletion-induced
    std::uint64_t update_ordinal = 0;  // 1-based count of updates when it fired
};

struct LogMethodReport {
    std::uint64_t inserts = 0;
    std::uint64_t delete_mins = 0;
    std::uint64_t updates = 0;  // inserts + delete_mins
    std::uint64_t build_calls = 0;
    std::uint64_t build_elements = 0;  // total elements passed to structure builds
    std::uint64_t merge_processes = 0;  // top-level merges when ceil(log n) shrinks
    std::uint64_t bootstraps = 0;       // flat -> leveled transitions
    std::uint64_t teardowns = 0;        // leveled -> flat transitions
    std::uint64_t peak_live = 0;
    std::uint64_t epoch = 0;
    std::vector<std::uint64_t> insert_rebalances;  // [i] = iteration-i count
    std::vector<std::uint64_t> delete_rebalances;  // [i] = iteration-i count
    std::vector<LogMethodRebalanceEvent> rebalance_events;
};

// StructureT contract (the static structure being dynamized):
//   using Payload = ...;                    element payload type
//   using Query   = ...;                    query argument type
//   using Answer  = ...;                    per-subset answer type
//   StructureT(const std::vector<KeyedItem<Payload>>& items);   // build
//   Answer query(const Query& q) const;
//   static Answer combine(const Answer&, const Answer&);  // constant-time merge
//   static Answer empty_answer();                         // combine identity
// StructureT must be movable.  Queries on the full live set are answered by
// folding combine() over the per-subset answers (decomposability).
template <typename StructureT>
class LogMethodPq {
  public:
    using Structure = StructureT;
    using Payload = typename StructureT::Payload;
    using Item = KeyedItem<Payload>;
    using Query = typename StructureT::Query;
    using Answer = typename StructureT::Answer;

    // Below this many live elements, operations fall back to a brute-force
    // flat list; at or above it, the leveled structure is active.
    static constexpr std::size_t kBruteForceThreshold = 16;

    std::size_t size() const { return n_; }
    bool empty() const { return n_ == 0; }
    bool leveled() const { return leveled_; }

    void insert(const Item& item) {
        if (!std::isfinite(item.key)) {
            throw std::invalid_argument("LogMethodPq::insert: non-finite key");
        }
        if (!live_ids_.insert({item.key, item.seq}).second) {
            throw std::invalid_argument("LogMethodPq::insert: duplicate (key, seq)");
        }
        ++report_.inserts;
        ++report_.updates;
        if (leveled_) {
            leveled_insert(item);
        } else {
            flat_insert(item);
        }
        report_.peak_live = std::max<std::uint64_t>(report_.peak_live, n_);
    }

    void insert(const Payload& payload, double key, std::uint64_t seq) {
        insert(Item{payload, key, seq});
    }

    Item peek_min() const {
        if (n_ == 0) throw std::out_of_range("LogMethodPq::peek_min: empty structure");
        if (!leveled_) return flat_items_.front();
        return *min_candidate();
    }

    Item delete_min() {
        if (n_ == 0) throw std::out_of_range("LogMethodPq::delete_min: empty structure");
        ++report_.delete_mins;
        ++report_.updates;
        Item a = leveled_ ? leveled_delete_min() : flat_delete_min();
        live_ids_.erase({a.key, a.seq});
        return a;
    }

    Answer query(const Query& q) const {
        Answer acc = Structure::empty_answer();
        if (!leveled_) {
            for (const Structure& d : flat_ds_) acc = Structure::combine(acc, d.query(q));
        } else {
            for (const Level& lv : levels_) {
                if (lv.d) acc = Structure::combine(acc, lv.d->query(q));
            }
        }
        return acc;
    }

    const LogMethodReport& amortization_report() const { return report_; }

    // -- Introspection (exact sets and min-prefix sizes, for audits) --------

    std::size_t level_count() const { return leveled_ ? levels_.size() : 0; }

    const std::vector<Item>& level_items(std::size_t i) const {
        if (!leveled_ || i >= levels_.size()) {
            throw std::out_of_range("LogMethodPq::level_items: no such level");
        }
        return levels_[i].items;
    }

    std::size_t level_prefix(std::size_t i) const {
        if (!leveled_ || i >= levels_.size()) {
            throw std::out_of_range("LogMethodPq::level_prefix: no such level");
        }
        return levels_[i].prefix;
    }

    const std::vector<Item>& flat_items() const { return flat_items_; }

    // Verifies I1-I4 plus representation sanity; throws std::logic_error on
    // any violation.  (Tests additionally run an independent checker over the
    // introspection views.)
    void check_invariants() const {
        if (live_ids_.size() != n_) fail("live id set out of sync");
        if (!leveled_) {
            if (n_ >= kBruteForceThreshold) fail("flat mode above threshold");
            if (flat_items_.size() != n_ || flat_ds_.size() != n_) fail("flat sizes");
            require_sorted(flat_items_, "flat list");
            return;
        }
        if (n_ < kBruteForceThreshold) fail("leveled mode below threshold");
        const std::size_t log_n = ceil_log2(n_);
        if (levels_.size() < log_n + 1) fail("missing levels");
        std::size_t total = 0;
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            const Level& lv = levels_[i];
            require_sorted(lv.items, "level set");
            if (lv.prefix > lv.items.size()) fail("prefix exceeds level size");
            if (lv.items.empty() != !lv.d.has_value()) fail("structure presence mismatch");
            total += lv.items.size();
            if (i > log_n && !lv.items.empty()) fail("I4 violated");
            if (i <= log_n && lv.items.size() > (std::size_t{1} << i)) fail("I1 violated");
        }
        if (total != n_) fail("level sizes do not sum to n");
        if (levels_[0].prefix != 0) fail("I2 violated: |C_0| != 0");
        if (level_prefix_at(1) != 1) fail("I2 violated: |C_1| != 1");
        for (std::size_t i = 2; i + 1 <= log_n; ++i) {
            const std::size_t c = level_prefix_at(i);
            if (c < (std::size_t{1} << (i - 2)) || c > (std::size_t{1} << (i - 1))) {
                fail("I2 violated at middle level");
            }
        }
        if (level_prefix_at(log_n) > (std::size_t{1} << (log_n - 1))) {
            fail("I2 violated at top level");
        }
        // I3: the largest element of C_i must not exceed any element of
        // S_{>=i} \ C_i.  With sorted levels it suffices to compare against
        // the remainder of level i and the fronts of the higher levels.
        for (std::size_t i = 0; i < levels_.size(); ++i) {
            const Level& lv = levels_[i];
            if (lv.prefix == 0) continue;
            const Item& max_c = lv.items[lv.prefix - 1];
            if (lv.prefix < lv.items.size() && item_less(lv.items[lv.prefix], max_c)) {
                fail("I3 violated within level");
            }
            for (std::size_t j = i + 1; j < levels_.size(); ++j) {
                if (!levels_[j].items.empty() && item_less(levels_[j].items.front(), max_c)) {
                    fail("I3 violated across levels");
                }
            }
        }
    }

  private:
    struct Level {
        std::vector<Item> items;  // sorted ascending by (key, seq)
        std::size_t prefix = 0;   // |C_i|; C_i is the first `prefix` items
        std::optional<Structure> d;
    };

    static bool item_less(const Item& a, const Item& b) { return keyed_item_less(a, b); }

    static std::size_t ceil_log2(std::uint64_t n) {
        std::size_t l = 0;
        while ((std::uint64_t{1} << l) < n) ++l;
        return l;
    }

    [[noreturn]] static void fail(const std::string& what) {
        throw std::logic_error("LogMethodPq invariant violation: " + what);
    }

    static void require_sorted(const std::vector<Item>& v, const char* what) {
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (!item_less(v[i - 1], v[i])) {
                fail(std::string(what) + " not strictly sorted by (key, seq)");
            }
        }
    }

    std::size_t level_prefix_at(std::size_t i) const {
        return i < levels_.size() ? levels_[i].prefix : 0;
    }

    static void insert_sorted(std::vector<Item>& v, const Item& item) {
        v.insert(std::upper_bound(v.begin(), v.end(), item, item_less), item);
    }

    static void merge_into(std::vector<Item>& dst, std::vector<Item>&& src) {
        if (src.empty()) return;
        std::vector<Item> out;
        out.reserve(dst.size() + src.size());
        std::merge(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out),
                   item_less);
        dst = std::move(out);
    }

    void ensure_levels(std::size_t count) {
        if (levels_.size() < count) levels_.resize(count);
    }

    void rebuild_level(std::size_t i) {
        Level& lv = levels_[i];
        if (lv.items.empty()) {
            lv.d.reset();
            return;
        }
        lv.d.emplace(lv.items);
        ++report_.build_calls;
        report_.build_elements += lv.items.size();
    }

    void note_rebalance(std::size_t i, bool deletion) {
        auto& counts = deletion ? report_.delete_rebalances : report_.insert_rebalances;
        if (counts.size() <= i) counts.resize(i + 1, 0);
        ++counts[i];
        report_.rebalance_events.push_back(
            {report_.epoch, static_cast<std::uint32_t>(i), deletion, report_.updates});
    }

    const Item* min_candidate() const {
        const Item* s0 = levels_.empty() || levels_[0].items.empty() ? nullptr
                                                                     : &levels_[0].items.front();
        const Item* c1 = levels_.size() > 1 && levels_[1].prefix >= 1 ? &levels_[1].items.front()
                                                                      : nullptr;
        if (!s0 && !c1) fail("no minimum candidate in C_1 or S_0");
        if (s0 && c1) return item_less(*s0, *c1) ? s0 : c1;
        return s0 ? s0 : c1;
    }

    // -- Flat (brute-force) mode --------------------------------------------

    void flat_insert(const Item& item) {
        const auto pos = std::upper_bound(flat_items_.begin(), flat_items_.end(), item, item_less);
        const std::size_t idx = static_cast<std::size_t>(pos - flat_items_.begin());
        flat_items_.insert(pos, item);
        ++n_;
        if (n_ >= kBruteForceThreshold) {
            bootstrap_leveled();
            return;
        }
        flat_ds_.emplace(flat_ds_.begin() + static_cast<std::ptrdiff_t>(idx),
                         std::vector<Item>{item});
        ++report_.build_calls;
        report_.build_elements += 1;
    }

    Item flat_delete_min() {
        Item a = flat_items_.front();
        flat_items_.erase(flat_items_.begin());
        flat_ds_.erase(flat_ds_.begin());
        --n_;
        return a;
    }

    // Distributes the sorted live set across levels so that all four
    // invariants hold: S_1 takes the smallest element (C_1), each middle
    // level i takes the next 2^{i-2} elements (all of them forming C_i), and
    // the top level takes the remainder with an empty min-prefix.
    void bootstrap_leveled() {
        std::vector<Item> all = std::move(flat_items_);
        flat_items_.clear();
        flat_ds_.clear();
        const std::size_t log_n = ceil_log2(n_);
        levels_.assign(log_n + 1, Level{});
        std::size_t pos = 0;
        levels_[1].items.assign(all.begin(), all.begin() + 1);
        levels_[1].prefix = 1;
        pos = 1;
        for (std::size_t i = 2; i + 1 <= log_n; ++i) {
            const std::size_t take = std::size_t{1} << (i - 2);
            levels_[i].items.assign(all.begin() + static_cast<std::ptrdiff_t>(pos),
                                    all.begin() + static_cast<std::ptrdiff_t>(pos + take));
            levels_[i].prefix = take;
            pos += take;
        }
        levels_[log_n].items.assign(all.begin() + static_cast<std::ptrdiff_t>(pos), all.end());
        levels_[log_n].prefix = 0;
        for (std::size_t i = 0; i <= log_n; ++i) rebuild_level(i);
        leveled_ = true;
        ++report_.bootstraps;
        ++report_.epoch;
    }

    void teardown_to_flat() {
        std::vector<Item> all;
        all.reserve(n_);
        for (Level& lv : levels_) {
            for (Item& it : lv.items) all.push_back(std::move(it));
        }
        std::sort(all.begin(), all.end(), item_less);
        levels_.clear();
        leveled_ = false;
        flat_items_ = std::move(all);
        flat_ds_.clear();
        flat_ds_.reserve(flat_items_.size());
        for (const Item& it : flat_items_) {
            flat_ds_.emplace_back(std::vector<Item>{it});
            ++report_.build_calls;
            report_.build_elements += 1;
        }
        ++report_.teardowns;
    }

    // -- Leveled mode ---------------------------------------------------------

    void leveled_insert(const Item& item) {
        const std::size_t log_prev = ceil_log2(n_);
        ++n_;
        const std::size_t log_n = ceil_log2(n_);
        const bool grew = log_n == log_prev + 1;
        ensure_levels(log_n + 1);
        insert_sorted(levels_[0].items, item);
        std::size_t i = 0;
        bool received = true;  // level 0 just received the new item
        while (true) {
            const bool overflow = levels_[i].items.size() > (std::size_t{1} << i);
            // When ceil(log n) grows, the old top level becomes a middle
            // level whose min-prefix needs the lower bound 2^{log n - 3}
            // restored.  That repair (the raise below) lives in iteration
            // log n - 2, so the cascade must run through it even when no
            // level overflows; otherwise a shallow insert would leave the
            // second-highest min-prefix deficient.
            const bool forced = grew && i + 2 <= log_n;
            if (!overflow && !forced) break;
            ensure_levels(i + 2);
            Level& cur = levels_[i];
            Level& nxt = levels_[i + 1];
            std::vector<Item> moved(cur.items.begin() + static_cast<std::ptrdiff_t>(cur.prefix),
                                    cur.items.end());
            std::size_t c = nxt.prefix;
            bool raise = false;
            if (grew && i + 2 == log_n) {
                const std::size_t want = std::size_t{1} << (i - 1);
                if (c < want) {
                    c = want;
                    raise = true;
                }
            }
            const bool moving = !moved.empty();
            if (moving) {
                cur.items.resize(cur.prefix);
                merge_into(nxt.items, std::move(moved));
            }
            if (received || moving) rebuild_level(i);
            if (moving || raise) note_rebalance(i, /*deletion=*/false);
            if (c > nxt.items.size()) fail("insert cascade produced short level");
            nxt.prefix = c;
            received = moving;
            ++i;
        }
        if (received) rebuild_level(i);
    }

    Item leveled_delete_min() {
        const Item* cand = min_candidate();
        const bool from_s0 = !levels_[0].items.empty() && cand == &levels_[0].items.front();
        Item a = *cand;
        if (from_s0) {
            levels_[0].items.clear();
            levels_[0].d.reset();
        } else {
            levels_[1].items.erase(levels_[1].items.begin());
            levels_[1].prefix = 0;
        }
        --n_;
        if (n_ < kBruteForceThreshold) {
            teardown_to_flat();
            return a;
        }
        const std::size_t log_n = ceil_log2(n_);
        ensure_levels(log_n + 2);
        if (!levels_[log_n + 1].items.empty()) {
            // ceil(log n) shrank: merge the orphaned top level downward.
            std::vector<Item> top = std::move(levels_[log_n + 1].items);
            levels_[log_n + 1].items.clear();
            levels_[log_n + 1].prefix = 0;
            levels_[log_n + 1].d.reset();
            merge_into(levels_[log_n].items, std::move(top));
            rebuild_level(log_n);
            ++report_.merge_processes;
        }
        if (from_s0) return a;

        std::size_t i = 1;
        while (i < log_n && 4 * levels_[i].prefix < (std::size_t{1} << i)) {
            note_rebalance(i, /*deletion=*/true);
            ensure_levels(i + 2);
            Level& cur = levels_[i];
            Level& nxt = levels_[i + 1];
            const std::size_t ci = i + 2 <= log_n ? (std::size_t{1} << (i - 1))
                                                  : (std::size_t{1} << (i - 2));
            if (cur.items.size() + nxt.items.size() < ci) {
                fail("delete rebalance lacks elements for new min-prefix");
            }
            const std::size_t k_i = cur.items.size();
            // New C_i = the ci smallest of S_i u S_{i+1}; count how many of
            // them come from S_{i+1} (they are its smallest, i.e. a prefix).
            std::size_t from_next = 0;
            {
                std::size_t ti = 0;
                std::size_t tj = 0;
                for (std::size_t taken = 0; taken < ci; ++taken) {
                    if (ti < cur.items.size() &&
                        (tj >= nxt.items.size() || item_less(cur.items[ti], nxt.items[tj]))) {
                        ++ti;
                    } else {
                        ++tj;
                        ++from_next;
                    }
                }
            }
            if (from_next > 0) {
                std::vector<Item> moved(nxt.items.begin(),
                                        nxt.items.begin() + static_cast<std::ptrdiff_t>(from_next));
                nxt.items.erase(nxt.items.begin(),
                                nxt.items.begin() + static_cast<std::ptrdiff_t>(from_next));
                nxt.prefix -= std::min(nxt.prefix, from_next);
                merge_into(cur.items, std::move(moved));
            }
            cur.prefix = ci;
            const std::size_t moved_in = cur.items.size() - k_i;
            const std::size_t q_count = std::min(cur.items.size() - ci, moved_in);
            if (q_count > 0) {
                // Move the q_count largest keys of S_i \ C_i up to S_{i+1};
                // those below C_{i+1}'s largest key join C_{i+1}.
                std::vector<Item> q(cur.items.end() - static_cast<std::ptrdiff_t>(q_count),
                                    cur.items.end());
                cur.items.resize(cur.items.size() - q_count);
                std::size_t q_prime = 0;
                if (nxt.prefix > 0) {
                    const Item& largest_c = nxt.items[nxt.prefix - 1];
                    for (const Item& it : q) {
                        if (item_less(it, largest_c)) ++q_prime;
                    }
                }
                merge_into(nxt.items, std::move(q));
                nxt.prefix += q_prime;
            }
            rebuild_level(i);
            ++i;
        }
        rebuild_level(i);
        return a;
    }

    std::size_t n_ = 0;
    bool leveled_ = false;
    std::vector<Item> flat_items_;    // sorted; used when !leveled_
    std::vector<Structure> flat_ds_;  // singleton structures aligned with flat_items_
    std::vector<Level> levels_;       // used when leveled_
    std::set<std::pair<double, std::uint64_t>> live_ids_;
    LogMethodReport report_;
};

// Reference static structure: exact membership over integer payloads.
struct MembershipStructure {
    using Payload = std::int64_t;
    using Query = std::int64_t;
    using Answer = bool;

    explicit MembershipStructure(const std::vector<KeyedItem<Payload>>& items) {
        values.reserve(items.size());
        for (const auto& it : items) values.push_back(it.payload);
        std::sort(values.begin(), values.end());
    }

    Answer query(const Query& q) const {
        return std::binary_search(values.begin(), values.end(), q);
    }

    static Answer combine(Answer a, Answer b) { return a || b; }
    static Answer empty_answer() { return false; }

    std::vector<std::int64_t> values;  // sorted payloads
};

// Reference static structure: planar Euclidean nearest neighbor.  Ties in
// distance break toward the smaller (key, seq), keeping answers deterministic.
struct PlanarNnStructure {
    using Payload = Point;
    using Query = Point;

    struct Answer {
        std::optional<KeyedItem<Point>> best;
        double dist = std::numeric_limits<double>::infinity();
    };

    explicit PlanarNnStructure(const std::vector<KeyedItem<Point>>& its) : items(its) {}

    Answer query(const Query& q) const {
        Answer a;
        for (const auto& it : items) {
            const double d = distance(q, it.payload);
            if (!a.best || d < a.dist || (d == a.dist && keyed_item_less(it, *a.best))) {
                a.best = it;
                a.dist = d;
            }
        }
        return a;
    }

    static Answer combine(const Answer& x, const Answer& y) {
        if (!x.best) return y;
        if (!y.best) return x;
        if (y.dist < x.dist || (y.dist == x.dist && keyed_item_less(*y.best, *x.best))) return y;
        return x;
    }

    static Answer empty_answer() { return {}; }

    std::vector<KeyedItem<Point>> items;
};

}  // namespace gudg
