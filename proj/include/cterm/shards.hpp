#pragma once

// Duplicate-code-shard detection over firmware images (Ukkonen suffix tree,
// longest-repeat queries) and the CALL/JUMP/RET compression transform that
// turns duplicated blocks into one subroutine plus call sites, freeing space.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cterm/numtheory.hpp"

namespace cterm::shards {

struct Shard {
    uint32_t length = 0;
    std::vector<uint32_t> occurrences;  // sorted byte offsets, >= 2 entries

    bool operator==(const Shard&) const = default;
};

// Online (Ukkonen) suffix tree over an int32 symbol string. Bytes map to
// [0, 255]; a unique sentinel terminates the text; masked positions are
// replaced by further unique symbols so no repeat can span them.
class SuffixTree {
public:
    static SuffixTree build(std::span<const uint8_t> data) {
        return SuffixTree(to_symbols(data, nullptr));
    }

    static SuffixTree build_masked(std::span<const uint8_t> data, std::span<const uint8_t> mask) {
        if (mask.size() != data.size())
            throw std::invalid_argument("SuffixTree: mask length mismatch");
        return SuffixTree(to_symbols(data, &mask));
    }

    size_t node_count() const { return nodes_.size(); }
    size_t text_length() const { return text_.size(); }  // includes sentinel

    // Deepest internal node by string depth; occurrences may overlap.
    // Ties break toward the repeat with the smallest first occurrence.
    std::optional<Shard> longest_repeat() const {
        std::optional<Shard> best;
        for (int32_t id : internal_by_depth_desc()) {
            uint32_t depth = depth_[id];
            if (best && depth < best->length) break;
            auto occs = occurrences_of(id);
            if (occs.size() < 2) continue;  // only the sentinel split this node
            if (!best || depth > best->length || occs.front() < best->occurrences.front())
                best = Shard{depth, std::move(occs)};
        }
        return best;
    }

    // Longest repeat usable as a shard: >= 2 greedily selected non-overlapping
    // occurrences, optionally restricted to 2-byte-aligned starts.
    std::optional<Shard> best_shard_candidate(uint32_t min_len, bool aligned) const {
        std::optional<Shard> best;
        for (int32_t id : internal_by_depth_desc()) {
            uint32_t depth = depth_[id];
            if (depth < min_len) break;
            if (best && depth < best->length) break;
            auto occs = occurrences_of(id);
            if (aligned) std::erase_if(occs, [](uint32_t o) { return o % 2 != 0; });
            std::vector<uint32_t> chosen;
            uint32_t next_free = 0;
            for (uint32_t o : occs) {
                if (chosen.empty() || o >= next_free) {
                    chosen.push_back(o);
                    next_free = o + depth;
                }
            }
            if (chosen.size() < 2) continue;
            if (!best || depth > best->length || chosen.front() < best->occurrences.front())
                best = Shard{depth, std::move(chosen)};
        }
        return best;
    }

private:
    struct Node {
        int32_t start = -1;
        int32_t end = -1;  // exclusive; leaf_end marker for leaves
        int32_t link = 0;
        std::map<int32_t, int32_t> children;
    };

    static constexpr int32_t kLeafEnd = -1;

    static std::vector<int32_t> to_symbols(std::span<const uint8_t> data,
                                           const std::span<const uint8_t>* mask) {
        if (data.empty()) throw std::invalid_argument("SuffixTree: data must be non-empty");
        std::vector<int32_t> symbols(data.size() + 1);
        int32_t next_unique = 257;
        for (size_t i = 0; i < data.size(); ++i) {
            bool masked = mask && (*mask)[i] != 0;
            symbols[i] = masked ? next_unique++ : static_cast<int32_t>(data[i]);
        }
        symbols[data.size()] = 256;  // sentinel
        return symbols;
    }

    explicit SuffixTree(std::vector<int32_t> text) : text_(std::move(text)) {
        nodes_.reserve(2 * text_.size());
        nodes_.emplace_back();  // root
        int32_t active_node = 0, active_len = 0, active_edge = 0;
        int32_t remainder = 0;
        const int32_t n = static_cast<int32_t>(text_.size());
        for (int32_t pos = 0; pos < n; ++pos) {
            pos_ = pos;
            ++remainder;
            int32_t last_internal = 0;
            while (remainder > 0) {
                if (active_len == 0) active_edge = pos;
                auto it = nodes_[active_node].children.find(text_[active_edge]);
                if (it == nodes_[active_node].children.end()) {
                    int32_t leaf = new_node(pos, kLeafEnd);
                    nodes_[active_node].children[text_[active_edge]] = leaf;
                    if (last_internal) nodes_[last_internal].link = active_node;
                    last_internal = 0;
                } else {
                    int32_t child = it->second;
                    int32_t edge_len = edge_length(child);
                    if (active_len >= edge_len) {
                        active_edge += edge_len;
                        active_len -= edge_len;
                        active_node = child;
                        continue;
                    }
                    if (text_[nodes_[child].start + active_len] == text_[pos]) {
                        if (last_internal && active_node != 0) nodes_[last_internal].link = active_node;
                        ++active_len;
                        break;
                    }
                    int32_t split = new_node(nodes_[child].start, nodes_[child].start + active_len);
                    nodes_[active_node].children[text_[active_edge]] = split;
                    int32_t leaf = new_node(pos, kLeafEnd);
                    nodes_[split].children[text_[pos]] = leaf;
                    nodes_[child].start += active_len;
                    nodes_[split].children[text_[nodes_[child].start]] = child;
                    if (last_internal) nodes_[last_internal].link = split;
                    last_internal = split;
                }
                --remainder;
                if (active_node == 0 && active_len > 0) {
                    --active_len;
                    active_edge = pos - remainder + 1;
                } else if (active_node != 0) {
                    active_node = nodes_[active_node].link;
                }
            }
        }
        compute_depths();
    }

    int32_t new_node(int32_t start, int32_t end) {
        nodes_.push_back(Node{start, end, 0, {}});
        return static_cast<int32_t>(nodes_.size() - 1);
    }

    int32_t edge_length(int32_t id) const {
        int32_t end = nodes_[id].end == kLeafEnd ? pos_ + 1 : nodes_[id].end;
        return end - nodes_[id].start;
    }

    int32_t final_edge_end(int32_t id) const {
        return nodes_[id].end == kLeafEnd ? static_cast<int32_t>(text_.size()) : nodes_[id].end;
    }

    void compute_depths() {
        depth_.assign(nodes_.size(), 0);
        std::vector<int32_t> stack = {0};
        while (!stack.empty()) {
            int32_t id = stack.back();
            stack.pop_back();
            for (auto& [sym, child] : nodes_[id].children) {
                depth_[child] = depth_[id] + (final_edge_end(child) - nodes_[child].start);
                if (!nodes_[child].children.empty()) stack.push_back(child);
            }
        }
    }

    std::vector<int32_t> internal_by_depth_desc() const {
        std::vector<int32_t> ids;
        for (int32_t id = 1; id < static_cast<int32_t>(nodes_.size()); ++id)
            if (!nodes_[id].children.empty()) ids.push_back(id);
        std::sort(ids.begin(), ids.end(), [&](int32_t a, int32_t b) { return depth_[a] > depth_[b]; });
        return ids;
    }

    // Start offsets of every suffix passing through `id`, ascending.
    std::vector<uint32_t> occurrences_of(int32_t id) const {
        std::vector<uint32_t> occs;
        std::vector<int32_t> stack = {id};
        const int32_t n = static_cast<int32_t>(text_.size());
        while (!stack.empty()) {
            int32_t cur = stack.back();
            stack.pop_back();
            if (nodes_[cur].children.empty()) {
                int32_t start = n - depth_[cur];
                // drop the suffix that is just the sentinel region
                if (start + static_cast<int32_t>(depth_[id]) <= n - 1) occs.push_back(start);
            } else {
                for (auto& [sym, child] : nodes_[cur].children) stack.push_back(child);
            }
        }
        std::sort(occs.begin(), occs.end());
        return occs;
    }

    std::vector<int32_t> text_;
    std::vector<Node> nodes_;
    std::vector<uint32_t> depth_;
    int32_t pos_ = 0;
};

struct ShardReport {
    std::vector<Shard> shards;  // discovery order (longest first)
    size_t image_size = 0;
    uint32_t min_len = 0;
    bool masked = false;
};

// Iteratively extract shards: find the longest admissible repeat, record it,
// overwrite all-but-first occurrence with seeded PRNG bytes, repeat until no
// repeat >= min_len remains. When a mask is supplied, occurrences must avoid
// masked (control-flow) bytes and start on a 2-byte instruction boundary.
inline ShardReport find_shards(std::span<const uint8_t> image, uint32_t min_len,
                               std::span<const uint8_t> mask = {}, uint32_t replace_seed = 1) {
    if (min_len < 4) throw std::invalid_argument("find_shards: min_len must be >= 4");
    const bool use_mask = !mask.empty();
    if (use_mask && mask.size() != image.size())
        throw std::invalid_argument("find_shards: mask length mismatch");

    ShardReport report;
    report.image_size = image.size();
    report.min_len = min_len;
    report.masked = use_mask;
    if (image.size() < min_len) return report;

    std::vector<uint8_t> working(image.begin(), image.end());
    num::MinstdState prng(replace_seed);
    while (true) {
        SuffixTree tree = use_mask ? SuffixTree::build_masked(working, mask)
                                   : SuffixTree::build(working);
        auto candidate = tree.best_shard_candidate(min_len, use_mask);
        if (!candidate) break;
        for (size_t i = 1; i < candidate->occurrences.size(); ++i) {
            uint32_t off = candidate->occurrences[i];
            for (uint32_t j = 0; j < candidate->length; ++j)
                working[off + j] = static_cast<uint8_t>(prng.draw() & 0xff);
        }
        report.shards.push_back(std::move(*candidate));
    }
    return report;
}

// Default 2-byte CALL/JUMP/RET (AVR rcall/rjmp/ret scale).
struct IsaParams {
    uint32_t call_size = 2;
    uint32_t jump_size = 2;
    uint32_t ret_size = 2;
};

struct CallSite {
    uint32_t at = 0;            // rewrite position (former occurrence space)
    uint32_t target = 0;        // subroutine offset
    uint32_t continuation = 0;  // next instruction after the original block
};

struct PlannedShard {
    Shard shard;
    uint32_t subroutine_offset = 0;  // body start; RET follows the body
    std::vector<CallSite> call_sites;
    int64_t freed = 0;
};

struct DroppedShard {
    Shard shard;
    int64_t freed = 0;
    std::string reason;
};

struct CompressionPlan {
    IsaParams isa;
    std::vector<PlannedShard> shards;
    std::vector<DroppedShard> dropped;
    int64_t total_freed = 0;
};

// freed = c*L - (L + ret) - c*(call + jump): the former occurrence space
// holds one subroutine body plus RET, c call sites, and freed filler.
// The subroutine is laid out right after the first call site, which requires
// the first two occurrences to be adjacent; shards without that layout (or
// with freed <= 0) are dropped, with the reason recorded.
inline CompressionPlan plan_compression(const ShardReport& report, IsaParams isa = {}) {
    CompressionPlan plan;
    plan.isa = isa;
    const uint32_t site = isa.call_size + isa.jump_size;
    std::vector<std::pair<uint32_t, uint32_t>> reserved;  // [begin, end) rewrite intervals

    for (const Shard& shard : report.shards) {
        const auto& occ = shard.occurrences;
        if (occ.size() < 2) throw std::invalid_argument("plan_compression: shard needs >= 2 occurrences");
        for (size_t i = 1; i < occ.size(); ++i)
            if (occ[i] < occ[i - 1] + shard.length)
                throw std::invalid_argument("plan_compression: overlapping occurrences");

        const int64_t c = static_cast<int64_t>(occ.size());
        const int64_t L = shard.length;
        const int64_t freed = c * L - (L + isa.ret_size) - c * site;
        if (freed <= 0) {
            plan.dropped.push_back({shard, freed, "frees no memory"});
            continue;
        }
        if (occ[1] != occ[0] + shard.length || L < 2 * site + isa.ret_size) {
            plan.dropped.push_back({shard, freed, "no contiguous space for subroutine body"});
            continue;
        }
        bool clash = false;
        for (auto [b, e] : reserved) {
            for (uint32_t o : occ) {
                if (o < e && b < o + shard.length) clash = true;
            }
        }
        if (clash) {
            plan.dropped.push_back({shard, freed, "overlaps an earlier planned shard"});
            continue;
        }

        PlannedShard planned;
        planned.shard = shard;
        planned.freed = freed;
        planned.subroutine_offset = occ[0] + site;
        const uint32_t after_body = planned.subroutine_offset + shard.length + isa.ret_size;
        for (size_t i = 0; i < occ.size(); ++i) {
            uint32_t at = occ[i];
            if (i == 1) at = after_body;  // displaced past the body spill
            planned.call_sites.push_back(
                {at, planned.subroutine_offset, occ[i] + shard.length});
        }
        for (uint32_t o : occ) reserved.emplace_back(o, o + shard.length);
        plan.total_freed += freed;
        plan.shards.push_back(std::move(planned));
    }
    return plan;
}

namespace detail {

inline void encode_site(std::vector<uint8_t>& out, uint32_t at, uint8_t opcode, uint32_t target,
                        uint32_t size) {
    out[at] = opcode;
    for (uint32_t i = 1; i < size; ++i) out[at + i] = static_cast<uint8_t>(target >> (8 * (i - 1)));
}

}  // namespace detail

inline constexpr uint8_t kCallOpcode = 0xca;
inline constexpr uint8_t kJumpOpcode = 0x1d;
inline constexpr uint8_t kFiller = 0x00;

// Byte positions that end up as filler: former occurrence space minus call
// sites minus the subroutine body and its RET. Size equals the plan's freed
// total, which ties the formula accounting to the rewritten image.
inline std::vector<uint32_t> filler_positions(const CompressionPlan& plan) {
    std::vector<uint32_t> positions;
    for (const PlannedShard& planned : plan.shards) {
        std::vector<std::pair<uint32_t, uint32_t>> used;  // non-filler intervals
        used.emplace_back(planned.subroutine_offset,
                          planned.subroutine_offset + planned.shard.length + plan.isa.ret_size);
        for (const CallSite& cs : planned.call_sites)
            used.emplace_back(cs.at, cs.at + plan.isa.call_size + plan.isa.jump_size);
        for (uint32_t o : planned.shard.occurrences) {
            for (uint32_t i = o; i < o + planned.shard.length; ++i) {
                bool is_used = false;
                for (auto [b, e] : used)
                    if (i >= b && i < e) is_used = true;
                if (!is_used) positions.push_back(i);
            }
        }
    }
    std::sort(positions.begin(), positions.end());
    return positions;
}

// Rewrite the image per plan: every former occurrence region becomes call
// site(s), one subroutine body terminated by RET, and 0x00 filler. Length is
// conserved; execution semantics are not simulated.
inline std::vector<uint8_t> apply_compression(std::span<const uint8_t> image,
                                              const CompressionPlan& plan) {
    std::vector<uint8_t> out(image.begin(), image.end());
    for (const PlannedShard& planned : plan.shards) {
        const Shard& shard = planned.shard;
        if (shard.occurrences.empty() ||
            shard.occurrences.back() + shard.length > image.size())
            throw std::invalid_argument("apply_compression: plan does not fit image");
        std::vector<uint8_t> body(image.begin() + shard.occurrences[0],
                                  image.begin() + shard.occurrences[0] + shard.length);
        for (uint32_t o : shard.occurrences)
            std::fill(out.begin() + o, out.begin() + o + shard.length, kFiller);

        std::copy(body.begin(), body.end(), out.begin() + planned.subroutine_offset);
        uint32_t ret_at = planned.subroutine_offset + shard.length;
        out[ret_at] = 0x08;  // AVR-style ret image
        for (uint32_t i = 1; i < plan.isa.ret_size; ++i) out[ret_at + i] = 0x95;

        for (const CallSite& cs : planned.call_sites) {
            detail::encode_site(out, cs.at, kCallOpcode, cs.target, plan.isa.call_size);
            detail::encode_site(out, cs.at + plan.isa.call_size, kJumpOpcode, cs.continuation,
                                plan.isa.jump_size);
        }
    }
    return out;
}

}  // namespace cterm::shards
