#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bft/error.hpp"

namespace bft {

class Frame;
using FramePtr = std::shared_ptr<const Frame>;

struct Variable {
    std::string name;
    std::vector<std::string> domain;
};

// A multivariate frame of discernment: an ordered list of named discrete
// variables whose joint configuration space is the cross product of their
// domains.  Configurations are enumerated in row-major order of the declared
// variable order (first variable slowest), which fixes the bit layout of
// every ConfigSet and makes file formats byte-stable.
//
// Frames are immutable; all sets and measures carry a FramePtr and
// cross-frame operations fail loudly instead of coercing.
class Frame {
public:
    // Set-storage cap: exact subset operations materialize dense bit vectors,
    // so the joint configuration count is bounded.
    static constexpr std::size_t kSetStorageCap = std::size_t{1} << 20;

    static FramePtr make(std::vector<Variable> vars, std::size_t storage_cap = kSetStorageCap) {
        return FramePtr(new Frame(std::move(vars), storage_cap));
    }

    std::size_t config_count() const { return config_count_; }
    std::size_t var_count() const { return vars_.size(); }
    const std::vector<Variable>& variables() const { return vars_; }
    const Variable& variable(std::size_t i) const { return vars_[i]; }

    std::optional<std::size_t> find_var(std::string_view name) const {
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name == name) return i;
        return std::nullopt;
    }

    std::size_t var_index(std::string_view name) const {
        auto i = find_var(name);
        if (!i) throw frame_error("unknown variable '" + std::string(name) + "'");
        return *i;
    }

    std::size_t value_index(std::size_t var, std::string_view label) const {
        const auto& dom = vars_[var].domain;
        for (std::size_t i = 0; i < dom.size(); ++i)
            if (dom[i] == label) return i;
        throw frame_error("variable '" + vars_[var].name + "' has no value '" + std::string(label) + "'");
    }

    std::size_t config_index(std::span<const std::size_t> coords) const {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < vars_.size(); ++i) idx += coords[i] * strides_[i];
        return idx;
    }

    void decode_config(std::size_t index, std::span<std::size_t> coords) const {
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            coords[i] = index / strides_[i];
            index %= strides_[i];
        }
    }

    bool operator==(const Frame& other) const {
        if (this == &other) return true;
        if (vars_.size() != other.vars_.size()) return false;
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i].name != other.vars_[i].name || vars_[i].domain != other.vars_[i].domain)
                return false;
        return true;
    }
    bool operator!=(const Frame& other) const { return !(*this == other); }

    // Sub-frame spanned by the given variables, canonicalized to this
    // frame's declaration order.  Names must be known and duplicate-free.
    FramePtr subframe(std::span<const std::string> names) const {
        if (names.empty()) throw frame_error("sub-frame needs at least one variable");
        std::vector<bool> keep(vars_.size(), false);
        for (const auto& n : names) {
            std::size_t i = var_index(n);
            if (keep[i]) throw frame_error("duplicate variable '" + n + "' in sub-frame request");
            keep[i] = true;
        }
        std::vector<Variable> sub;
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (keep[i]) sub.push_back(vars_[i]);
        return make(std::move(sub));
    }

    FramePtr subframe(std::initializer_list<std::string> names) const {
        return subframe(std::span<const std::string>(names.begin(), names.size()));
    }

    // True when every variable of `sub` appears here with an identical domain.
    bool contains_frame(const Frame& sub) const {
        for (const auto& v : sub.vars_) {
            auto i = find_var(v.name);
            if (!i || vars_[*i].domain != v.domain) return false;
        }
        return true;
    }

private:
    Frame(std::vector<Variable> vars, std::size_t storage_cap) : vars_(std::move(vars)) {
        if (vars_.empty()) throw frame_error("frame needs at least one variable");
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            const auto& v = vars_[i];
            if (v.name.empty()) throw frame_error("empty variable name");
            if (v.domain.empty()) throw frame_error("variable '" + v.name + "' has an empty domain");
            for (std::size_t j = 0; j < i; ++j)
                if (vars_[j].name == v.name) throw frame_error("duplicate variable '" + v.name + "'");
            for (std::size_t a = 0; a < v.domain.size(); ++a)
                for (std::size_t b = 0; b < a; ++b)
                    if (v.domain[a] == v.domain[b])
                        throw frame_error("duplicate value '" + v.domain[a] + "' in variable '" + v.name + "'");
        }
        config_count_ = 1;
        for (const auto& v : vars_) {
            if (config_count_ > storage_cap / v.domain.size())
                throw cap_error("joint configuration count exceeds the set-storage cap");
            config_count_ *= v.domain.size();
        }
        strides_.assign(vars_.size(), 1);
        for (std::size_t i = vars_.size(); i-- > 1;)
            strides_[i - 1] = strides_[i] * vars_[i].domain.size();
    }

    std::vector<Variable> vars_;
    std::vector<std::size_t> strides_;
    std::size_t config_count_;
};

inline void require_same_frame(const FramePtr& a, const FramePtr& b, const char* op) {
    if (a == b) return;
    if (!a || !b || *a != *b) throw frame_error(std::string(op) + ": operands live on different frames");
}

// A subset of a frame's joint configuration space, stored as a dense bit
// vector in configuration-index order.  Equality is membership equality.
class ConfigSet {
public:
    ConfigSet() = default;

    static ConfigSet empty_set(FramePtr frame) { return ConfigSet(std::move(frame)); }

    static ConfigSet full_set(FramePtr frame) {
        ConfigSet s(std::move(frame));
        for (std::size_t i = 0; i + 1 < s.words_.size(); ++i) s.words_[i] = ~0ull;
        if (!s.words_.empty()) {
            std::size_t rem = s.frame_->config_count() % 64;
            s.words_.back() = rem ? ((1ull << rem) - 1) : ~0ull;
        }
        return s;
    }

    static ConfigSet of(FramePtr frame, std::initializer_list<std::size_t> members) {
        ConfigSet s(std::move(frame));
        for (auto i : members) s.insert(i);
        return s;
    }

    const FramePtr& frame() const { return frame_; }

    bool contains(std::size_t index) const { return (words_[index >> 6] >> (index & 63)) & 1; }
    void insert(std::size_t index) {
        if (index >= frame_->config_count()) throw frame_error("configuration index out of range");
        words_[index >> 6] |= 1ull << (index & 63);
    }
    void erase(std::size_t index) { words_[index >> 6] &= ~(1ull << (index & 63)); }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
        return c;
    }
    bool empty() const {
        for (auto w : words_)
            if (w) return false;
        return true;
    }
    bool is_full() const { return count() == frame_->config_count(); }

    ConfigSet operator&(const ConfigSet& o) const { return zip(o, [](std::uint64_t a, std::uint64_t b) { return a & b; }); }
    ConfigSet operator|(const ConfigSet& o) const { return zip(o, [](std::uint64_t a, std::uint64_t b) { return a | b; }); }
    ConfigSet operator-(const ConfigSet& o) const { return zip(o, [](std::uint64_t a, std::uint64_t b) { return a & ~b; }); }

    ConfigSet complement() const { return full_set(frame_) - *this; }

    bool is_subset_of(const ConfigSet& o) const {
        require_same_frame(frame_, o.frame_, "is_subset_of");
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & ~o.words_[i]) return false;
        return true;
    }
    bool intersects(const ConfigSet& o) const {
        require_same_frame(frame_, o.frame_, "intersects");
        for (std::size_t i = 0; i < words_.size(); ++i)
            if (words_[i] & o.words_[i]) return true;
        return false;
    }

    bool operator==(const ConfigSet& o) const {
        require_same_frame(frame_, o.frame_, "operator==");
        return words_ == o.words_;
    }
    bool operator!=(const ConfigSet& o) const { return !(*this == o); }

    // Canonical total order (lexicographic on the bit words); used as the
    // focal-map key order, so iteration and serialization are deterministic.
    bool operator<(const ConfigSet& o) const {
        return words_ < o.words_;
    }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> out;
        out.reserve(count());
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi];
            while (w) {
                unsigned bit = static_cast<unsigned>(__builtin_ctzll(w));
                out.push_back((wi << 6) + bit);
                w &= w - 1;
            }
        }
        return out;
    }

    template <typename F>
    void for_each_member(F&& f) const {
        for (std::size_t wi = 0; wi < words_.size(); ++wi) {
            std::uint64_t w = words_[wi];
            while (w) {
                unsigned bit = static_cast<unsigned>(__builtin_ctzll(w));
                f((wi << 6) + bit);
                w &= w - 1;
            }
        }
    }

    // Low 64 membership bits; valid only for frames with <= 64 configurations
    // (used by the dense lattice transforms).
    std::uint64_t low_mask() const { return words_.empty() ? 0 : words_[0]; }

private:
    explicit ConfigSet(FramePtr frame) : frame_(std::move(frame)) {
        if (!frame_) throw frame_error("ConfigSet needs a frame");
        words_.assign((frame_->config_count() + 63) / 64, 0);
    }

    template <typename Op>
    ConfigSet zip(const ConfigSet& o, Op op) const {
        require_same_frame(frame_, o.frame_, "set operation");
        ConfigSet r(frame_);
        for (std::size_t i = 0; i < words_.size(); ++i) r.words_[i] = op(words_[i], o.words_[i]);
        return r;
    }

    FramePtr frame_;
    std::vector<std::uint64_t> words_;
};

namespace detail {

// Coordinate bookkeeping shared by projection and extension.
struct VarSplit {
    std::vector<std::size_t> target_idx; // indices of target vars in the super frame, ascending
    std::vector<std::size_t> free_idx;   // the rest, ascending
};

inline VarSplit split_vars(const Frame& super, const Frame& sub) {
    VarSplit s;
    std::vector<bool> taken(super.var_count(), false);
    for (const auto& v : sub.variables()) {
        auto i = super.find_var(v.name);
        if (!i || super.variable(*i).domain != v.domain)
            throw frame_error("frame is not a sub-frame: variable '" + v.name + "' missing or differs");
        taken[*i] = true;
    }
    for (std::size_t i = 0; i < super.var_count(); ++i)
        (taken[i] ? s.target_idx : s.free_idx).push_back(i);
    return s;
}

} // namespace detail

// Projection of a set onto a sub-frame: the set of coordinate projections of
// all member configurations.  The sub-frame's own variable order is honored,
// so it need not follow the parent's declaration order.
inline ConfigSet project_set(const ConfigSet& a, const FramePtr& sub) {
    const Frame& super = *a.frame();
    std::vector<std::size_t> src(sub->var_count());
    for (std::size_t k = 0; k < sub->var_count(); ++k) {
        const auto& v = sub->variable(k);
        auto i = super.find_var(v.name);
        if (!i || super.variable(*i).domain != v.domain)
            throw frame_error("project_set: variable '" + v.name + "' missing or differs in parent frame");
        src[k] = *i;
    }
    ConfigSet out = ConfigSet::empty_set(sub);
    std::vector<std::size_t> coords(super.var_count());
    std::vector<std::size_t> sub_coords(sub->var_count());
    a.for_each_member([&](std::size_t idx) {
        super.decode_config(idx, coords);
        for (std::size_t k = 0; k < src.size(); ++k) sub_coords[k] = coords[src[k]];
        out.insert(sub->config_index(sub_coords));
    });
    return out;
}

inline ConfigSet project_set(const ConfigSet& a, std::span<const std::string> target_vars) {
    return project_set(a, a.frame()->subframe(target_vars));
}

inline ConfigSet project_set(const ConfigSet& a, std::initializer_list<std::string> target_vars) {
    return project_set(a, std::span<const std::string>(target_vars.begin(), target_vars.size()));
}

// Vacuous extension: every member of b, extended with all assignments of the
// variables the super frame adds.  project_set(extension, sub) == b.
inline ConfigSet vacuous_extend_set(const ConfigSet& b, const FramePtr& super) {
    const Frame& sub = *b.frame();
    auto split = detail::split_vars(*super, sub);
    if (split.target_idx.size() != sub.var_count())
        throw frame_error("vacuous_extend_set: sub-frame has duplicate variables");

    // Order of sub coordinates: split_vars lists target indices in super
    // declaration order, which is also the sub-frame's canonical order only
    // when the sub-frame was built that way; map names explicitly instead.
    std::vector<std::size_t> sub_slot(split.target_idx.size());
    for (std::size_t k = 0; k < split.target_idx.size(); ++k)
        sub_slot[k] = sub.var_index(super->variable(split.target_idx[k]).name);

    ConfigSet out = ConfigSet::empty_set(super);
    std::vector<std::size_t> sub_coords(sub.var_count());
    std::vector<std::size_t> coords(super->var_count());
    std::vector<std::size_t> free_counter(split.free_idx.size());
    b.for_each_member([&](std::size_t idx) {
        sub.decode_config(idx, sub_coords);
        for (std::size_t k = 0; k < split.target_idx.size(); ++k)
            coords[split.target_idx[k]] = sub_coords[sub_slot[k]];
        // Enumerate assignments of the free variables.
        std::fill(free_counter.begin(), free_counter.end(), 0);
        while (true) {
            for (std::size_t k = 0; k < split.free_idx.size(); ++k)
                coords[split.free_idx[k]] = free_counter[k];
            out.insert(super->config_index(coords));
            std::size_t k = split.free_idx.size();
            while (k > 0) {
                --k;
                if (++free_counter[k] < super->variable(split.free_idx[k]).domain.size()) break;
                free_counter[k] = 0;
                if (k == 0) return;
            }
            if (split.free_idx.empty()) return;
        }
    });
    return out;
}

// One term of a cylinder expression: a conjunction of per-variable value
// restrictions.  Unmentioned variables range over their full domains.
struct CylinderTerm {
    // (variable name, allowed value labels), each label list nonempty
    std::vector<std::pair<std::string, std::vector<std::string>>> restrictions;
};

// Union of cylinder terms; the compact construction / I-O encoding of a
// ConfigSet.  An empty term list denotes the empty set; a single empty term
// denotes the full frame.
struct CylinderExpr {
    std::vector<CylinderTerm> terms;

    ConfigSet denote(const FramePtr& frame) const {
        ConfigSet out = ConfigSet::empty_set(frame);
        for (const auto& term : terms) {
            // allowed[i]: value indices variable i may take in this term
            std::vector<std::vector<std::size_t>> allowed(frame->var_count());
            std::vector<bool> restricted(frame->var_count(), false);
            for (const auto& [name, labels] : term.restrictions) {
                std::size_t vi = frame->var_index(name);
                if (restricted[vi])
                    throw frame_error("cylinder term restricts variable '" + name + "' twice");
                if (labels.empty())
                    throw frame_error("cylinder term has an empty value set for '" + name + "'");
                restricted[vi] = true;
                for (const auto& l : labels) {
                    std::size_t v = frame->value_index(vi, l);
                    if (std::find(allowed[vi].begin(), allowed[vi].end(), v) != allowed[vi].end())
                        throw frame_error("duplicate value '" + l + "' for variable '" + name + "'");
                    allowed[vi].push_back(v);
                }
                std::sort(allowed[vi].begin(), allowed[vi].end());
            }
            for (std::size_t i = 0; i < frame->var_count(); ++i)
                if (!restricted[i]) {
                    allowed[i].resize(frame->variable(i).domain.size());
                    for (std::size_t v = 0; v < allowed[i].size(); ++v) allowed[i][v] = v;
                }
            // Enumerate the cartesian product of the allowed value lists.
            std::vector<std::size_t> counter(frame->var_count(), 0);
            std::vector<std::size_t> coords(frame->var_count());
            while (true) {
                for (std::size_t i = 0; i < frame->var_count(); ++i) coords[i] = allowed[i][counter[i]];
                out.insert(frame->config_index(coords));
                std::size_t k = frame->var_count();
                bool done = true;
                while (k > 0) {
                    --k;
                    if (++counter[k] < allowed[k].size()) {
                        done = false;
                        break;
                    }
                    counter[k] = 0;
                }
                if (done) break;
            }
        }
        return out;
    }
};

// Best-effort compact cylinder form of a set: a single product term when the
// set is exactly the product of its per-variable projections, otherwise one
// term per member configuration.  Round-trips exactly through denote().
inline CylinderExpr to_cylinder_expr(const ConfigSet& s) {
    const Frame& frame = *s.frame();
    CylinderExpr expr;
    if (s.empty()) return expr;
    if (s.is_full()) {
        expr.terms.push_back({});
        return expr;
    }

    std::vector<std::vector<bool>> seen(frame.var_count());
    for (std::size_t i = 0; i < frame.var_count(); ++i) seen[i].assign(frame.variable(i).domain.size(), false);
    std::size_t product = 1;
    std::vector<std::size_t> coords(frame.var_count());
    s.for_each_member([&](std::size_t idx) {
        frame.decode_config(idx, coords);
        for (std::size_t i = 0; i < frame.var_count(); ++i) seen[i][coords[i]] = true;
    });
    std::vector<std::size_t> proj_sizes(frame.var_count());
    for (std::size_t i = 0; i < frame.var_count(); ++i) {
        proj_sizes[i] = static_cast<std::size_t>(std::count(seen[i].begin(), seen[i].end(), true));
        product *= proj_sizes[i];
    }
    if (product == s.count()) {
        CylinderTerm term;
        for (std::size_t i = 0; i < frame.var_count(); ++i) {
            if (proj_sizes[i] == frame.variable(i).domain.size()) continue; // unconstrained
            std::vector<std::string> labels;
            for (std::size_t v = 0; v < seen[i].size(); ++v)
                if (seen[i][v]) labels.push_back(frame.variable(i).domain[v]);
            term.restrictions.emplace_back(frame.variable(i).name, std::move(labels));
        }
        expr.terms.push_back(std::move(term));
        return expr;
    }
    // Fallback: one singleton term per member, in configuration order.
    s.for_each_member([&](std::size_t idx) {
        frame.decode_config(idx, coords);
        CylinderTerm term;
        for (std::size_t i = 0; i < frame.var_count(); ++i)
            term.restrictions.emplace_back(frame.variable(i).name,
                                           std::vector<std::string>{frame.variable(i).domain[coords[i]]});
        expr.terms.push_back(std::move(term));
    });
    return expr;
}

} // namespace bft
