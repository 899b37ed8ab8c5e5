#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/frame.hpp"
#include "bft/rng.hpp"

namespace bft {

enum class Sign : std::uint8_t { plus, minus };

// A population record: an object whose measured attribute is a set of
// configurations and whose label is the set of configurations destructive
// processing has not yet excluded.  The object's effective value is the
// intersection of the two.
struct LabeledObject {
    ConfigSet attribute;
    ConfigSet label;
    double weight = 1.0;
    Sign sign = Sign::plus;

    double signed_weight() const { return sign == Sign::minus ? -weight : weight; }
    ConfigSet effective() const { return attribute & label; }

    bool operator==(const LabeledObject& o) const {
        return attribute == o.attribute && label == o.label && weight == o.weight && sign == o.sign;
    }
};

struct Population {
    FramePtr frame;
    std::vector<LabeledObject> objects;
    std::string provenance;

    std::size_t size() const { return objects.size(); }

    double total_signed_weight() const {
        double s = 0;
        for (const auto& o : objects) s += o.signed_weight();
        return s;
    }

    double total_abs_weight() const {
        double s = 0;
        for (const auto& o : objects) s += o.weight;
        return s;
    }

    void check_object(const LabeledObject& o) const {
        require_same_frame(frame, o.attribute.frame(), "population object");
        require_same_frame(frame, o.label.frame(), "population object");
        if (o.attribute.empty()) throw validation_error("object attribute is empty");
        if (o.label.empty()) throw validation_error("object label is empty");
        if (o.effective().empty()) throw validation_error("object attribute and label do not intersect");
        if (!(o.weight > 0)) throw validation_error("object weight must be positive");
    }

    void push(LabeledObject o) {
        check_object(o);
        objects.push_back(std::move(o));
    }
};

// Empirical measure: each object votes its effective set with its signed
// weight.  A negative total flips all signs (the normalizing division), then
// absolute masses are rescaled to 1.
inline Bpa empirical_bpa(const Population& pop) {
    if (pop.objects.empty()) throw validation_error("empirical_bpa: population is empty");
    FocalMap cells;
    for (const auto& o : pop.objects) cells[o.effective()] += o.signed_weight();
    double total = 0;
    for (const auto& [set, w] : cells) total += w;
    if (std::abs(total) < kDropEps)
        throw conflict_error("empirical_bpa: net population weight is zero");
    if (total < 0)
        for (auto& [set, w] : cells) w = -w;
    return make_operation_result(pop.frame, std::move(cells), "empirical_bpa");
}

// Destructive process with a fixed constraint set B: objects whose effective
// value misses B are rejected, survivors get label := label ∩ B.  Realizes
// Dempster conditioning of the empirical measure on B.
inline Population apply_deterministic_process(const Population& pop, const ConfigSet& b) {
    require_same_frame(pop.frame, b.frame(), "apply_deterministic_process");
    if (b.empty()) throw validation_error("process constraint set is empty");
    Population out;
    out.frame = pop.frame;
    out.provenance = pop.provenance;
    for (const auto& o : pop.objects) {
        if (!o.effective().intersects(b)) continue;
        out.objects.push_back({o.attribute, o.label & b, o.weight, o.sign});
    }
    if (!pop.objects.empty() && out.objects.empty())
        throw conflict_error("apply_deterministic_process: population annihilated");
    return out;
}

namespace detail {

// proc extended to the population's frame, with focal sets and cumulative
// weights laid out for drawing.
struct ProcTable {
    std::vector<ConfigSet> sets;
    std::vector<double> weights;
    double total;
};

inline ProcTable proc_table(const Population& pop, const Bpa& proc) {
    if (proc.has_negative_mass())
        throw validation_error("random processes require a proper measure (no negative masses)");
    Bpa ext = (*proc.frame() == *pop.frame) ? proc : vacuous_extend(proc, pop.frame);
    ProcTable t;
    t.total = 0;
    for (const auto& [set, m] : ext.focals()) {
        t.sets.push_back(set);
        t.weights.push_back(m);
        t.total += m;
    }
    return t;
}

} // namespace detail

// Nondeterministic destructive process: per object one constraint set is
// drawn from proc's focal distribution, then the deterministic rule applies.
// Object i consumes substream(seed, i), so results do not depend on how the
// work is scheduled.
inline Population apply_random_process(const Population& pop, const Bpa& proc, std::uint64_t seed) {
    auto table = detail::proc_table(pop, proc);
    Population out;
    out.frame = pop.frame;
    out.provenance = pop.provenance;
    for (std::size_t i = 0; i < pop.objects.size(); ++i) {
        const auto& o = pop.objects[i];
        SplitMix64 gen = substream(seed, i);
        const ConfigSet& b = table.sets[draw_index(gen, table.weights, table.total)];
        if (!o.effective().intersects(b)) continue;
        out.objects.push_back({o.attribute, o.label & b, o.weight, o.sign});
    }
    if (!pop.objects.empty() && out.objects.empty())
        throw conflict_error("apply_random_process: population annihilated");
    return out;
}

// Analytic expectation of apply_random_process: each object splits into one
// fractional survivor per constraint set that intersects it.  The empirical
// measure of the result equals the Dempster combination of the input's
// empirical measure with proc, exactly.
inline Population expected_counts(const Population& pop, const Bpa& proc) {
    auto table = detail::proc_table(pop, proc);
    Population out;
    out.frame = pop.frame;
    out.provenance = pop.provenance;
    for (const auto& o : pop.objects) {
        for (std::size_t j = 0; j < table.sets.size(); ++j) {
            const ConfigSet& b = table.sets[j];
            if (!o.effective().intersects(b)) continue;
            out.objects.push_back({o.attribute, o.label & b, o.weight * table.weights[j], o.sign});
        }
    }
    if (!pop.objects.empty() && out.objects.empty())
        throw conflict_error("expected_counts: population annihilated");
    return out;
}

// Sign cancellation: within each (attribute, label) cell the negative weight
// is subtracted from the positive.  Cells free of negatives pass through
// untouched record-by-record; a cell with any negative collapses to one net
// record at its first position, or disappears when nothing remains.
inline Population cancel_signed(const Population& pop) {
    std::map<std::pair<ConfigSet, ConfigSet>, double> net;
    std::map<std::pair<ConfigSet, ConfigSet>, bool> has_neg;
    for (const auto& o : pop.objects) {
        auto key = std::make_pair(o.attribute, o.label);
        net[key] += o.signed_weight();
        if (o.sign == Sign::minus) has_neg[key] = true;
    }
    Population out;
    out.frame = pop.frame;
    out.provenance = pop.provenance;
    std::map<std::pair<ConfigSet, ConfigSet>, bool> emitted;
    for (const auto& o : pop.objects) {
        auto key = std::make_pair(o.attribute, o.label);
        if (!has_neg.count(key)) {
            out.objects.push_back(o);
            continue;
        }
        if (emitted[key]) continue;
        emitted[key] = true;
        double w = net[key];
        if (w < kDropEps) continue;
        out.objects.push_back({o.attribute, o.label, w, Sign::plus});
    }
    return out;
}

} // namespace bft
