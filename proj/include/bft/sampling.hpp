#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/netmodel.hpp"
#include "bft/population.hpp"
#include "bft/rng.hpp"

namespace bft {

struct SampleStats {
    std::size_t attempts = 0;
    std::size_t failures = 0; // passes that produced no object
    std::size_t yield() const { return attempts - failures; }
};

struct SampleResult {
    Population population;
    SampleStats stats;
};

namespace detail {

struct FactorTable {
    std::vector<ConfigSet> sets;
    std::vector<double> weights; // |mass|
    std::vector<bool> negative;
    double total = 0;
};

inline FactorTable factor_table(const Bpa& f) {
    FactorTable t;
    for (const auto& [set, m] : f.focals()) {
        t.sets.push_back(set);
        t.weights.push_back(std::abs(m));
        t.negative.push_back(m < 0);
        t.total += std::abs(m);
    }
    return t;
}

// One generation pass over a fixed factor sequence: draw a focal element per
// factor with probability proportional to |mass|, intersect, flip the mark
// on negative masses.  Returns false when the running intersection dies.
inline bool run_pass(SplitMix64& gen, const std::vector<FactorTable>& tables, const FramePtr& frame,
                     ConfigSet& out_set, Sign& out_sign) {
    ConfigSet o = ConfigSet::full_set(frame);
    bool neg = false;
    for (const auto& t : tables) {
        std::size_t j = draw_index(gen, t.weights, t.total);
        o = o & t.sets[j];
        neg = neg != t.negative[j];
        if (o.empty()) return false;
    }
    out_set = o;
    out_sign = neg ? Sign::minus : Sign::plus;
    return true;
}

inline SampleResult sample_passes(const FramePtr& frame, const std::vector<Bpa>& factors,
                                  std::size_t n_attempts, std::uint64_t seed) {
    std::vector<FactorTable> tables;
    tables.reserve(factors.size());
    for (const auto& f : factors) tables.push_back(factor_table(vacuous_extend(f, frame)));
    SampleResult r;
    r.population.frame = frame;
    r.stats.attempts = n_attempts;
    ConfigSet set;
    Sign sign;
    for (std::size_t pass = 0; pass < n_attempts; ++pass) {
        SplitMix64 gen = substream(seed, pass);
        if (!run_pass(gen, tables, frame, set, sign)) {
            ++r.stats.failures;
            continue;
        }
        r.population.objects.push_back({set, ConfigSet::full_set(frame), 1.0, sign});
    }
    return r;
}

} // namespace detail

// Attempt-driven generation from a hypergraph model: each pass draws one
// focal element per factor and keeps the intersection; empty intersections
// are failures, so the yield is a measured quantity, not a target.
// Conditional on survival, the final set is distributed like the mass of the
// factors' Dempster combination.
inline SampleResult sample_hypergraph(const HypergraphModel& model, std::size_t n_attempts,
                                      std::uint64_t seed) {
    SampleResult r = detail::sample_passes(model.frame, model.factors, n_attempts, seed);
    if (n_attempts > 0 && r.stats.yield() == 0)
        throw conflict_error("sample_hypergraph: every pass failed, model is in total conflict");
    return r;
}

// Signed generation for models with pseudo factors: identical passes, but
// objects carry the accumulated mark and opposite marks on the same cell are
// cancelled before returning (unless suppressed for inspection).
inline SampleResult sample_signed(const HypergraphModel& model, std::size_t n_attempts, std::uint64_t seed,
                                  bool cancel = true, std::size_t lattice_cap = kDefaultLatticeCap) {
    for (std::size_t k = 0; k < model.factors.size(); ++k)
        if (!is_pseudo_valid(model.factors[k], lattice_cap))
            throw validation_error("sample_signed: factor " + std::to_string(k) + " is not pseudo-valid");
    SampleResult r = detail::sample_passes(model.frame, model.factors, n_attempts, seed);
    if (n_attempts > 0 && r.stats.yield() == 0)
        throw conflict_error("sample_signed: every pass failed, model is in total conflict");
    if (cancel) {
        r.population = cancel_signed(r.population);
        if (n_attempts > 0 && r.population.objects.empty())
            throw conflict_error("sample_signed: sample annihilated by sign cancellation");
    }
    return r;
}

// Network generation: one object per pass, visiting variables in topological
// order.  At each node the factor's focal elements are filtered to those
// compatible with the object built so far and the draw renormalized over
// them, so a pass can only abort when a node has no compatible focal element
// at all (an inconsistent model).
inline SampleResult sample_network(const BeliefNetwork& net, std::size_t n, std::uint64_t seed,
                                   bool cancel = true) {
    std::vector<std::size_t> order = topological_order(net.parents);
    std::vector<detail::FactorTable> tables(net.factors.size());
    for (std::size_t i = 0; i < net.factors.size(); ++i)
        tables[i] = detail::factor_table(vacuous_extend(net.factors[i], net.frame));

    SampleResult r;
    r.population.frame = net.frame;
    r.stats.attempts = n;
    std::vector<double> filtered_weights;
    std::vector<std::size_t> filtered_idx;
    for (std::size_t pass = 0; pass < n; ++pass) {
        SplitMix64 gen = substream(seed, pass);
        ConfigSet o = ConfigSet::full_set(net.frame);
        bool neg = false;
        bool aborted = false;
        for (std::size_t node : order) {
            const auto& t = tables[node];
            filtered_weights.clear();
            filtered_idx.clear();
            double total = 0;
            for (std::size_t j = 0; j < t.sets.size(); ++j) {
                if (!t.sets[j].intersects(o)) continue;
                filtered_idx.push_back(j);
                filtered_weights.push_back(t.weights[j]);
                total += t.weights[j];
            }
            if (filtered_idx.empty()) {
                aborted = true;
                break;
            }
            std::size_t j = filtered_idx[draw_index(gen, filtered_weights, total)];
            o = o & t.sets[j];
            neg = neg != t.negative[j];
        }
        if (aborted) {
            ++r.stats.failures;
            continue;
        }
        r.population.objects.push_back({o, ConfigSet::full_set(net.frame), 1.0,
                                        neg ? Sign::minus : Sign::plus});
    }
    if (n > 0 && r.stats.yield() == 0)
        throw conflict_error("sample_network: every pass aborted, model is inconsistent");
    if (cancel) {
        r.population = cancel_signed(r.population);
        if (n > 0 && r.population.objects.empty())
            throw conflict_error("sample_network: sample annihilated by sign cancellation");
    }
    return r;
}

} // namespace bft
