#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/frame.hpp"

namespace bft {

// Joint measure represented as a combination of factors over variable
// subsets.  Factor scopes must jointly cover the frame.
struct HypergraphModel {
    FramePtr frame;
    std::vector<Bpa> factors;
};

// Joint measure represented along a DAG: one factor per variable, scoped to
// the variable plus its parents, intended as the conditional of the joint
// given the parents.
struct BeliefNetwork {
    FramePtr frame;
    std::vector<std::vector<std::size_t>> parents; // per variable index
    std::vector<Bpa> factors;                      // per variable index

    std::vector<std::string> scope_names(std::size_t node) const {
        std::vector<std::string> names{frame->variable(node).name};
        for (auto p : parents[node]) names.push_back(frame->variable(p).name);
        return names;
    }
};

// Topological order of a parent map; rejects cycles.
inline std::vector<std::size_t> topological_order(const std::vector<std::vector<std::size_t>>& parents) {
    const std::size_t n = parents.size();
    std::vector<std::size_t> remaining_parents(n, 0);
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 0; i < n; ++i) {
        remaining_parents[i] = parents[i].size();
        for (auto p : parents[i]) {
            if (p >= n) throw validation_error("parent index out of range");
            children[p].push_back(i);
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (remaining_parents[i] == 0) order.push_back(i);
    for (std::size_t k = 0; k < order.size(); ++k)
        for (auto c : children[order[k]])
            if (--remaining_parents[c] == 0) order.push_back(c);
    if (order.size() != n) throw validation_error("parent map contains a cycle");
    return order;
}

namespace detail {

inline Bpa fold_factors(const FramePtr& frame, const std::vector<Bpa>& factors) {
    if (factors.empty()) return Bpa::vacuous(frame);
    std::vector<Bpa> ext;
    ext.reserve(factors.size());
    for (const auto& f : factors) ext.push_back(vacuous_extend(f, frame));
    // Fewest focal elements first keeps intermediate products small; the
    // result itself is order-invariant.
    std::sort(ext.begin(), ext.end(),
              [](const Bpa& a, const Bpa& b) { return a.focal_count() < b.focal_count(); });
    Bpa acc = ext.front();
    for (std::size_t i = 1; i < ext.size(); ++i) acc = combine(acc, ext[i]);
    return acc;
}

} // namespace detail

inline Bpa joint_from_model(const HypergraphModel& model) {
    return detail::fold_factors(model.frame, model.factors);
}

inline Bpa joint_from_model(const BeliefNetwork& net) {
    return detail::fold_factors(net.frame, net.factors);
}

// Factor the joint along the DAG: for each node, the conditional of the
// joint's projection onto {node} ∪ parents, given the parents.  When the DAG
// is an independence map of the joint, recombining the factors reproduces it.
inline BeliefNetwork decompose_joint(const Bpa& m, std::vector<std::vector<std::size_t>> parents,
                                     std::size_t lattice_cap = kDefaultLatticeCap) {
    const FramePtr& frame = m.frame();
    if (parents.size() != frame->var_count())
        throw validation_error("decompose_joint: parent map size does not match the frame");
    topological_order(parents); // existence check only; factors are per-node local
    BeliefNetwork net;
    net.frame = frame;
    net.parents = std::move(parents);
    net.factors.reserve(frame->var_count());
    for (std::size_t i = 0; i < frame->var_count(); ++i) {
        std::vector<std::string> scope{frame->variable(i).name};
        std::vector<std::string> given;
        for (auto p : net.parents[i]) {
            scope.push_back(frame->variable(p).name);
            given.push_back(frame->variable(p).name);
        }
        Bpa local = project(m, scope);
        net.factors.push_back(apriorical_conditional(local, given, lattice_cap));
    }
    return net;
}

struct ModelReport {
    bool ok = true;
    std::vector<std::string> issues;
    // Max mass deviation of joint_from_model against a reference joint;
    // negative when no reference was checked.
    double roundtrip_deviation = -1.0;

    void fail(std::string msg) {
        ok = false;
        issues.push_back(std::move(msg));
    }
};

inline ModelReport validate_model(const HypergraphModel& model, std::size_t lattice_cap = kDefaultLatticeCap) {
    ModelReport r;
    std::vector<bool> covered(model.frame->var_count(), false);
    if (model.factors.empty()) r.fail("model has no factors");
    for (std::size_t k = 0; k < model.factors.size(); ++k) {
        const Bpa& f = model.factors[k];
        if (!model.frame->contains_frame(*f.frame())) {
            r.fail("factor " + std::to_string(k) + " is not scoped within the frame");
            continue;
        }
        for (const auto& v : f.frame()->variables()) covered[model.frame->var_index(v.name)] = true;
        if (validate(f, lattice_cap).tag == BpaClass::invalid)
            r.fail("factor " + std::to_string(k) + " is not a valid measure of any class");
    }
    for (std::size_t i = 0; i < covered.size(); ++i)
        if (!covered[i]) r.fail("variable '" + model.frame->variable(i).name + "' is covered by no factor");
    return r;
}

inline ModelReport validate_model(const BeliefNetwork& net, const Bpa* reference_joint = nullptr,
                                  std::size_t lattice_cap = kDefaultLatticeCap) {
    ModelReport r;
    if (net.parents.size() != net.frame->var_count() || net.factors.size() != net.frame->var_count()) {
        r.fail("network needs one parent list and one factor per variable");
        return r;
    }
    try {
        topological_order(net.parents);
    } catch (const validation_error& e) {
        r.fail(e.what());
    }
    for (std::size_t i = 0; i < net.factors.size(); ++i) {
        std::vector<std::string> want = net.scope_names(i);
        std::vector<std::string> got;
        for (const auto& v : net.factors[i].frame()->variables()) got.push_back(v.name);
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        if (want != got)
            r.fail("factor for '" + net.frame->variable(i).name + "' is not scoped to the node plus its parents");
        else if (!is_pseudo_valid(net.factors[i], lattice_cap))
            r.fail("factor for '" + net.frame->variable(i).name + "' is not pseudo-valid (negative commonality)");
    }
    if (r.ok && reference_joint) {
        try {
            r.roundtrip_deviation = mass_distance(joint_from_model(net), *reference_joint);
            if (r.roundtrip_deviation > kMassTol)
                r.fail("recombined joint deviates from the reference by " +
                       std::to_string(r.roundtrip_deviation));
        } catch (const error& e) {
            r.fail(std::string("recombination failed: ") + e.what());
        }
    }
    return r;
}

} // namespace bft
