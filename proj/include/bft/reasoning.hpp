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

// An ordered batch of evidence constraints.  A point-mass constraint is
// deterministic observation of a set; anything else is nondeterministic
// evidence applied by drawing (or by analytic expectation).
struct Evidence {
    std::vector<Bpa> constraints;

    static bool is_deterministic(const Bpa& c) {
        return c.focal_count() == 1 && std::abs(c.focals().begin()->second - 1.0) <= kMassTol;
    }

    void check_proper() const {
        for (std::size_t i = 0; i < constraints.size(); ++i)
            if (constraints[i].has_negative_mass())
                throw validation_error("evidence constraint " + std::to_string(i) + " is not proper");
    }
};

// Model engine: fold the evidence into the joint by combination, then
// marginalize onto each target scope.  Deliberately brute force; this is the
// reference computation the data engine is compared against.
inline std::vector<Bpa> reason_model(const Bpa& joint, const Evidence& evidence,
                                     const std::vector<std::vector<std::string>>& targets) {
    evidence.check_proper();
    Bpa posterior = joint;
    for (const auto& c : evidence.constraints) {
        if (!joint.frame()->contains_frame(*c.frame()))
            throw frame_error("evidence constraint is not scoped within the model frame");
        posterior = combine(posterior, vacuous_extend(c, joint.frame()));
    }
    std::vector<Bpa> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(project(posterior, t));
    return out;
}

inline std::vector<Bpa> reason_model(const HypergraphModel& model, const Evidence& evidence,
                                     const std::vector<std::vector<std::string>>& targets) {
    return reason_model(joint_from_model(model), evidence, targets);
}

inline std::vector<Bpa> reason_model(const BeliefNetwork& net, const Evidence& evidence,
                                     const std::vector<std::vector<std::string>>& targets) {
    return reason_model(joint_from_model(net), evidence, targets);
}

enum class DataEngineMode {
    analytic,    // nondeterministic constraints via exact fractional expectation
    monte_carlo, // nondeterministic constraints via seeded per-record draws
};

// Apply evidence to a copy of the population, record by record.
// Deterministic constraints run the destructive-process rule; others either
// split records into fractional expected survivors (analytic) or draw one
// constraint set per record (monte_carlo, constraint k seeded from
// substream(seed, k)).
inline Population apply_evidence(const Population& pop, const Evidence& evidence, DataEngineMode mode,
                                 std::uint64_t seed = 0) {
    evidence.check_proper();
    Population cur = pop;
    for (std::size_t k = 0; k < evidence.constraints.size(); ++k) {
        const Bpa& c = evidence.constraints[k];
        if (Evidence::is_deterministic(c)) {
            ConfigSet b = c.focals().begin()->first;
            if (*b.frame() != *cur.frame) b = vacuous_extend_set(b, cur.frame);
            cur = apply_deterministic_process(cur, b);
        } else if (mode == DataEngineMode::analytic) {
            cur = expected_counts(cur, c);
        } else {
            cur = apply_random_process(cur, c, substream(seed, k).next());
        }
    }
    return cur;
}

inline std::vector<Bpa> reason_data(const Population& pop, const Evidence& evidence,
                                    const std::vector<std::vector<std::string>>& targets,
                                    DataEngineMode mode = DataEngineMode::analytic,
                                    std::uint64_t seed = 0) {
    Population post = apply_evidence(pop, evidence, mode, seed);
    Bpa emp = empirical_bpa(post);
    std::vector<Bpa> out;
    out.reserve(targets.size());
    for (const auto& t : targets) out.push_back(project(emp, t));
    return out;
}

struct CompareReport {
    double max_bel_diff = 0;
    double mean_bel_diff = 0;
    double mass_l1 = 0;
    std::size_t sets_compared = 0;
    // False when the frame was too large for full enumeration and the
    // focal-closure fallback overflowed; differences are then lower bounds.
    bool exact = true;
};

// Belief-level distance between two measures on a common frame: max and
// mean |Bel_a − Bel_b| over all subsets (or over the union of both focal
// closures past the lattice cap), plus the mass-level L1 distance.
inline CompareReport compare_bels(const Bpa& a, const Bpa& b,
                                  std::size_t lattice_cap = kDefaultLatticeCap) {
    require_same_frame(a.frame(), b.frame(), "compare_bels");
    CompareReport r;
    for (const auto& [set, m] : a.focals()) r.mass_l1 += std::abs(m - b.mass(set));
    for (const auto& [set, m] : b.focals())
        if (std::abs(a.mass(set)) < kDropEps) r.mass_l1 += std::abs(m);

    const std::size_t n = a.frame()->config_count();
    double sum = 0;
    if (n <= lattice_cap && n <= 63) {
        std::vector<double> ba = detail::dense_masses(a);
        std::vector<double> bb = detail::dense_masses(b);
        detail::zeta_subsets(ba, n);
        detail::zeta_subsets(bb, n);
        for (std::size_t mask = 0; mask < ba.size(); ++mask) {
            double d = std::abs(ba[mask] - bb[mask]);
            r.max_bel_diff = std::max(r.max_bel_diff, d);
            sum += d;
        }
        r.sets_compared = ba.size();
    } else {
        auto ca = detail::focal_closure(a, [](const ConfigSet& x, const ConfigSet& y) { return x | y; });
        auto cb = detail::focal_closure(b, [](const ConfigSet& x, const ConfigSet& y) { return x | y; });
        std::set<ConfigSet> sets;
        if (ca) sets.insert(ca->begin(), ca->end());
        if (cb) sets.insert(cb->begin(), cb->end());
        if (!ca || !cb) {
            for (const auto& [s, m] : a.focals()) sets.insert(s);
            for (const auto& [s, m] : b.focals()) sets.insert(s);
            r.exact = false;
        }
        for (const auto& s : sets) {
            double d = std::abs(a.bel(s) - b.bel(s));
            r.max_bel_diff = std::max(r.max_bel_diff, d);
            sum += d;
        }
        r.sets_compared = sets.size();
    }
    r.mean_bel_diff = r.sets_compared ? sum / static_cast<double>(r.sets_compared) : 0;
    return r;
}

} // namespace bft
