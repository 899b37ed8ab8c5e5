#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "bft/error.hpp"
#include "bft/frame.hpp"

namespace bft {

// Absolute tolerance for mass/measure equality and validity checks.
inline constexpr double kMassTol = 1e-9;
// Focal elements with |mass| below this are dropped after an operation.
inline constexpr double kDropEps = 1e-12;
// Largest frame (configuration count) for which exact full-lattice
// transforms are attempted; the lattice has 2^count entries.
inline constexpr std::size_t kDefaultLatticeCap = 24;
// Guard on the focal-closure fallback used past the lattice cap.
inline constexpr std::size_t kClosureGuard = 4096;

enum class BpaClass { proper, generalized, pseudo, invalid };

inline const char* to_string(BpaClass c) {
    switch (c) {
        case BpaClass::proper: return "proper";
        case BpaClass::generalized: return "generalized";
        case BpaClass::pseudo: return "pseudo";
        default: return "invalid";
    }
}

using FocalMap = std::map<ConfigSet, double>;

// A basic probability assignment: a sparse signed mass map over nonempty
// subsets of a frame, kept normalized so the absolute masses sum to 1.
// Negative masses are representable; how respectable they are is a question
// for validate(), not the constructor.
class Bpa {
public:
    static Bpa from_masses(FramePtr frame, FocalMap masses) {
        return normalized(std::move(frame), std::move(masses), nullptr);
    }

    static Bpa vacuous(FramePtr frame) {
        FocalMap m;
        m.emplace(ConfigSet::full_set(frame), 1.0);
        return from_masses(std::move(frame), std::move(m));
    }

    static Bpa point_mass(ConfigSet b) {
        if (b.empty()) throw validation_error("point mass on the empty set");
        FramePtr frame = b.frame();
        FocalMap m;
        m.emplace(std::move(b), 1.0);
        return from_masses(std::move(frame), std::move(m));
    }

    const FramePtr& frame() const { return frame_; }
    const FocalMap& focals() const { return focals_; }
    std::size_t focal_count() const { return focals_.size(); }

    // Scale that was applied to the raw input masses to reach Σ|m| = 1.
    // Diagnostic only; 1 when the input was already normalized.
    double norm_factor() const { return norm_factor_; }

    double mass(const ConfigSet& a) const {
        auto it = focals_.find(a);
        return it == focals_.end() ? 0.0 : it->second;
    }

    double sum_abs() const {
        double s = 0;
        for (const auto& [set, m] : focals_) s += std::abs(m);
        return s;
    }

    bool has_negative_mass() const {
        for (const auto& [set, m] : focals_)
            if (m < 0) return true;
        return false;
    }

    bool is_vacuous() const {
        return focals_.size() == 1 && focals_.begin()->first.is_full();
    }

    // Belief of A: total mass of focal elements inside A.
    double bel(const ConfigSet& a) const {
        double s = 0;
        for (const auto& [set, m] : focals_)
            if (set.is_subset_of(a)) s += m;
        return s;
    }

    // Plausibility of A: 1 minus the belief of the complement.
    double pl(const ConfigSet& a) const { return 1.0 - bel(a.complement()); }

    // Commonality of A: total mass of focal elements containing A.
    // The defining sum; for A = ∅ it degenerates to the signed mass total.
    double q(const ConfigSet& a) const {
        double s = 0;
        for (const auto& [set, m] : focals_)
            if (a.is_subset_of(set)) s += m;
        return s;
    }

private:
    friend Bpa make_operation_result(FramePtr, FocalMap, const char*);

    Bpa(FramePtr frame, FocalMap focals, double norm)
        : frame_(std::move(frame)), focals_(std::move(focals)), norm_factor_(norm) {}

    static Bpa normalized(FramePtr frame, FocalMap masses, const char* annihilation_op) {
        if (!frame) throw validation_error("bpa needs a frame");
        FocalMap kept;
        double sum = 0;
        for (auto& [set, m] : masses) {
            require_same_frame(frame, set.frame(), "bpa construction");
            if (std::abs(m) < kDropEps) continue;
            if (set.empty()) throw validation_error("nonzero mass on the empty set");
            sum += std::abs(m);
            kept.emplace(set, m);
        }
        if (sum < kDropEps) {
            if (annihilation_op)
                throw conflict_error(std::string(annihilation_op) + ": all mass cancelled or conflicted away");
            throw validation_error("total absolute mass is zero");
        }
        // Input that is already normalized (to within the drop threshold) is
        // left untouched, so parse/rewrite cycles are byte stable.
        double scale = std::abs(sum - 1.0) <= kDropEps ? 1.0 : 1.0 / sum;
        if (scale != 1.0)
            for (auto& [set, m] : kept) m *= scale;
        return Bpa(std::move(frame), std::move(kept), scale);
    }

    FramePtr frame_;
    FocalMap focals_;
    double norm_factor_;
};

// Operation-result constructor: identical normalization, but a zero total is
// reported as annihilation/conflict rather than invalid input.
inline Bpa make_operation_result(FramePtr frame, FocalMap masses, const char* op) {
    return Bpa::normalized(std::move(frame), std::move(masses), op);
}

// Mass-wise L-infinity comparison on a shared frame.
inline double mass_distance(const Bpa& a, const Bpa& b) {
    require_same_frame(a.frame(), b.frame(), "mass_distance");
    double d = 0;
    for (const auto& [set, m] : a.focals()) d = std::max(d, std::abs(m - b.mass(set)));
    for (const auto& [set, m] : b.focals()) d = std::max(d, std::abs(m - a.mass(set)));
    return d;
}

inline bool approx_equal(const Bpa& a, const Bpa& b, double tol = kMassTol) {
    return mass_distance(a, b) <= tol;
}

namespace detail {

// Dense lattice transforms over subsets of a frame with few configurations.
// Vectors are indexed by membership bitmask (bit i = configuration i), so
// they require config_count <= 63 and in practice the lattice cap.

inline void check_lattice(const Frame& frame, std::size_t cap, const char* op) {
    if (frame.config_count() > cap || frame.config_count() > 63)
        throw cap_error(std::string(op) + ": frame has " + std::to_string(frame.config_count()) +
                        " configurations, full-lattice cap is " + std::to_string(std::min<std::size_t>(cap, 63)));
}

inline ConfigSet set_from_mask(const FramePtr& frame, std::uint64_t mask) {
    ConfigSet s = ConfigSet::empty_set(frame);
    while (mask) {
        unsigned bit = static_cast<unsigned>(__builtin_ctzll(mask));
        s.insert(bit);
        mask &= mask - 1;
    }
    return s;
}

inline std::vector<double> dense_masses(const Bpa& m) {
    std::vector<double> v(std::size_t{1} << m.frame()->config_count(), 0.0);
    for (const auto& [set, mass] : m.focals()) v[set.low_mask()] += mass;
    return v;
}

// In place: f[A] := Σ_{B ⊆ A} f[B].
inline void zeta_subsets(std::vector<double>& f, std::size_t nbits) {
    for (std::size_t i = 0; i < nbits; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < f.size(); ++mask)
            if (mask & bit) f[mask] += f[mask ^ bit];
    }
}

// In place: f[A] := Σ_{B ⊇ A} f[B].
inline void zeta_supersets(std::vector<double>& f, std::size_t nbits) {
    for (std::size_t i = 0; i < nbits; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < f.size(); ++mask)
            if (!(mask & bit)) f[mask] += f[mask | bit];
    }
}

// In place: inverse of zeta_supersets; recovers masses from commonalities.
inline void mobius_supersets(std::vector<double>& f, std::size_t nbits) {
    for (std::size_t i = 0; i < nbits; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < f.size(); ++mask)
            if (!(mask & bit)) f[mask] -= f[mask | bit];
    }
}

// Closure of the focal family under a commutative binary set operation,
// dropping empty results.  Returns nullopt when it outgrows the guard.
template <typename Op>
std::optional<std::vector<ConfigSet>> focal_closure(const Bpa& m, Op op, std::size_t guard = kClosureGuard) {
    std::set<ConfigSet> seen;
    std::vector<ConfigSet> work;
    for (const auto& [set, mass] : m.focals())
        if (seen.insert(set).second) work.push_back(set);
    for (std::size_t i = 0; i < work.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            ConfigSet c = op(work[i], work[j]);
            if (c.empty() || !seen.insert(c).second) continue;
            work.push_back(c);
            if (work.size() > guard) return std::nullopt;
        }
    return work;
}

} // namespace detail

// Measure table: Bel/Pl/Q per queried set, by direct summation.
struct MeasureRow {
    ConfigSet set;
    double bel;
    double pl;
    double q;
};

struct MeasureTable {
    FramePtr frame;
    std::vector<MeasureRow> rows;
};

enum class EmptyQueryPolicy { error, evaluate };

inline MeasureTable derive_measures(const Bpa& m, std::span<const ConfigSet> queries,
                                    EmptyQueryPolicy empty_policy = EmptyQueryPolicy::error) {
    MeasureTable t;
    t.frame = m.frame();
    for (const auto& a : queries) {
        require_same_frame(m.frame(), a.frame(), "derive_measures");
        if (a.empty() && empty_policy == EmptyQueryPolicy::error)
            throw validation_error("commonality of the empty set is not defined; query nonempty sets");
        t.rows.push_back({a, m.bel(a), m.pl(a), m.q(a)});
    }
    return t;
}

// Recover the unique signed mass function whose commonality matches q on all
// nonempty subsets; the result is rescaled to Σ|m| = 1 (inspect norm_factor()
// for the applied constant).
inline Bpa invert_commonality_dense(const FramePtr& frame, std::vector<double> q,
                                    std::size_t lattice_cap = kDefaultLatticeCap) {
    detail::check_lattice(*frame, lattice_cap, "invert_commonality");
    const std::size_t n = frame->config_count();
    if (q.size() != (std::size_t{1} << n))
        throw validation_error("invert_commonality: commonality vector has wrong size");
    q[0] = 0.0; // the empty-set entry never influences nonempty masses
    detail::mobius_supersets(q, n);
    FocalMap masses;
    for (std::size_t mask = 1; mask < q.size(); ++mask)
        if (std::abs(q[mask]) >= kDropEps) masses.emplace(detail::set_from_mask(frame, mask), q[mask]);
    if (masses.empty()) throw validation_error("invert_commonality: commonalities are identically zero");
    return Bpa::from_masses(frame, std::move(masses));
}

inline Bpa invert_commonality(const FramePtr& frame, const std::map<ConfigSet, double>& q,
                              std::size_t lattice_cap = kDefaultLatticeCap) {
    detail::check_lattice(*frame, lattice_cap, "invert_commonality");
    const std::size_t n = frame->config_count();
    std::vector<double> dense(std::size_t{1} << n, 0.0);
    for (std::size_t mask = 1; mask < dense.size(); ++mask) {
        auto it = q.find(detail::set_from_mask(frame, mask));
        if (it == q.end())
            throw validation_error("invert_commonality: commonality missing for some nonempty subset");
        dense[mask] = it->second;
    }
    return invert_commonality_dense(frame, std::move(dense), lattice_cap);
}

// Union frame for combining measures declared over different variable sets:
// the left frame's variables in order, then the right frame's new ones.
inline FramePtr union_frame(const FramePtr& a, const FramePtr& b) {
    std::vector<Variable> vars = a->variables();
    for (const auto& v : b->variables()) {
        auto i = a->find_var(v.name);
        if (!i) {
            vars.push_back(v);
        } else if (a->variable(*i).domain != v.domain) {
            throw frame_error("variable '" + v.name + "' has conflicting domains");
        }
    }
    return Frame::make(std::move(vars));
}

inline Bpa vacuous_extend(const Bpa& m, const FramePtr& super) {
    if (*super == *m.frame()) return m;
    if (!super->contains_frame(*m.frame()))
        throw frame_error("vacuous_extend: target is not a super-frame");
    FocalMap out;
    for (const auto& [set, mass] : m.focals()) out.emplace(vacuous_extend_set(set, super), mass);
    return make_operation_result(super, std::move(out), "vacuous_extend");
}

// Dempster's rule.  Operands on different frames are first vacuously
// extended to the union frame.  Mass falling on the empty set is discarded
// and the remainder rescaled to Σ|m| = 1; if nothing remains, the operands
// are in total conflict.
inline Bpa combine(const Bpa& m1, const Bpa& m2) {
    if (*m1.frame() != *m2.frame()) {
        FramePtr u = union_frame(m1.frame(), m2.frame());
        return combine(vacuous_extend(m1, u), vacuous_extend(m2, u));
    }
    FocalMap acc;
    for (const auto& [b, mb] : m1.focals())
        for (const auto& [c, mc] : m2.focals()) {
            ConfigSet i = b & c;
            if (i.empty()) continue;
            acc[i] += mb * mc;
        }
    if (acc.empty()) throw conflict_error("combine: total conflict, every focal intersection is empty");
    return make_operation_result(m1.frame(), std::move(acc), "combine");
}

inline Bpa project(const Bpa& m, const FramePtr& sub) {
    if (*sub == *m.frame()) return m;
    FocalMap out;
    for (const auto& [set, mass] : m.focals()) out[project_set(set, sub)] += mass;
    return make_operation_result(sub, std::move(out), "project");
}

inline Bpa project(const Bpa& m, std::span<const std::string> target_vars) {
    return project(m, m.frame()->subframe(target_vars));
}

inline Bpa project(const Bpa& m, std::initializer_list<std::string> target_vars) {
    return project(m, std::span<const std::string>(target_vars.begin(), target_vars.size()));
}

// Shaferian conditioning: combination with the point mass on B.
inline Bpa condition(const Bpa& m, const ConfigSet& b) {
    return combine(m, Bpa::point_mass(b));
}

// Validation report; `exact` is false when the frame exceeded the lattice
// cap and the focal-closure fallback overflowed its guard, in which case the
// minima are lower bounds over the sets actually enumerated.
struct ValidationReport {
    double sum_abs;
    double min_bel;   // over all subsets
    double min_q;     // over all nonempty subsets
    BpaClass tag;
    bool exact;
};

inline ValidationReport validate(const Bpa& m, std::size_t lattice_cap = kDefaultLatticeCap) {
    ValidationReport r{};
    r.sum_abs = m.sum_abs();
    r.exact = true;

    const std::size_t n = m.frame()->config_count();
    if (!m.has_negative_mass()) {
        // All masses nonnegative: Bel and Q minima are trivially reached at
        // sets touching no focal element.
        r.min_bel = 0.0;
        r.min_q = 0.0;
        r.tag = BpaClass::proper;
        return r;
    }

    if (n <= lattice_cap && n <= 63) {
        std::vector<double> bel = detail::dense_masses(m);
        std::vector<double> q = bel;
        detail::zeta_subsets(bel, n);
        detail::zeta_supersets(q, n);
        r.min_bel = *std::min_element(bel.begin(), bel.end());
        r.min_q = q.size() > 1 ? *std::min_element(q.begin() + 1, q.end()) : 0.0;
    } else {
        // Bel only changes value across the union closure of the focal
        // family, Q across the intersection closure; the minima live there.
        auto uc = detail::focal_closure(m, [](const ConfigSet& a, const ConfigSet& b) { return a | b; });
        auto ic = detail::focal_closure(m, [](const ConfigSet& a, const ConfigSet& b) { return a & b; });
        r.min_bel = 0.0; // Bel(∅)
        if (uc) {
            for (const auto& s : *uc) r.min_bel = std::min(r.min_bel, m.bel(s));
        } else {
            for (const auto& [s, mass] : m.focals()) r.min_bel = std::min(r.min_bel, m.bel(s));
            r.exact = false;
        }
        bool full_is_focal = false;
        for (const auto& [s, mass] : m.focals()) full_is_focal = full_is_focal || s.is_full();
        r.min_q = full_is_focal ? std::numeric_limits<double>::infinity() : 0.0;
        if (ic) {
            for (const auto& s : *ic) r.min_q = std::min(r.min_q, m.q(s));
        } else {
            for (const auto& [s, mass] : m.focals()) r.min_q = std::min(r.min_q, m.q(s));
            r.exact = false;
        }
    }

    if (r.min_bel >= -kMassTol)
        r.tag = BpaClass::generalized;
    else if (r.min_q >= -kMassTol)
        r.tag = BpaClass::pseudo;
    else
        r.tag = BpaClass::invalid;
    return r;
}

inline BpaClass classify(const Bpa& m, std::size_t lattice_cap = kDefaultLatticeCap) {
    return validate(m, lattice_cap).tag;
}

// Pseudo-belief check: commonality nonnegative on all nonempty subsets.
// Conservative when the minima could not be verified exactly.
inline bool is_pseudo_valid(const Bpa& m, std::size_t lattice_cap = kDefaultLatticeCap) {
    ValidationReport r = validate(m, lattice_cap);
    return r.exact && r.min_q >= -kMassTol;
}

// Apriorical conditional of the joint given a set of variables: a signed
// bpa c with combine(c, vacuous_extend(project(joint, given))) = joint.
// Construction: commonality quotient Q_joint / Q_marginal↑ on the subset
// lattice, inverted back to masses.  The quotient is the only choice
// compatible with the multiplicativity of commonalities under Dempster's
// rule, and it must come out pseudo-valid (Q ≥ 0) to count as a conditional.
inline Bpa apriorical_conditional(const Bpa& joint, std::span<const std::string> given_vars,
                                  std::size_t lattice_cap = kDefaultLatticeCap) {
    if (given_vars.empty()) return joint; // conditioning on nothing: marginal is vacuous
    const FramePtr& frame = joint.frame();
    Bpa marg_up = vacuous_extend(project(joint, given_vars), frame);

    const std::size_t n = frame->config_count();
    Bpa cond = [&]() {
        if (n <= lattice_cap && n <= 63) {
            std::vector<double> qj = detail::dense_masses(joint);
            std::vector<double> qm = detail::dense_masses(marg_up);
            detail::zeta_supersets(qj, n);
            detail::zeta_supersets(qm, n);
            std::vector<double> qc(qj.size(), 0.0);
            for (std::size_t mask = 1; mask < qj.size(); ++mask) {
                if (std::abs(qm[mask]) < kDropEps) {
                    if (std::abs(qj[mask]) > kMassTol)
                        throw validation_error(
                            "apriorical_conditional: joint has commonality where the marginal has none");
                    continue;
                }
                qc[mask] = qj[mask] / qm[mask];
            }
            return invert_commonality_dense(frame, std::move(qc), lattice_cap);
        }
        // Past the lattice cap: work on the union closure of the joint's
        // focal family and invert over that sub-poset; verified below by the
        // defining identity, since the closure may miss true focal elements.
        auto closure = detail::focal_closure(
            joint, [](const ConfigSet& a, const ConfigSet& b) { return a | b; });
        if (!closure)
            throw cap_error("apriorical_conditional: frame exceeds the lattice cap and the focal closure "
                            "exceeds its guard");
        std::vector<ConfigSet> sets = std::move(*closure);
        std::sort(sets.begin(), sets.end(),
                  [](const ConfigSet& a, const ConfigSet& b) { return a.count() > b.count(); });
        std::vector<double> mc(sets.size(), 0.0);
        FocalMap masses;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            double qm = marg_up.q(sets[i]);
            double qj = joint.q(sets[i]);
            double target;
            if (std::abs(qm) < kDropEps) {
                if (std::abs(qj) > kMassTol)
                    throw validation_error(
                        "apriorical_conditional: joint has commonality where the marginal has none");
                target = 0.0;
            } else {
                target = qj / qm;
            }
            double above = 0;
            for (std::size_t j = 0; j < i; ++j)
                if (sets[i].is_subset_of(sets[j])) above += mc[j];
            mc[i] = target - above;
            if (std::abs(mc[i]) >= kDropEps) masses.emplace(sets[i], mc[i]);
        }
        if (masses.empty())
            throw validation_error("apriorical_conditional: extracted conditional is identically zero");
        Bpa c = Bpa::from_masses(frame, std::move(masses));
        if (mass_distance(combine(c, marg_up), joint) > 1e-7)
            throw validation_error("apriorical_conditional: conditional not representable on the focal closure");
        return c;
    }();

    ValidationReport vr = validate(cond, lattice_cap);
    if (vr.min_q < -kMassTol)
        throw validation_error("apriorical_conditional: extracted conditional is not a pseudo-belief "
                               "(min commonality " + std::to_string(vr.min_q) + ")");
    return cond;
}

inline Bpa apriorical_conditional(const Bpa& joint, std::initializer_list<std::string> given_vars,
                                  std::size_t lattice_cap = kDefaultLatticeCap) {
    return apriorical_conditional(joint, std::span<const std::string>(given_vars.begin(), given_vars.size()),
                                  lattice_cap);
}

} // namespace bft
