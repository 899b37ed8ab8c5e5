#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bft/bpa.hpp"
#include "bft/error.hpp"
#include "bft/frame.hpp"
#include "bft/netmodel.hpp"
#include "bft/population.hpp"

namespace bft {

struct CiOptions {
    double min_samples_per_cell = 5.0;
    std::size_t lattice_cap = kDefaultLatticeCap;
};

struct CiResult {
    double statistic = 0;
    std::size_t df = 0;
    double p_value = 1;
    double critical = 0;
    bool independent = true;
    // Set when observed mass landed in a cell of (numerically) zero or
    // negative expectation; details in note.
    bool flagged = false;
    std::string note;
    double n = 0;
    std::size_t cells = 0;
};

namespace detail {

// Contribution cap for observed-positive cells whose expected count sits at
// the numeric floor; keeps the statistic finite while still failing the test.
inline constexpr double kStatCap = 1e15;
// Slack on the acceptance rule so exact factorizations (statistic zero up to
// rounding) stay independent even at significance level 1.
inline constexpr double kStatSlack = 1e-9;

inline double chi2_critical(std::size_t df, double alpha) {
    if (df == 0) return 0.0;
    if (alpha <= 0) return std::numeric_limits<double>::infinity();
    if (alpha >= 1) return 0.0;
    return boost::math::quantile(boost::math::chi_squared(static_cast<double>(df)), 1.0 - alpha);
}

inline double chi2_pvalue(std::size_t df, double stat) {
    if (df == 0) return stat <= 0 ? 1.0 : 0.0;
    if (!std::isfinite(stat)) return 0.0;
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(df)),
                                                    std::max(stat, 0.0)));
}

} // namespace detail

// Apriorical conditional-independence test of X against Y given Z: the
// population's empirical measure on X∪Y∪Z is compared against the
// recombination of its conditionals given Z, via a χ² statistic over
// set-valued cells (the union of observed and expected focal elements,
// df = cells − 1).
inline CiResult ci_test(const Population& pop, const std::string& x, const std::string& y,
                        std::vector<std::string> z, double alpha, const CiOptions& opts = {}) {
    if (x == y) throw validation_error("ci_test: X and Y must differ");
    for (const auto& v : z)
        if (v == x || v == y) throw validation_error("ci_test: conditioning set overlaps X or Y");
    if (pop.objects.empty()) throw validation_error("ci_test: population is empty");

    std::vector<std::string> scope_names{x, y};
    scope_names.insert(scope_names.end(), z.begin(), z.end());
    FramePtr scope = pop.frame->subframe(scope_names);

    // Observed: weighted counts of effective sets projected onto the scope.
    std::map<ConfigSet, double> observed;
    double n = 0;
    for (const auto& o : pop.objects) {
        observed[project_set(o.effective(), scope)] += o.signed_weight();
        n += o.signed_weight();
    }
    if (n <= 0) throw validation_error("ci_test: population has no positive net weight");

    // Expected: combine the conditionals of the empirical measure.
    Bpa emp = project(empirical_bpa(pop), scope);
    std::vector<std::string> xz{x};
    xz.insert(xz.end(), z.begin(), z.end());
    std::vector<std::string> yz{y};
    yz.insert(yz.end(), z.begin(), z.end());
    Bpa cond_x = vacuous_extend(apriorical_conditional(project(emp, xz), z, opts.lattice_cap), scope);
    Bpa cond_y = vacuous_extend(apriorical_conditional(project(emp, yz), z, opts.lattice_cap), scope);
    Bpa expected_bpa = combine(cond_x, cond_y);
    if (!z.empty())
        expected_bpa = combine(expected_bpa, vacuous_extend(project(emp, z), scope));

    // Cell set: union of observed and expected focal elements.
    std::map<ConfigSet, std::pair<double, double>> cells; // set → (O, E)
    for (const auto& [set, w] : observed) cells[set].first = w;
    for (const auto& [set, m] : expected_bpa.focals()) cells[set].second = n * m;

    CiResult r;
    r.n = n;
    const double e_floor = n * 1e-9;
    double stat = 0;
    // Cells where both counts vanish carry no evidence and are dropped.  A
    // (possibly slightly negative) expectation with no observed mass is
    // extraction noise from the conditionals, not a verdict; only observed
    // mass in a cell the factored measure calls impossible counts against
    // independence, via the floor branch below.
    for (auto it = cells.begin(); it != cells.end();) {
        auto [obs, exp] = it->second;
        if (exp <= e_floor && obs <= 0) {
            it = cells.erase(it);
            continue;
        }
        ++it;
    }
    r.cells = cells.size();
    if (n < opts.min_samples_per_cell * static_cast<double>(r.cells))
        throw validation_error("ci_test: insufficient data (" + std::to_string(n) + " for " +
                               std::to_string(r.cells) + " cells)");
    for (const auto& [set, oe] : cells) {
        auto [obs, exp] = oe;
        if (exp <= e_floor) {
            // Observed mass where the factored measure predicts none.
            stat += std::min(obs * obs / e_floor, detail::kStatCap);
            r.flagged = true;
            if (r.note.empty()) r.note = "observed count in a zero-expectation cell";
            continue;
        }
        double d = obs - exp;
        stat += d * d / exp;
    }
    r.statistic = stat;
    r.df = r.cells > 0 ? r.cells - 1 : 0;
    r.critical = detail::chi2_critical(r.df, alpha);
    r.p_value = detail::chi2_pvalue(r.df, stat);
    r.independent = stat <= r.critical + detail::kStatSlack;
    return r;
}

struct TestLogEntry {
    std::string x;
    std::string y;
    std::vector<std::string> z;
    CiResult result;
    bool errored = false;
    std::string error;
};

struct Skeleton {
    FramePtr frame;
    // adjacency[i][j] for i<j; symmetric storage as a set of index pairs
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::string>> sepsets;
    std::vector<TestLogEntry> log;
};

// PC-style skeleton recovery: start from the complete graph and delete an
// edge as soon as some conditioning set within the current neighborhoods
// (size 0 ... max_cond_size) renders its endpoints independent.  Failed
// tests keep the edge and are flagged in the log.
inline Skeleton learn_skeleton(const Population& pop, double alpha, std::size_t max_cond_size,
                               const CiOptions& opts = {}) {
    if (pop.objects.empty()) throw validation_error("learn_skeleton: population is empty");
    const std::size_t nv = pop.frame->var_count();
    std::vector<std::vector<bool>> adj(nv, std::vector<bool>(nv, false));
    for (std::size_t i = 0; i < nv; ++i)
        for (std::size_t j = 0; j < nv; ++j)
            if (i != j) adj[i][j] = true;

    Skeleton sk;
    sk.frame = pop.frame;

    auto neighbors = [&](std::size_t i, std::size_t exclude) {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < nv; ++k)
            if (k != exclude && adj[i][k]) out.push_back(k);
        return out;
    };

    for (std::size_t level = 0; level <= max_cond_size; ++level) {
        bool any_candidate = false;
        for (std::size_t i = 0; i < nv; ++i) {
            for (std::size_t j = i + 1; j < nv; ++j) {
                if (!adj[i][j]) continue;
                // Conditioning candidates from either endpoint's neighborhood.
                for (int side = 0; side < 2 && adj[i][j]; ++side) {
                    std::size_t a = side == 0 ? i : j;
                    std::size_t b = side == 0 ? j : i;
                    std::vector<std::size_t> nb = neighbors(a, b);
                    if (nb.size() < level) continue;
                    any_candidate = true;
                    // Enumerate level-sized subsets in lexicographic order.
                    std::vector<std::size_t> pick(level);
                    for (std::size_t k = 0; k < level; ++k) pick[k] = k;
                    while (true) {
                        std::vector<std::string> zn;
                        for (auto k : pick) zn.push_back(pop.frame->variable(nb[k]).name);
                        // Both endpoint orders produce the same candidate set
                        // when side == 1 and Z ⊆ common neighbors; rerunning
                        // the identical test is harmless but wasteful, so
                        // skip sets already fully adjacent to the first side.
                        bool duplicate = side == 1;
                        for (auto k : pick) duplicate = duplicate && adj[i][nb[k]];
                        if (!duplicate) {
                            TestLogEntry entry;
                            entry.x = pop.frame->variable(i).name;
                            entry.y = pop.frame->variable(j).name;
                            entry.z = zn;
                            try {
                                entry.result = ci_test(pop, entry.x, entry.y, zn, alpha, opts);
                            } catch (const error& e) {
                                entry.errored = true;
                                entry.error = e.what();
                            }
                            sk.log.push_back(entry);
                            if (!entry.errored && entry.result.independent) {
                                adj[i][j] = adj[j][i] = false;
                                sk.sepsets[{i, j}] = zn;
                                break;
                            }
                        }
                        // next combination
                        if (level == 0) break;
                        std::size_t k = level;
                        while (k > 0) {
                            --k;
                            if (pick[k] + (level - k) < nb.size()) {
                                ++pick[k];
                                for (std::size_t t = k + 1; t < level; ++t) pick[t] = pick[t - 1] + 1;
                                break;
                            }
                            if (k == 0) goto combos_done;
                        }
                    }
                combos_done:;
                }
            }
        }
        if (!any_candidate) break;
    }
    for (std::size_t i = 0; i < nv; ++i)
        for (std::size_t j = i + 1; j < nv; ++j)
            if (adj[i][j]) sk.edges.emplace_back(i, j);
    return sk;
}

// Fit network factors for a fixed DAG from data: decompose the population's
// empirical measure along the parent map.
inline BeliefNetwork fit_factors(const Population& pop, std::vector<std::vector<std::size_t>> parents,
                                 std::size_t lattice_cap = kDefaultLatticeCap) {
    return decompose_joint(empirical_bpa(pop), std::move(parents), lattice_cap);
}

} // namespace bft
