#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace bft;
using Catch::Approx;

namespace {
constexpr double kTol = 1e-9;
}

TEST_CASE("catalogue population yields the catalogue measure") {
    Population pop = tu::pub_population();
    REQUIRE(pop.total_abs_weight() == Approx(100.0).margin(kTol));
    Bpa emp = empirical_bpa(pop);
    REQUIRE(mass_distance(emp, tu::pub_bpa()) <= kTol);
}

TEST_CASE("weighted records and expanded unit records agree") {
    Population pop = tu::pub_population();
    Population units = tu::expand_units(pop);
    REQUIRE(units.size() == 100);
    REQUIRE(mass_distance(empirical_bpa(pop), empirical_bpa(units)) <= kTol);
}

TEST_CASE("uninformative population yields the vacuous measure") {
    FramePtr f = tu::pub_frame();
    Population pop;
    pop.frame = f;
    pop.push({ConfigSet::full_set(f), ConfigSet::full_set(f), 1.0, Sign::plus});
    REQUIRE(empirical_bpa(pop).is_vacuous());
}

TEST_CASE("population sanity checks") {
    FramePtr f = tu::pub_frame();
    Population pop;
    pop.frame = f;
    REQUIRE_THROWS_AS(empirical_bpa(pop), validation_error);
    REQUIRE_THROWS_AS(pop.push({ConfigSet::empty_set(f), ConfigSet::full_set(f), 1.0, Sign::plus}),
                      validation_error);
    REQUIRE_THROWS_AS(pop.push({tu::pub_set(f, {0}), tu::pub_set(f, {1}), 1.0, Sign::plus}),
                      validation_error);
    REQUIRE_THROWS_AS(pop.push({tu::pub_set(f, {0}), ConfigSet::full_set(f), 0.0, Sign::plus}),
                      validation_error);
}

TEST_CASE("opposite-sign records cancel inside the empirical measure") {
    FramePtr f = tu::pub_frame();
    ConfigSet s1 = tu::pub_set(f, {0, 1});
    ConfigSet s2 = tu::pub_set(f, {2});
    Population pop;
    pop.frame = f;
    pop.push({s1, ConfigSet::full_set(f), 1.0, Sign::plus});
    pop.push({s1, ConfigSet::full_set(f), 1.0, Sign::minus});
    pop.push({s2, ConfigSet::full_set(f), 1.0, Sign::plus});
    Bpa emp = empirical_bpa(pop);
    REQUIRE(emp.focal_count() == 1);
    REQUIRE(emp.mass(s2) == Approx(1.0).margin(kTol));

    // Remove the survivor and the net weight is zero.
    Population dead;
    dead.frame = f;
    dead.push({s1, ConfigSet::full_set(f), 1.0, Sign::plus});
    dead.push({s1, ConfigSet::full_set(f), 1.0, Sign::minus});
    REQUIRE_THROWS_AS(empirical_bpa(dead), conflict_error);
}

TEST_CASE("deterministic processing of the catalogue") {
    Population pop = tu::pub_population();
    FramePtr f = pop.frame;
    Population after = apply_deterministic_process(pop, tu::pub_evidence1(f));

    REQUIRE(after.total_abs_weight() == Approx(98.0).margin(kTol));
    auto cells = tu::cell_weights(after);
    auto want = tu::pub_counts_after_e1();
    REQUIRE(cells.size() == want.size());
    for (const auto& [members, w] : want) REQUIRE(cells.at(members) == Approx(w).margin(kTol));

    // Labels shrank to the constraint, attributes are untouched.
    for (const auto& o : after.objects) {
        REQUIRE(o.label.is_subset_of(tu::pub_evidence1(f)));
    }

    SECTION("full-frame constraint changes nothing") {
        Population same = apply_deterministic_process(pop, ConfigSet::full_set(f));
        REQUIRE(same.objects == pop.objects);
    }

    SECTION("processing is idempotent") {
        Population twice = apply_deterministic_process(after, tu::pub_evidence1(f));
        REQUIRE(twice.objects == after.objects);
    }

    SECTION("disjoint constraint annihilates") {
        Population small;
        small.frame = f;
        small.push({tu::pub_set(f, {0}), ConfigSet::full_set(f), 1.0, Sign::plus});
        REQUIRE_THROWS_AS(apply_deterministic_process(small, tu::pub_set(f, {3})), conflict_error);
    }
}

TEST_CASE("deterministic processing realizes conditioning") {
    SplitMix64 g = substream(301, 0);
    int done = 0;
    for (int rep = 0; rep < 400 && done < 200; ++rep) {
        FramePtr f = tu::random_frame(g, 3, 3, 12);
        Population pop = tu::random_population(g, f, 30);
        ConfigSet b = tu::random_nonempty_set(g, f);
        try {
            Population after = apply_deterministic_process(pop, b);
            Bpa lhs = empirical_bpa(after);
            Bpa rhs = condition(empirical_bpa(pop), b);
            REQUIRE(mass_distance(lhs, rhs) <= kTol);
            ++done;
        } catch (const conflict_error&) {
            continue; // nothing survived; conditioning is undefined too
        }
    }
    REQUIRE(done >= 200);
}

TEST_CASE("expected counts reproduce the catalogue projection table") {
    Population pop = tu::pub_population();
    FramePtr f = pop.frame;
    Population after_e1 = apply_deterministic_process(pop, tu::pub_evidence1(f));
    Population expected = expected_counts(after_e1, tu::pub_process(f));

    REQUIRE(expected.total_abs_weight() == Approx(95.6).margin(kTol));
    auto cells = tu::cell_weights(expected);
    auto want = tu::pub_counts_after_proc();
    REQUIRE(cells.size() == want.size());
    for (const auto& [members, w] : want) REQUIRE(cells.at(members) == Approx(w).margin(kTol));
}

TEST_CASE("expected counts realize combination") {
    SplitMix64 g = substream(302, 0);
    int done = 0;
    for (int rep = 0; rep < 400 && done < 200; ++rep) {
        FramePtr f = tu::random_frame(g, 3, 3, 12);
        Population pop = tu::random_population(g, f, 25);
        Bpa proc = tu::random_proper_bpa(g, f);
        try {
            Population after = expected_counts(pop, proc);
            Bpa lhs = empirical_bpa(after);
            Bpa rhs = combine(empirical_bpa(pop), proc);
            REQUIRE(mass_distance(lhs, rhs) <= kTol);
            ++done;
        } catch (const conflict_error&) {
            continue;
        }
    }
    REQUIRE(done >= 200);
}

TEST_CASE("expected counts with a vacuous process change nothing") {
    Population pop = tu::pub_population();
    Population after = expected_counts(pop, Bpa::vacuous(pop.frame));
    REQUIRE(after.objects == pop.objects);
}

TEST_CASE("random processing basics") {
    Population pop = tu::pub_population();
    FramePtr f = pop.frame;

    SECTION("vacuous process is the identity for any seed") {
        for (std::uint64_t seed : {0ull, 7ull, 123456789ull}) {
            Population after = apply_random_process(pop, Bpa::vacuous(f), seed);
            REQUIRE(after.objects == pop.objects);
        }
    }

    SECTION("single-focal process equals the deterministic rule") {
        Bpa proc = Bpa::point_mass(tu::pub_evidence1(f));
        Population a = apply_random_process(pop, proc, 42);
        Population b = apply_deterministic_process(pop, tu::pub_evidence1(f));
        REQUIRE(a.objects == b.objects);
    }

    SECTION("same seed, same outcome; labels only ever shrink") {
        Bpa proc = tu::pub_process(f);
        Population a = apply_random_process(pop, proc, 99);
        Population b = apply_random_process(pop, proc, 99);
        REQUIRE(a.objects == b.objects);
        for (const auto& o : a.objects) {
            REQUIRE(o.label.is_subset_of(ConfigSet::full_set(f)));
            REQUIRE(!o.effective().empty());
        }
    }

    SECTION("negative-mass process is rejected") {
        FocalMap masses;
        masses.emplace(tu::pub_set(f, {0}), -0.2);
        masses.emplace(ConfigSet::full_set(f), 0.8);
        Bpa bad = Bpa::from_masses(f, std::move(masses));
        REQUIRE_THROWS_AS(apply_random_process(pop, bad, 1), validation_error);
        REQUIRE_THROWS_AS(expected_counts(pop, bad), validation_error);
    }
}

TEST_CASE("random processing matches expected counts statistically") {
    Population pop = tu::expand_units(
        apply_deterministic_process(tu::pub_population(), tu::pub_evidence1(tu::pub_frame())));
    FramePtr f = pop.frame;
    Bpa proc = tu::pub_process(f);

    const std::size_t reps = 4000;
    std::map<std::vector<std::size_t>, double> sums;
    for (std::size_t r = 0; r < reps; ++r) {
        Population after = apply_random_process(pop, proc, 1000 + r);
        for (const auto& [members, w] : tu::cell_weights(after)) sums[members] += w;
    }

    // Per-cell variance of one replication: each unit object lands in a cell
    // with the branch probability, so Var = Σ_objects p(1-p).
    //   {AX}:        5 certain + 11 at p=0.3          -> 11·0.21 = 2.31
    //   {BY}:        15 certain                        -> 0
    //   {CZ}:        8 at p=0.7                        -> 1.68
    //   {AX,BY}:     33 certain + 26 at p=0.3          -> 5.46
    //   {AX,CZ}:     11 at p=0.7                       -> 2.31
    //   {AX,BY,CZ}:  26 at p=0.7                       -> 5.46
    std::map<std::vector<std::size_t>, double> variance{
        {{0}, 2.31}, {{1}, 0.0}, {{2}, 1.68}, {{0, 1}, 5.46}, {{0, 2}, 2.31}, {{0, 1, 2}, 5.46}};

    auto want = tu::pub_counts_after_proc();
    for (const auto& [members, expected] : want) {
        double mean = sums[members] / static_cast<double>(reps);
        double sigma = std::sqrt(variance.at(members) / static_cast<double>(reps));
        INFO("cell size " << members.size() << " mean " << mean << " expected " << expected);
        REQUIRE(std::abs(mean - expected) <= 4 * sigma + 1e-9);
    }
}

TEST_CASE("sign cancellation") {
    FramePtr f = tu::pub_frame();
    ConfigSet s1 = tu::pub_set(f, {0, 1});
    ConfigSet s2 = tu::pub_set(f, {2, 3});
    ConfigSet full = ConfigSet::full_set(f);

    SECTION("all-positive populations pass through untouched") {
        Population pop = tu::pub_population();
        Population out = cancel_signed(pop);
        REQUIRE(out.objects == pop.objects);
    }

    SECTION("exact cancellation removes the cell") {
        Population pop;
        pop.frame = f;
        pop.push({s1, full, 2.0, Sign::plus});
        pop.push({s1, full, 2.0, Sign::minus});
        pop.push({s2, full, 1.0, Sign::plus});
        Population out = cancel_signed(pop);
        REQUIRE(out.size() == 1);
        REQUIRE(out.objects[0].attribute == s2);
        REQUIRE(out.objects[0].sign == Sign::plus);
    }

    SECTION("partial cancellation nets the cell at its first position") {
        Population pop;
        pop.frame = f;
        pop.push({s1, full, 3.0, Sign::plus});
        pop.push({s2, full, 1.0, Sign::plus});
        pop.push({s1, full, 1.0, Sign::minus});
        Population out = cancel_signed(pop);
        REQUIRE(out.size() == 2);
        REQUIRE(out.objects[0].attribute == s1);
        REQUIRE(out.objects[0].weight == Approx(2.0).margin(kTol));
        REQUIRE(out.objects[0].sign == Sign::plus);
        REQUIRE(out.objects[1].attribute == s2);
    }

    SECTION("cells with a negative net disappear") {
        Population pop;
        pop.frame = f;
        pop.push({s1, full, 1.0, Sign::plus});
        pop.push({s1, full, 3.0, Sign::minus});
        pop.push({s2, full, 1.0, Sign::plus});
        Population out = cancel_signed(pop);
        REQUIRE(out.size() == 1);
        REQUIRE(out.objects[0].attribute == s2);
    }

    SECTION("cancellation is idempotent") {
        Population pop;
        pop.frame = f;
        pop.push({s1, full, 3.0, Sign::plus});
        pop.push({s1, full, 1.0, Sign::minus});
        pop.push({s2, full, 2.5, Sign::plus});
        Population once = cancel_signed(pop);
        Population twice = cancel_signed(once);
        REQUIRE(once.objects == twice.objects);
    }

    SECTION("cells with different labels stay distinct") {
        Population pop;
        pop.frame = f;
        pop.push({s1, full, 1.0, Sign::plus});
        pop.push({s1, s1, 1.0, Sign::minus});
        Population out = cancel_signed(pop);
        // Two distinct (attribute, label) cells; each nets on its own.
        REQUIRE(out.size() == 1);
        REQUIRE(out.objects[0].label == full);
        REQUIRE(out.objects[0].sign == Sign::plus);
    }
}
