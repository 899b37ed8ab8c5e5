#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace bft;
using Catch::Approx;

namespace {
constexpr double kTol = 1e-9;

// Independent oracle for the pass semantics: enumerate every possible draw
// tuple (one focal element per factor), accumulate the signed product mass on
// the tuple's intersection, and normalize the survivors.  This must agree
// with the pairwise Dempster fold.
Bpa enumerate_passes(const FramePtr& frame, const std::vector<Bpa>& factors) {
    std::vector<std::vector<std::pair<ConfigSet, double>>> lists;
    for (const auto& f : factors) {
        Bpa ext = vacuous_extend(f, frame);
        lists.emplace_back(ext.focals().begin(), ext.focals().end());
    }
    FocalMap acc;
    std::vector<std::size_t> pick(lists.size(), 0);
    while (true) {
        ConfigSet s = ConfigSet::full_set(frame);
        double prod = 1.0;
        for (std::size_t k = 0; k < lists.size(); ++k) {
            s = s & lists[k][pick[k]].first;
            prod *= lists[k][pick[k]].second;
        }
        if (!s.empty()) acc[s] += prod;
        std::size_t k = lists.size();
        bool done = true;
        while (k > 0) {
            --k;
            if (++pick[k] < lists[k].size()) {
                done = false;
                break;
            }
            pick[k] = 0;
        }
        if (done) break;
    }
    return make_operation_result(frame, std::move(acc), "enumerate_passes");
}
} // namespace

TEST_CASE("draw_index follows the weights") {
    std::vector<double> w{0.2, 0.3, 0.5};
    SplitMix64 g = substream(501, 0);
    const std::size_t n = 100000;
    std::vector<double> counts(3, 0);
    for (std::size_t i = 0; i < n; ++i) counts[draw_index(g, w, 1.0)] += 1;
    for (std::size_t k = 0; k < 3; ++k)
        REQUIRE(tu::within_4sigma(w[k], counts[k] / n, static_cast<double>(n)));
}

TEST_CASE("substreams are reproducible") {
    SplitMix64 a = substream(77, 3);
    SplitMix64 b = substream(77, 3);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
    SplitMix64 c = substream(77, 4);
    bool differs = false;
    SplitMix64 a2 = substream(77, 3);
    for (int i = 0; i < 100; ++i) differs = differs || (a2.next() != c.next());
    REQUIRE(differs);
}

TEST_CASE("tuple enumeration agrees with the Dempster fold") {
    SplitMix64 g = substream(502, 0);
    int done = 0;
    for (int rep = 0; rep < 100 && done < 50; ++rep) {
        FramePtr f = tu::random_frame(g, 3, 3, 12);
        std::vector<Bpa> factors;
        std::size_t k = 1 + g.next() % 3;
        for (std::size_t i = 0; i < k; ++i) factors.push_back(tu::random_proper_bpa(g, f, 4));
        try {
            Bpa fold = joint_from_model(HypergraphModel{f, factors});
            Bpa enumerated = enumerate_passes(f, factors);
            REQUIRE(mass_distance(fold, enumerated) <= kTol);
            ++done;
        } catch (const conflict_error&) {
        }
    }
    REQUIRE(done >= 50);
}

TEST_CASE("hypergraph sampling from the catalogue measure") {
    FramePtr f = tu::pub_frame();
    HypergraphModel model{f, {tu::pub_bpa()}};
    const std::size_t n = 200000;
    SampleResult r = sample_hypergraph(model, n, 2026);

    REQUIRE(r.stats.attempts == n);
    REQUIRE(r.stats.failures == 0); // a single factor can never conflict with itself
    REQUIRE(r.population.size() == n);

    Bpa emp = empirical_bpa(r.population);
    Bpa want = tu::pub_bpa();
    for (const auto& [set, mass] : want.focals()) {
        REQUIRE(tu::within_4sigma(mass, emp.mass(set), static_cast<double>(n)));
    }
    // Belief level too: shares of effective sets inside A.
    ConfigSet axby = tu::pub_set(f, {0, 1});
    REQUIRE(tu::within_4sigma(tu::pub_bpa().bel(axby), emp.bel(axby), static_cast<double>(n)));
}

TEST_CASE("hypergraph sampling with conflict measures its yield") {
    FramePtr f = tu::pub_frame();
    HypergraphModel model{f, {tu::pub_bpa(), Bpa::point_mass(tu::pub_evidence1(f))}};
    const std::size_t n = 200000;
    SampleResult r = sample_hypergraph(model, n, 31);

    // Failure probability is the catalogue mass stranded outside the
    // constraint: m({DT}) = 0.02.
    double fail_rate = static_cast<double>(r.stats.failures) / static_cast<double>(n);
    REQUIRE(tu::within_4sigma(0.02, fail_rate, static_cast<double>(n)));

    Bpa emp = empirical_bpa(r.population);
    Bpa want = condition(tu::pub_bpa(), tu::pub_evidence1(f));
    for (const auto& [set, mass] : want.focals())
        REQUIRE(tu::within_4sigma(mass, emp.mass(set), static_cast<double>(r.stats.yield())));
}

TEST_CASE("sampling is deterministic in the seed") {
    FramePtr f = tu::pub_frame();
    HypergraphModel model{f, {tu::pub_bpa(), Bpa::point_mass(tu::pub_evidence1(f))}};
    SampleResult a = sample_hypergraph(model, 5000, 7);
    SampleResult b = sample_hypergraph(model, 5000, 7);
    REQUIRE(a.population.objects == b.population.objects);
    REQUIRE(a.stats.failures == b.stats.failures);
}

TEST_CASE("total conflict fails every pass") {
    FramePtr f = Frame::make({{"X", {"a", "b"}}});
    HypergraphModel model{f, {Bpa::point_mass(ConfigSet::of(f, {0})), Bpa::point_mass(ConfigSet::of(f, {1}))}};
    REQUIRE_THROWS_AS(sample_hypergraph(model, 100, 5), conflict_error);
}

TEST_CASE("signed sampling") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}});
    FocalMap pm;
    pm.emplace(ConfigSet::of(f, {0}), -0.2);
    pm.emplace(ConfigSet::full_set(f), 0.8);
    Bpa pseudo = Bpa::from_masses(f, std::move(pm));
    REQUIRE(classify(pseudo) == BpaClass::pseudo);

    SECTION("rejects factors that are not pseudo-valid") {
        FocalMap gm;
        gm.emplace(ConfigSet::of(f, {0}), 1.0 / 3);
        gm.emplace(ConfigSet::of(f, {1}), 1.0 / 3);
        gm.emplace(ConfigSet::full_set(f), -1.0 / 3);
        Bpa generalized = Bpa::from_masses(f, std::move(gm));
        HypergraphModel model{f, {generalized}};
        REQUIRE_THROWS_AS(sample_signed(model, 100, 1), validation_error);
    }

    SECTION("all-positive factors reduce to plain sampling") {
        FramePtr pf = tu::pub_frame();
        HypergraphModel model{pf, {tu::pub_bpa()}};
        SampleResult plain = sample_hypergraph(model, 3000, 11);
        SampleResult marked = sample_signed(model, 3000, 11, /*cancel=*/false);
        REQUIRE(plain.population.objects == marked.population.objects);
    }

    SECTION("uncancelled signed sample estimates the pseudo factor itself") {
        HypergraphModel model{f, {pseudo}};
        const std::size_t n = 100000;
        SampleResult r = sample_signed(model, n, 13, /*cancel=*/false);
        REQUIRE(r.stats.failures == 0);
        Bpa emp = empirical_bpa(r.population);
        // Negative-mark share of {x0} estimates the negative mass.
        REQUIRE(tu::within_4sigma(0.2, -emp.mass(ConfigSet::of(f, {0})), static_cast<double>(n)));
        REQUIRE(tu::within_4sigma(0.8, emp.mass(ConfigSet::full_set(f)), static_cast<double>(n)));
    }

    SECTION("cancelled sample estimates the combined measure of a pseudo-factored model") {
        FocalMap mm;
        mm.emplace(ConfigSet::of(f, {0}), 0.5);
        mm.emplace(ConfigSet::full_set(f), 0.5);
        Bpa marginal = Bpa::from_masses(f, std::move(mm));
        HypergraphModel model{f, {marginal, pseudo}};

        Bpa want = enumerate_passes(f, model.factors); // {x0}: 1/3, full: 2/3
        REQUIRE(want.mass(ConfigSet::of(f, {0})) == Approx(1.0 / 3).margin(kTol));
        REQUIRE(mass_distance(want, joint_from_model(model)) <= kTol);

        const std::size_t n = 100000;
        SampleResult r = sample_signed(model, n, 17, /*cancel=*/true);
        for (const auto& o : r.population.objects) REQUIRE(o.sign == Sign::plus);
        Bpa emp = empirical_bpa(r.population);
        // The net cell count has per-pass variance Var(±1 draw) ≈ 0.56, and
        // the survivor total concentrates at 0.6 n; fold both into the band.
        double sigma_share = std::sqrt(0.56 / static_cast<double>(n)) / 0.6;
        REQUIRE(std::abs(emp.mass(ConfigSet::of(f, {0})) - 1.0 / 3) <= 4 * sigma_share + 1e-6);
        REQUIRE(std::abs(emp.mass(ConfigSet::full_set(f)) - 2.0 / 3) <= 4 * sigma_share + 1e-6);
    }

    SECTION("an empty attempt run yields an empty population") {
        HypergraphModel model{f, {pseudo}};
        SampleResult r = sample_signed(model, 0, 1);
        REQUIRE(r.population.objects.empty());
        REQUIRE(r.stats.attempts == 0);
    }
}

TEST_CASE("network sampling: independent factors") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}, {"Y", {"y0", "y1", "y2"}}});
    SplitMix64 g = substream(503, 0);
    Bpa mx = tu::random_proper_bpa(g, f->subframe({"X"}), 3);
    Bpa my = tu::random_proper_bpa(g, f->subframe({"Y"}), 4);

    BeliefNetwork net;
    net.frame = f;
    net.parents = {{}, {}};
    net.factors = {mx, my};

    const std::size_t n = 100000;
    SampleResult r = sample_network(net, n, 19);
    REQUIRE(r.stats.failures == 0);

    Bpa emp = empirical_bpa(r.population);
    Bpa want = joint_from_model(HypergraphModel{f, {mx, my}});
    for (const auto& [set, mass] : want.focals())
        REQUIRE(tu::within_4sigma(mass, emp.mass(set), static_cast<double>(n)));

    // Per-variable marginals match the factors.
    Bpa margx = project(emp, {"X"});
    for (const auto& [set, mass] : mx.focals())
        REQUIRE(tu::within_4sigma(mass, margx.mass(set), static_cast<double>(n)));
}

TEST_CASE("network sampling: Bayesian chain is ancestral sampling") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}, {"Y", {"y0", "y1"}}});
    double px0 = 0.3;
    std::vector<std::vector<double>> py{{0.7, 0.3}, {0.2, 0.8}}; // rows by x

    FramePtr fx = f->subframe({"X"});
    FocalMap mx;
    mx.emplace(ConfigSet::of(fx, {0}), px0);
    mx.emplace(ConfigSet::of(fx, {1}), 1 - px0);
    FocalMap my;
    std::vector<std::size_t> coords(2);
    for (std::size_t i = 0; i < f->config_count(); ++i) {
        f->decode_config(i, coords);
        my.emplace(ConfigSet::of(f, {i}), py[coords[0]][coords[1]] / 2);
    }
    BeliefNetwork net;
    net.frame = f;
    net.parents = {{}, {0}};
    net.factors = {Bpa::from_masses(fx, std::move(mx)), Bpa::from_masses(f, std::move(my))};

    const std::size_t n = 100000;
    SampleResult r = sample_network(net, n, 23);
    REQUIRE(r.stats.failures == 0);

    Bpa emp = empirical_bpa(r.population);
    for (std::size_t i = 0; i < f->config_count(); ++i) {
        f->decode_config(i, coords);
        double p = (coords[0] == 0 ? px0 : 1 - px0) * py[coords[0]][coords[1]];
        REQUIRE(tu::within_4sigma(p, emp.mass(ConfigSet::of(f, {i})), static_cast<double>(n)));
    }
}

TEST_CASE("network sampling: section-valued conditionals never filter") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}, {"Y", {"y0", "y1"}}, {"Z", {"z0", "z1"}}});
    FramePtr fx = f->subframe({"X"});
    FocalMap mx;
    mx.emplace(ConfigSet::of(fx, {0}), 0.4);
    mx.emplace(ConfigSet::full_set(fx), 0.6);
    Bpa g = tu::section_factor(
        f->subframe({"X", "Y"}), {"X"}, "Y",
        [](std::size_t pc) { return pc == 0 ? std::vector<std::size_t>{0} : std::vector<std::size_t>{1}; },
        0.75);
    Bpa h = tu::section_factor(
        f->subframe({"Y", "Z"}), {"Y"}, "Z",
        [](std::size_t pc) {
            return pc == 0 ? std::vector<std::size_t>{0, 1} : std::vector<std::size_t>{1};
        },
        0.5);
    BeliefNetwork net;
    net.frame = f;
    net.parents = {{}, {0}, {1}};
    net.factors = {Bpa::from_masses(fx, std::move(mx)), g, h};

    const std::size_t n = 100000;
    SampleResult r = sample_network(net, n, 29);
    REQUIRE(r.stats.failures == 0); // sections are total maps, so no pass can die

    // With no filtering the draw is exactly the hypergraph pass, whose law is
    // the factors' combination.
    Bpa want = joint_from_model(HypergraphModel{f, {net.factors[0], g, h}});
    Bpa emp = empirical_bpa(r.population);
    for (const auto& [set, mass] : want.focals())
        REQUIRE(tu::within_4sigma(mass, emp.mass(set), static_cast<double>(n)));
}

TEST_CASE("network sampling reports inconsistency") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}, {"Y", {"y0", "y1"}}});
    FramePtr fx = f->subframe({"X"});
    FocalMap mx;
    mx.emplace(ConfigSet::of(fx, {1}), 1.0);
    FocalMap my;
    my.emplace(ConfigSet::of(f, {0}), 1.0); // (x0, y0) only
    BeliefNetwork net;
    net.frame = f;
    net.parents = {{}, {0}};
    net.factors = {Bpa::from_masses(fx, std::move(mx)), Bpa::from_masses(f, std::move(my))};
    REQUIRE_THROWS_AS(sample_network(net, 50, 3), conflict_error);
}

TEST_CASE("network sampling is deterministic in the seed") {
    FramePtr f = Frame::make({{"X", {"x0", "x1"}}, {"Y", {"y0", "y1"}}});
    SplitMix64 g = substream(504, 0);
    BeliefNetwork net;
    net.frame = f;
    net.parents = {{}, {}};
    net.factors = {tu::random_proper_bpa(g, f->subframe({"X"})), tu::random_proper_bpa(g, f->subframe({"Y"}))};
    SampleResult a = sample_network(net, 2000, 41);
    SampleResult b = sample_network(net, 2000, 41);
    REQUIRE(a.population.objects == b.population.objects);
}
