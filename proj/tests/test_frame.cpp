#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace bft;

TEST_CASE("frame construction and indexing") {
    FramePtr f = Frame::make({{"X", {"a", "b"}}, {"Y", {"u", "v", "w"}}});
    REQUIRE(f->var_count() == 2);
    REQUIRE(f->config_count() == 6);
    REQUIRE(f->var_index("Y") == 1);
    REQUIRE(f->value_index(1, "w") == 2);

    // First variable varies slowest.
    std::vector<std::size_t> coords(2);
    for (std::size_t i = 0; i < 6; ++i) {
        f->decode_config(i, coords);
        REQUIRE(f->config_index(coords) == i);
        REQUIRE(coords[0] == i / 3);
        REQUIRE(coords[1] == i % 3);
    }
}

TEST_CASE("frame construction rejects bad input") {
    REQUIRE_THROWS_AS(Frame::make({}), frame_error);
    REQUIRE_THROWS_AS(Frame::make({{"X", {}}}), frame_error);
    REQUIRE_THROWS_AS(Frame::make({{"X", {"a", "a"}}}), frame_error);
    REQUIRE_THROWS_AS(Frame::make({{"X", {"a"}}, {"X", {"b"}}}), frame_error);
}

TEST_CASE("frame equality is structural") {
    FramePtr a = Frame::make({{"X", {"a", "b"}}});
    FramePtr b = Frame::make({{"X", {"a", "b"}}});
    FramePtr c = Frame::make({{"X", {"a", "c"}}});
    REQUIRE(*a == *b);
    REQUIRE_FALSE(*a == *c);
}

TEST_CASE("subframe canonicalizes to declaration order") {
    FramePtr f = Frame::make({{"X", {"a", "b"}}, {"Y", {"u", "v"}}, {"Z", {"0", "1"}}});
    FramePtr s1 = f->subframe({"Z", "X"});
    FramePtr s2 = f->subframe({"X", "Z"});
    REQUIRE(*s1 == *s2);
    REQUIRE(s1->variable(0).name == "X");
    REQUIRE(s1->variable(1).name == "Z");
    REQUIRE_THROWS_AS(f->subframe({"X", "Q"}), frame_error);
    REQUIRE_THROWS_AS(f->subframe({"X", "X"}), frame_error);
}

TEST_CASE("config set boolean algebra") {
    SplitMix64 g = substream(101, 0);
    FramePtr f = Frame::make({{"X", {"a", "b", "c"}}, {"Y", {"u", "v"}}});
    for (int rep = 0; rep < 200; ++rep) {
        ConfigSet a = tu::random_nonempty_set(g, f);
        ConfigSet b = tu::random_nonempty_set(g, f);
        REQUIRE((a & b) == (b & a));
        REQUIRE((a | b) == (b | a));
        REQUIRE((a & b).complement() == (a.complement() | b.complement()));
        REQUIRE((a - b) == (a & b.complement()));
        REQUIRE((a & b).is_subset_of(a));
        REQUIRE(a.is_subset_of(a | b));
        REQUIRE(a.intersects(b) == !(a & b).empty());
        REQUIRE(a.count() + b.count() == (a | b).count() + (a & b).count());
    }
    REQUIRE(ConfigSet::empty_set(f).complement() == ConfigSet::full_set(f));
}

TEST_CASE("config set members round-trip") {
    FramePtr f = Frame::make({{"X", {"a", "b", "c", "d", "e"}}});
    ConfigSet s = ConfigSet::of(f, {0, 2, 4});
    REQUIRE(s.members() == std::vector<std::size_t>{0, 2, 4});
    REQUIRE(s.count() == 3);
    std::size_t seen = 0;
    s.for_each_member([&](std::size_t i) { seen += i; });
    REQUIRE(seen == 6);
}

TEST_CASE("projection and vacuous extension on point examples") {
    FramePtr xy = Frame::make({{"X", {"0", "1"}}, {"Y", {"a", "b"}}});
    FramePtr x = xy->subframe({"X"});

    ConfigSet b = ConfigSet::of(x, {0});
    ConfigSet up = vacuous_extend_set(b, xy);
    REQUIRE(up.members() == std::vector<std::size_t>{0, 1}); // (0,a), (0,b)
    REQUIRE(project_set(up, x) == b);

    REQUIRE(vacuous_extend_set(ConfigSet::full_set(x), xy) == ConfigSet::full_set(xy));
    REQUIRE(project_set(ConfigSet::full_set(xy), x) == ConfigSet::full_set(x));
    REQUIRE(project_set(ConfigSet::empty_set(xy), x).empty());
}

TEST_CASE("projection and extension properties") {
    SplitMix64 g = substream(102, 0);
    for (int rep = 0; rep < 200; ++rep) {
        FramePtr f = tu::random_frame(g, 3, 3, 16);
        if (f->var_count() < 2) continue;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < f->var_count(); ++i)
            if (i == 0 || (g.next() & 1)) names.push_back(f->variable(i).name);
        FramePtr sub = f->subframe(names);

        ConfigSet b = tu::random_nonempty_set(g, sub);
        REQUIRE(project_set(vacuous_extend_set(b, f), sub) == b);

        ConfigSet a1 = tu::random_nonempty_set(g, f);
        ConfigSet a2 = tu::random_nonempty_set(g, f);
        // Projection is monotone and distributes over union.
        REQUIRE(project_set(a1 | a2, sub) == (project_set(a1, sub) | project_set(a2, sub)));
        REQUIRE(project_set(a1, sub).is_subset_of(project_set(a1 | a2, sub)));
        // A is contained in the cylinder over its own shadow.
        REQUIRE(a1.is_subset_of(vacuous_extend_set(project_set(a1, sub), f)));
        // Extension distributes over intersection and union.
        ConfigSet c1 = tu::random_nonempty_set(g, sub);
        ConfigSet c2 = tu::random_nonempty_set(g, sub);
        REQUIRE(vacuous_extend_set(c1 & c2, f) ==
                (vacuous_extend_set(c1, f) & vacuous_extend_set(c2, f)));
        REQUIRE(vacuous_extend_set(c1 | c2, f) ==
                (vacuous_extend_set(c1, f) | vacuous_extend_set(c2, f)));
    }
}

TEST_CASE("projection by name list matches subframe projection") {
    FramePtr f = Frame::make({{"X", {"a", "b"}}, {"Y", {"u", "v"}}, {"Z", {"0", "1"}}});
    SplitMix64 g = substream(103, 0);
    for (int rep = 0; rep < 50; ++rep) {
        ConfigSet a = tu::random_nonempty_set(g, f);
        REQUIRE(project_set(a, {"Z", "Y"}) == project_set(a, f->subframe({"Y", "Z"})));
    }
}

TEST_CASE("cylinder expressions denote their sets") {
    FramePtr f = Frame::make({{"X", {"a", "b"}}, {"Y", {"u", "v", "w"}}});
    SplitMix64 g = substream(104, 0);
    for (int rep = 0; rep < 200; ++rep) {
        ConfigSet s = tu::random_nonempty_set(g, f);
        CylinderExpr e = to_cylinder_expr(s);
        REQUIRE(e.denote(f) == s);
    }
    CylinderExpr full = to_cylinder_expr(ConfigSet::full_set(f));
    REQUIRE(full.terms.size() == 1);
    REQUIRE(full.terms[0].restrictions.empty());
}

TEST_CASE("canonical set ordering is total and stable") {
    FramePtr f = Frame::make({{"X", {"a", "b", "c"}}});
    ConfigSet e = ConfigSet::empty_set(f);
    ConfigSet s1 = ConfigSet::of(f, {0});
    ConfigSet s2 = ConfigSet::of(f, {0, 2});
    REQUIRE(e < s1);
    REQUIRE((s1 < s2) != (s2 < s1));
    REQUIRE_FALSE(s1 < s1);
}
