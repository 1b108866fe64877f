#include <catch2/catch_amalgamated.hpp>

#include "gap/sampler.hpp"
#include "testutil.hpp"

using namespace gap;

namespace {

Table fixture_table() {
    Table t;
    t.name = "films";
    t.row_count = 4;
    t.columns = {
        {"Year", ColumnType::time, {"2001", "2004", "2007", "2010"}},
        {"Film", ColumnType::text, {"A", "B", "C", "D"}},
        {"Result", ColumnType::text,
         {"Nominated", "Won", "Nominated", "Won"}},
        {"Revenue", ColumnType::number, {"10", "20", "30", "40"}},
        {"Empty", ColumnType::text, {"", "", "", ""}},
        {"Votes", ColumnType::number, {"1", "2", "3", "4"}},
    };
    return t;
}

}  // namespace

TEST_CASE("degenerate configuration yields two bare columns") {
    SamplerConfig cfg;
    cfg.k_min = cfg.k_max = 2;
    cfg.p_wildcard = cfg.p_structure = cfg.p_order = cfg.p_agg = cfg.p_value =
        0.0;
    GenerationInput gi = sample_generation_input(fixture_table(), 1, cfg);
    CHECK(gi.structure == StructureCode::none);
    CHECK_FALSE(gi.limit.has_value());
    REQUIRE(gi.items.size() == 2);
    for (const auto& item : gi.items) {
        CHECK_FALSE(item.wildcard());
        CHECK_FALSE(item.agg.has_value());
        CHECK(item.values.empty());
    }
}

TEST_CASE("forced probabilities hit their boundaries") {
    SamplerConfig cfg;
    cfg.p_structure = 1.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GenerationInput gi = sample_generation_input(fixture_table(), seed, cfg);
        CHECK(gi.structure != StructureCode::none);
    }
    SamplerConfig all;
    all.p_wildcard = all.p_order = all.p_agg = all.p_value = 1.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        GenerationInput gi = sample_generation_input(fixture_table(), seed, all);
        CHECK(gi.items.back().wildcard());
        CHECK(gi.limit.has_value());
        CHECK(*gi.limit >= all.limit_min);
        CHECK(*gi.limit <= all.limit_max);
        CHECK(gi.items[0].agg.has_value());
    }
}

TEST_CASE("every emitted input satisfies the type invariants") {
    SamplerConfig cfg;
    Table t = fixture_table();
    for (std::uint64_t seed = 0; seed < 3000; ++seed) {
        GenerationInput gi = sample_generation_input(t, seed, cfg);
        std::size_t wildcards = 0, non_wild = 0;
        for (const auto& item : gi.items) (item.wildcard() ? wildcards : non_wild)++;
        CHECK(wildcards <= 1);
        CHECK(non_wild >= 2);
        CHECK(non_wild <= 6);
        for (std::size_t i = 0; i < gi.items.size(); ++i) {
            const auto& item = gi.items[i];
            if (item.agg) {
                CHECK(i < 2);
                CHECK(item.values.empty());
                const Column* col = nullptr;
                for (const auto& c : t.columns)
                    if (c.name == item.name) col = &c;
                REQUIRE(col != nullptr);
                if (*item.agg == sql::Agg::sum || *item.agg == sql::Agg::avg)
                    CHECK(col->ctype == ColumnType::number);
                if (*item.agg == sql::Agg::max || *item.agg == sql::Agg::min)
                    CHECK((col->ctype == ColumnType::number ||
                           col->ctype == ColumnType::time));
            }
            CHECK(item.values.size() <= 1);
            for (const auto& v : item.values) {
                CHECK_FALSE(v.empty());
                const Column* col = nullptr;
                for (const auto& c : t.columns)
                    if (c.name == item.name) col = &c;
                REQUIRE(col != nullptr);
                CHECK(std::find(col->cells.begin(), col->cells.end(), v) !=
                      col->cells.end());
            }
        }
    }
}

TEST_CASE("an all-empty column never yields a value") {
    SamplerConfig cfg;
    cfg.p_value = 1.0;
    Table t = fixture_table();
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        GenerationInput gi = sample_generation_input(t, seed, cfg);
        for (const auto& item : gi.items)
            if (item.name == "Empty") CHECK(item.values.empty());
    }
}

TEST_CASE("instances_per_table honors the count and the seeds") {
    Table t = fixture_table();
    auto four = instances_per_table(t, 11);
    CHECK(four.size() == 4);

    SamplerConfig one;
    one.instances_per_table = 1;
    CHECK(instances_per_table(t, 11, one).size() == 1);

    auto again = instances_per_table(t, 11);
    CHECK(four == again);
    CHECK_FALSE(instances_per_table(t, 12) == four);
}

TEST_CASE("broken configurations are rejected up front") {
    SamplerConfig bad;
    bad.k_min = 0;
    CHECK_THROWS_AS(sample_generation_input(fixture_table(), 1, bad),
                    std::invalid_argument);
    SamplerConfig swapped;
    swapped.limit_min = 9;
    swapped.limit_max = 2;
    CHECK_THROWS_AS(sample_generation_input(fixture_table(), 1, swapped),
                    std::invalid_argument);
    SamplerConfig prob;
    prob.p_value = 1.5;
    CHECK_THROWS_AS(sample_generation_input(fixture_table(), 1, prob),
                    std::invalid_argument);
}

TEST_CASE("narrow tables are rejected") {
    Table t;
    t.name = "narrow";
    t.row_count = 3;
    t.columns = {{"only", ColumnType::text, {"a", "b", "c"}}};
    CHECK_THROWS_AS(sample_generation_input(t, 1, {}), TableTooNarrow);
}

TEST_CASE("k is capped by the table width") {
    Table t = fixture_table();
    t.columns.resize(3);
    SamplerConfig cfg;
    cfg.k_min = cfg.k_max = 6;
    GenerationInput gi = sample_generation_input(t, 3, cfg);
    std::size_t non_wild = 0;
    for (const auto& item : gi.items)
        if (!item.wildcard()) ++non_wild;
    CHECK(non_wild == 3);
}

TEST_CASE("sampled frequencies track the configured probabilities") {
    // a smaller Monte Carlo run; the acceptance suite does the 1e5 version
    SamplerConfig cfg;
    Table t = fixture_table();
    const int n = 20000;
    int structure = 0, wildcard = 0, limit = 0, agg0 = 0;
    for (int seed = 0; seed < n; ++seed) {
        GenerationInput gi =
            sample_generation_input(t, static_cast<std::uint64_t>(seed), cfg);
        if (gi.structure != StructureCode::none) ++structure;
        if (!gi.items.empty() && gi.items.back().wildcard()) ++wildcard;
        if (gi.limit) ++limit;
        if (gi.items[0].agg) ++agg0;
    }
    CHECK(std::abs(structure / double(n) - 0.35) < 0.02);
    CHECK(std::abs(wildcard / double(n) - 0.20) < 0.02);
    CHECK(std::abs(limit / double(n) - 0.25) < 0.02);
    CHECK(std::abs(agg0 / double(n) - 0.50) < 0.02);
}
