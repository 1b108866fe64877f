#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "gap/esm.hpp"
#include "gap/objectives.hpp"
#include "gap/sql/parse.hpp"
#include "testutil.hpp"

using namespace gap;

TEST_CASE("mention detection is normalized contiguous containment") {
    Tokenizer tok;
    auto bits = detect_column_mentions(
        "list his or her role, street, city and state",
        {"role_code", "street", "city", "state", "GovernmentForm"}, tok);
    // "role_code" tokenizes to [role, code]; only "role" appears
    CHECK(bits == std::vector<int>{0, 1, 1, 1, 0});

    auto pain2 = detect_column_mentions(
        "give the average life expectancy for countries in africa which are "
        "republics",
        {"LifeExpectancy", "GovernmentForm", "Continent"}, tok);
    CHECK(pain2 == std::vector<int>{1, 0, 0});

    CHECK(detect_column_mentions("", {"a", "b"}, tok) ==
          std::vector<int>{0, 0});
}

TEST_CASE("masked counts follow the round-half-up law") {
    CHECK(masked_count_for(20) == 7);
    CHECK(masked_count_for(10) == 4);   // 3.5 rounds up
    CHECK(masked_count_for(1) == 1);    // minimum rule
    CHECK(masked_count_for(2) == 1);
    CHECK(masked_count_for(3) == 1);    // 1.05 -> 1
    CHECK(masked_count_for(100) == 35);
}

TEST_CASE("mlm masks the exact count and keeps the target intact") {
    Tokenizer tok;
    // 16 utterance tokens + 4 column sub-tokens = 20 maskable -> 7 masked
    std::string utt =
        "one two three four five six seven eight nine ten eleven twelve "
        "thirteen fourteen fifteen sixteen";
    std::vector<std::string> cols{"job", "year", "pet_age"};
    MlmInstance inst = build_mlm(utt, cols, tok, 99);

    std::size_t masked = 0;
    for (std::size_t i = 0; i < inst.masked.tokens.size(); ++i) {
        if (inst.masked.tokens[i] == kMaskToken) {
            ++masked;
            CHECK_FALSE(is_special_token(inst.target_tokens[i]));
        } else {
            CHECK(inst.masked.tokens[i] == inst.target_tokens[i]);
        }
    }
    CHECK(masked == 7);
    CHECK(inst.masked_positions.size() == 7);

    // determinism under the seed
    MlmInstance again = build_mlm(utt, cols, tok, 99);
    CHECK(again.masked_positions == inst.masked_positions);
    CHECK_FALSE(build_mlm(utt, cols, tok, 100).masked_positions ==
                inst.masked_positions);
}

TEST_CASE("single maskable token is always masked") {
    Tokenizer tok;
    MlmInstance inst = build_mlm("", {"a"}, tok, 5);
    CHECK(inst.masked_positions.size() == 1);
    CHECK(inst.masked.tokens[inst.masked_positions[0]] == kMaskToken);
}

TEST_CASE("cpred labels reproduce the sampled set in schema order") {
    std::vector<std::string> schema{"Year", "Film", "Result", "Budget",
                                    "Director"};
    CPredInstance inst =
        build_cpred("who won in 2001", schema, {"Year", "Film", "Result"});
    CHECK(inst.labels == std::vector<int>{1, 1, 1, 0, 0});

    CHECK(build_cpred("x", schema, schema).labels ==
          std::vector<int>{1, 1, 1, 1, 1});
    CHECK(build_cpred("x", schema, {}).labels ==
          std::vector<int>{0, 0, 0, 0, 0});
    CHECK_THROWS_AS(build_cpred("x", schema, {"Unknown"}), UnknownColumn);
}

TEST_CASE("label permutation follows schema permutation") {
    std::vector<std::string> schema{"a", "b", "c", "d"};
    std::vector<std::string> sampled{"b", "d"};
    CHECK(build_cpred("u", schema, sampled).labels ==
          std::vector<int>{0, 1, 0, 1});
    CHECK(build_cpred("u", {"d", "c", "b", "a"}, sampled).labels ==
          std::vector<int>{1, 0, 1, 0});
}

namespace {

Table crec_table() {
    Table t;
    t.name = "people";
    t.row_count = 3;
    t.columns = {
        {"job", ColumnType::text, {"manager", "clerk", "analyst"}},
        {"age", ColumnType::number, {"31", "44", "28"}},
        {"hobby", ColumnType::text, {"", "", ""}},
        {"city", ColumnType::text, {"Rome", "Oslo", "Kyiv"}},
    };
    return t;
}

}  // namespace

TEST_CASE("crec replaces mentioned columns with one of their cells") {
    Tokenizer tok;
    Table t = crec_table();
    // "job" is mentioned; "city" is not
    std::string utt = "he is 31 years old and what is his job";
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CRecInstance inst = build_crec(utt, t, tok, seed);
        REQUIRE(inst.replaced_mask.size() == 4);
        CHECK(inst.replaced_mask[0] == 1);   // mentioned -> always replaced
        CHECK(inst.replaced_mask[2] == 0);   // all-empty column, never
        CHECK(inst.target_columns ==
              std::vector<std::string>{"job", "age", "hobby", "city"});
        // replaced slots carry a cell of the column, others the name
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& span = inst.encoder.column_spans[c];
            std::vector<std::string> slot(inst.encoder.tokens.begin() +
                                              static_cast<long>(span.begin),
                                          inst.encoder.tokens.begin() +
                                              static_cast<long>(span.end));
            std::string text = Tokenizer::detokenize(slot);
            if (inst.replaced_mask[c]) {
                bool is_cell = false;
                for (const auto& cell : t.columns[c].cells)
                    is_cell = is_cell ||
                              text == Tokenizer::detokenize(tok.tokenize(cell));
                CHECK(is_cell);
            } else {
                CHECK(text ==
                      Tokenizer::detokenize(tok.tokenize(t.columns[c].name)));
            }
            CHECK(span.id == t.columns[c].name);
        }
    }
}

TEST_CASE("crec is deterministic under its seed") {
    Tokenizer tok;
    Table t = crec_table();
    CRecInstance a = build_crec("no mentions", t, tok, 77);
    CRecInstance b = build_crec("no mentions", t, tok, 77);
    CHECK(a.encoder == b.encoder);
    CHECK(a.replaced_mask == b.replaced_mask);
}

TEST_CASE("unmentioned replacement frequency tracks p_replace") {
    Tokenizer tok;
    Table t = crec_table();
    const int n = 20000;
    int replaced = 0;
    for (int seed = 0; seed < n; ++seed) {
        CRecInstance inst = build_crec("nothing relevant here", t, tok,
                                       static_cast<std::uint64_t>(seed));
        replaced += inst.replaced_mask[3];
    }
    CHECK(std::abs(replaced / double(n) - 0.5) < 0.02);
}

TEST_CASE("gensql target decodes back to an exact-set-match of the source") {
    sql::Query ast = sql::parse_sql(
        "SELECT Avg(LifeExpectancy) FROM country WHERE Continent = 'Africa'");
    std::vector<sql::SchemaPoolEntry> pool{{"city", {"id", "name"}}};
    sql::SchemaCandidate cand = sql::build_schema_candidates(ast, pool, 3, 2);
    GenSqlInstance inst =
        build_gensql("average life expectancy in africa", cand, ast);

    std::string decoded = inst.vocab.decode(inst.target);
    CHECK(exact_set_match(sql::parse_sql(decoded), ast));
    // every target id is a valid vocabulary entry
    for (const auto& id : inst.target) {
        switch (id.kind) {
            case VocabId::Kind::keyword:
                CHECK(id.index < ClosedVocab::keywords().size());
                break;
            case VocabId::Kind::column:
                CHECK(id.index < inst.vocab.columns.size());
                break;
            case VocabId::Kind::table:
                CHECK(id.index < inst.vocab.tables.size());
                break;
            case VocabId::Kind::literal:
                CHECK(id.index < inst.vocab.literals.size());
                break;
        }
    }
}

TEST_CASE("gensql rejects columns missing from the candidate positives") {
    sql::Query ast = sql::parse_sql("SELECT a FROM t WHERE b = 1");
    sql::SchemaCandidate cand;
    cand.tables = {{"t", true}};
    cand.columns = {{"a", "t", true}};  // no "b"
    CHECK_THROWS_AS(build_gensql("u", cand, ast), MissingColumn);
}

TEST_CASE("nested NOT IN keeps its keywords in the target") {
    sql::Query ast = sql::parse_sql(
        "SELECT semester_name FROM Semesters WHERE semester_id NOT IN "
        "(SELECT semester_id FROM Student_Enrolment)");
    sql::SchemaCandidate cand = sql::build_schema_candidates(ast, {}, 1, 0);
    GenSqlInstance inst = build_gensql("which semesters are unused", cand, ast);

    auto kw_index = [](const std::string& word) {
        const auto& kws = ClosedVocab::keywords();
        for (std::size_t i = 0; i < kws.size(); ++i)
            if (kws[i] == word) return i;
        return kws.size();
    };
    int selects = 0;
    bool has_not = false, has_in = false;
    for (const auto& id : inst.target) {
        if (id.kind != VocabId::Kind::keyword) continue;
        if (id.index == kw_index("SELECT")) ++selects;
        if (id.index == kw_index("NOT")) has_not = true;
        if (id.index == kw_index("IN")) has_in = true;
    }
    CHECK(selects == 2);
    CHECK(has_not);
    CHECK(has_in);
    CHECK(exact_set_match(sql::parse_sql(inst.vocab.decode(inst.target)), ast));
}

TEST_CASE("scheduler splits pairs into near-equal thirds") {
    std::vector<std::string> pairs;
    for (int i = 0; i < 9; ++i) pairs.push_back("p" + std::to_string(i));
    std::vector<std::string> triples{"t0", "t1"};
    auto entries = schedule_epoch(pairs, triples, 7);
    REQUIRE(entries.size() == 11);

    std::map<Objective, std::set<std::string>> by_tag;
    for (const auto& e : entries) by_tag[e.objective].insert(e.record_id);
    CHECK(by_tag[Objective::mlm].size() == 3);
    CHECK(by_tag[Objective::cpred].size() == 3);
    CHECK(by_tag[Objective::crec].size() == 3);
    CHECK(by_tag[Objective::gensql] ==
          std::set<std::string>{"t0", "t1"});

    // every pair id appears exactly once with exactly one tag
    std::set<std::string> all;
    for (const auto& [tag, ids] : by_tag)
        for (const auto& id : ids) CHECK(all.insert(id).second);
    CHECK(all.size() == 11);
}

TEST_CASE("block sizes differ by at most one across n") {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 100u, 101u}) {
        std::vector<std::string> pairs;
        for (std::size_t i = 0; i < n; ++i)
            pairs.push_back(std::to_string(i));
        auto entries = schedule_epoch(pairs, {}, 3);
        std::map<Objective, std::size_t> sizes;
        for (const auto& e : entries) sizes[e.objective]++;
        std::size_t total = 0, mx = 0, mn = n;
        for (Objective o :
             {Objective::mlm, Objective::cpred, Objective::crec}) {
            total += sizes[o];
            mx = std::max(mx, sizes[o]);
            mn = std::min(mn, sizes[o]);
        }
        CHECK(total == n);
        CHECK(mx - mn <= 1);
        CHECK(sizes[Objective::gensql] == 0);
    }
}
