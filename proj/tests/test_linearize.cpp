#include <catch2/catch_amalgamated.hpp>

#include "gap/linearize.hpp"
#include "gap/sampler.hpp"
#include "gap/table.hpp"
#include "gap/tokenize.hpp"

using namespace gap;

TEST_CASE("tokenizer splits case, underscores and punctuation") {
    Tokenizer tok;
    CHECK(tok.tokenize("GovernmentForm") ==
          std::vector<std::string>{"government", "form"});
    CHECK(tok.tokenize("pet_age") == std::vector<std::string>{"pet", "age"});
    CHECK(tok.tokenize("he is a manager.") ==
          std::vector<std::string>{"he", "is", "a", "manager"});
    CHECK(tok.tokenize("HTTPServer") ==
          std::vector<std::string>{"http", "server"});
    CHECK(tok.tokenize("<s> <col> <mask>") ==
          std::vector<std::string>{"<s>", "<col>", "<mask>"});
    CHECK(tok.tokenize("").empty());
}

TEST_CASE("linearization of the sampled film columns") {
    GenerationInput gi;
    gi.items = {{"Year", std::nullopt, {}},
                {"Film", std::nullopt, {}},
                {"Result", std::nullopt, {"Nominated"}}};
    CHECK(linearize_generation_input(gi) ==
          "NONE <sep> {Year | } <sep> {Film | } <sep> {Result | Nominated}");
}

TEST_CASE("aggregators append to the value list segment") {
    GenerationInput gi;
    gi.items = {{"revenue", sql::Agg::sum, {}}};
    CHECK(linearize_generation_input(gi) == "NONE <sep> {revenue | SUM}");
}

TEST_CASE("the order control code renders as a LIMIT segment") {
    GenerationInput gi;
    gi.items = {{"name", std::nullopt, {}}};
    gi.limit = 3;
    CHECK(linearize_generation_input(gi) ==
          "NONE <sep> {name | } <sep> {LIMIT : 3}");
}

TEST_CASE("structure codes lead the sequence") {
    GenerationInput gi;
    gi.structure = StructureCode::not_in;
    gi.items = {{"a", std::nullopt, {}}};
    std::string text = linearize_generation_input(gi);
    CHECK(text.rfind("NOT IN <sep> ", 0) == 0);
}

TEST_CASE("the splitter inverts linearization on sampler outputs") {
    Table t;
    t.name = "inv";
    t.row_count = 3;
    t.columns = {
        {"alpha", ColumnType::text, {"x y", "z", "w"}},
        {"beta", ColumnType::number, {"1", "2", "3"}},
        {"gamma_delta", ColumnType::time, {"1999", "2001", "2010"}},
        {"value, list", ColumnType::text, {"a, b", "c", ""}},
    };
    SamplerConfig cfg;
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        GenerationInput gi = sample_generation_input(t, seed, cfg);
        GenerationInput back = split_linearized(linearize_generation_input(gi));
        CHECK(back == gi);
    }
}

TEST_CASE("splitter rejects text that is not a linearization") {
    CHECK_THROWS_AS(split_linearized("SELECT a FROM t"), LinearizeError);
    CHECK_THROWS_AS(split_linearized("NONE <sep> no braces"), LinearizeError);
}

TEST_CASE("a column segment resembling a LIMIT code stays a column") {
    GenerationInput back =
        split_linearized("NONE <sep> {LIMIT : up | }");
    REQUIRE(back.items.size() == 1);
    CHECK(back.items[0].name == "LIMIT : up");
    CHECK_FALSE(back.limit.has_value());
}

TEST_CASE("encoder input wraps utterance and columns with markers") {
    EncoderInput enc = build_encoder_input("he is a manager",
                                        std::vector<std::string>{"job", "year"});
    CHECK(enc.tokens ==
          std::vector<std::string>{"<s>", "he", "is", "a", "manager", "<col>",
                                   "job", "<col>", "year", "</s>"});
    CHECK(enc.utterance_span == std::pair<std::size_t, std::size_t>{1, 5});
    REQUIRE(enc.column_spans.size() == 2);
    CHECK(enc.column_spans[0].begin == 6);
    CHECK(enc.column_spans[0].end == 7);
    CHECK(enc.column_spans[0].id == "job");
    CHECK(enc.column_spans[1].begin == 8);
    CHECK(enc.column_spans[1].end == 9);
}

TEST_CASE("empty utterance leaves an empty span") {
    EncoderInput enc = build_encoder_input("", std::vector<std::string>{"c"});
    CHECK(enc.tokens == std::vector<std::string>{"<s>", "<col>", "c", "</s>"});
    CHECK(enc.utterance_span.first == enc.utterance_span.second);
}

TEST_CASE("empty column list is an error") {
    CHECK_THROWS_AS(build_encoder_input("text", std::vector<std::string>{}),
                    EmptyColumns);
}

TEST_CASE("spans re-derive the column token sequences") {
    Tokenizer tok;
    std::vector<std::string> cols{"LifeExpectancy", "pet_age", "name"};
    EncoderInput enc = build_encoder_input("an utterance", cols, tok);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const auto& span = enc.column_spans[c];
        std::vector<std::string> inside(enc.tokens.begin() +
                                            static_cast<long>(span.begin),
                                        enc.tokens.begin() +
                                            static_cast<long>(span.end));
        CHECK(inside == tok.tokenize(cols[c]));
        CHECK(Tokenizer::detokenize(inside) ==
              Tokenizer::detokenize(tok.tokenize(cols[c])));
    }
    // spans are disjoint and in-bounds
    for (std::size_t c = 1; c < enc.column_spans.size(); ++c)
        CHECK(enc.column_spans[c - 1].end <= enc.column_spans[c].begin);
    CHECK(enc.column_spans.back().end <= enc.tokens.size());
}
