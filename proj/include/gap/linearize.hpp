#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gap/sampler.hpp"
#include "gap/sql/ast.hpp"
#include "gap/tokenize.hpp"

namespace gap {

struct EmptyColumns : std::runtime_error {
    EmptyColumns() : std::runtime_error("column list is empty") {}
};

struct LinearizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structure code first, one {column | value list} segment per item joined
// by <sep>, aggregators appended to the value list, and a trailing
// {LIMIT : n} segment when the order control code is present.
inline std::string linearize_generation_input(const GenerationInput& gi) {
    std::string out(to_string(gi.structure));
    for (const auto& item : gi.items) {
        std::string list;
        for (const auto& v : item.values) {
            if (!list.empty()) list += ", ";
            list += v;
        }
        if (item.agg) {
            if (!list.empty()) list += ", ";
            list += to_string(*item.agg);
        }
        out += " ";
        out += kSepToken;
        out += " {" + item.name + " | " + list + "}";
    }
    if (gi.limit) {
        out += " ";
        out += kSepToken;
        out += " {LIMIT : " + std::to_string(*gi.limit) + "}";
    }
    return out;
}

// Inverse of linearize_generation_input for sampler outputs (each value
// list holds at most one value or one aggregator). A list that spells an
// aggregator name reads as the aggregator.
inline GenerationInput split_linearized(std::string_view text) {
    GenerationInput gi;
    std::vector<std::string> segments;
    const std::string sep = std::string(" ") + std::string(kSepToken) + " ";
    std::size_t start = 0;
    while (true) {
        std::size_t at = text.find(sep, start);
        if (at == std::string_view::npos) {
            segments.emplace_back(text.substr(start));
            break;
        }
        segments.emplace_back(text.substr(start, at - start));
        start = at + sep.size();
    }
    if (segments.empty()) throw LinearizeError("empty linearized input");

    auto code = structure_code_from(trim(segments[0]));
    if (!code)
        throw LinearizeError("unknown structure code \"" + segments[0] + "\"");
    gi.structure = *code;

    for (std::size_t i = 1; i < segments.size(); ++i) {
        std::string seg = trim(segments[i]);
        if (seg.size() < 2 || seg.front() != '{' || seg.back() != '}')
            throw LinearizeError("malformed segment \"" + seg + "\"");
        std::string body = seg.substr(1, seg.size() - 2);
        if (body.rfind("LIMIT : ", 0) == 0) {
            std::string digits = body.substr(8);
            bool numeric = !digits.empty();
            for (char c : digits)
                numeric = numeric && std::isdigit(static_cast<unsigned char>(c));
            if (numeric) {
                gi.limit = std::stoi(digits);
                continue;
            }
        }
        std::size_t bar = body.find(" | ");
        if (bar == std::string::npos)
            throw LinearizeError("segment missing separator \"" + seg + "\"");
        SampledColumn item;
        item.name = body.substr(0, bar);
        std::string list = body.substr(bar + 3);
        if (!list.empty()) {
            bool is_agg = false;
            for (sql::Agg a : {sql::Agg::count, sql::Agg::max, sql::Agg::min,
                               sql::Agg::avg, sql::Agg::sum}) {
                if (list == sql::to_string(a)) {
                    item.agg = a;
                    is_agg = true;
                }
            }
            if (!is_agg) item.values.push_back(list);
        }
        gi.items.push_back(std::move(item));
    }
    return gi;
}

struct ColumnSpan {
    std::size_t begin = 0;  // token index range [begin, end)
    std::size_t end = 0;
    std::string id;  // column identity, e.g. "country.continent"
    bool operator==(const ColumnSpan&) const = default;
};

struct EncoderInput {
    std::vector<std::string> tokens;  // <s> utterance (<col> column)+ </s>
    std::vector<ColumnSpan> column_spans;
    std::pair<std::size_t, std::size_t> utterance_span{0, 0};
    bool operator==(const EncoderInput&) const = default;
};

struct EncoderColumn {
    std::string text;  // what goes into the slot (name, or a cell for CRec)
    std::string id;    // stable identity used by spans and labels
};

inline EncoderInput build_encoder_input(std::string_view utterance,
                                        const std::vector<EncoderColumn>& columns,
                                        const Tokenizer& tok = {}) {
    if (columns.empty()) throw EmptyColumns();
    EncoderInput out;
    out.tokens.emplace_back(kBosToken);
    for (auto& t : tok.tokenize(utterance)) out.tokens.push_back(std::move(t));
    out.utterance_span = {1, out.tokens.size()};
    for (const auto& col : columns) {
        out.tokens.emplace_back(kColToken);
        std::size_t begin = out.tokens.size();
        for (auto& t : tok.tokenize(col.text)) out.tokens.push_back(std::move(t));
        out.column_spans.push_back({begin, out.tokens.size(), col.id});
    }
    out.tokens.emplace_back(kEosToken);
    return out;
}

inline EncoderInput build_encoder_input(std::string_view utterance,
                                        const std::vector<std::string>& columns,
                                        const Tokenizer& tok = {}) {
    std::vector<EncoderColumn> cols;
    cols.reserve(columns.size());
    for (const auto& c : columns) cols.push_back({c, c});
    return build_encoder_input(utterance, cols, tok);
}

}  // namespace gap
