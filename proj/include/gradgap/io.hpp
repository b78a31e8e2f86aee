#pragma once

// JSON interchange for instances and run configurations.

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "gradgap/token.hpp"
#include "gradgap/trajectory.hpp"

namespace gradgap {

using json = nlohmann::json;

/// Malformed or incomplete configuration; the message names the offending field or line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // byte points one past the offending character
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError(source + ": " + detail::line_col(text, at) + ": invalid JSON");
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

/// Typed access to a JSON object with field-naming errors.
class ConfigView {
public:
    ConfigView(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError(where_ + ": expected a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <typename T>
    T required(const std::string& key) const {
        if (!has(key))
            throw ConfigError(where_ + ": missing required field '" + key + "'");
        return convert<T>(key);
    }

    template <typename T>
    T optional(const std::string& key, T fallback) const {
        return has(key) ? convert<T>(key) : fallback;
    }

    ConfigView child(const std::string& key) const {
        if (!has(key))
            throw ConfigError(where_ + ": missing required field '" + key + "'");
        return ConfigView(j_.at(key), where_ + "." + key);
    }

    const json& array(const std::string& key) const {
        if (!has(key))
            throw ConfigError(where_ + ": missing required field '" + key + "'");
        if (!j_.at(key).is_array())
            throw ConfigError(where_ + ": field '" + key + "' must be an array");
        return j_.at(key);
    }

    const json& raw() const { return j_; }
    const std::string& where() const { return where_; }

private:
    template <typename T>
    T convert(const std::string& key) const {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(where_ + ": field '" + key + "' has the wrong type");
        }
    }

    const json& j_;
    std::string where_;
};

inline TrajectoryInstance trajectory_from_json(const json& j) {
    const ConfigView v(j, "instance");
    const auto dim = v.required<std::size_t>("dimension");
    std::vector<Response> rs;
    const json& arr = v.array("responses");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const ConfigView r(arr[i], "instance.responses[" + std::to_string(i) + "]");
        Response resp{r.required<std::string>("id"), r.required<Vec>("features"), r.required<bool>("positive")};
        resp.length = r.optional<double>("length", 1.0);
        rs.push_back(std::move(resp));
    }
    return TrajectoryInstance(v.required<std::string>("prompt_id"), dim, std::move(rs));
}

inline json to_json(const TrajectoryInstance& inst) {
    json rs = json::array();
    for (std::size_t i = 0; i < inst.size(); ++i) {
        json r{{"id", inst.id(i)},
               {"features", Vec(inst.features(i).begin(), inst.features(i).end())},
               {"positive", inst.positive(i)}};
        if (inst.length(i) != 1.0)
            r["length"] = inst.length(i);
        rs.push_back(std::move(r));
    }
    return {{"prompt_id", inst.prompt_id()}, {"dimension", inst.dimension()}, {"responses", std::move(rs)}};
}

inline TokenInstance token_from_json(const json& j) {
    const ConfigView v(j, "instance");
    const auto dim = v.required<std::size_t>("dimension");
    const int max_length = v.required<int>("max_length");
    std::optional<int> eos;
    if (v.has("eos_index"))
        eos = v.required<int>("eos_index");
    std::vector<Token> tokens;
    const json& arr = v.array("tokens");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const ConfigView t(arr[i], "instance.tokens[" + std::to_string(i) + "]");
        tokens.push_back({t.required<std::string>("id"), t.required<Vec>("features")});
    }
    const ConfigView rule = v.child("positive_rule");
    const auto kind = rule.required<std::string>("kind");
    PositiveRule pr;
    if (kind == "sequence_set")
        pr = SequenceSetRule{rule.required<std::vector<Sequence>>("sequences")};
    else if (kind == "all_tokens_equal")
        pr = AllTokensEqualRule{rule.required<int>("token")};
    else
        throw ConfigError("instance.positive_rule: unknown kind '" + kind + "'");
    const auto cap = v.optional<std::size_t>("enumeration_cap", kDefaultEnumerationCap);
    return TokenInstance(v.required<std::string>("prompt_id"), dim, std::move(tokens), max_length, eos,
                         std::move(pr), cap);
}

inline json to_json(const TokenInstance& inst) {
    json tokens = json::array();
    for (int t = 0; t < inst.vocab_size(); ++t)
        tokens.push_back({{"id", inst.token_id(t)}, {"features", Vec(inst.features(t).begin(), inst.features(t).end())}});
    json rule;
    if (const auto* set = std::get_if<SequenceSetRule>(&inst.rule()))
        rule = {{"kind", "sequence_set"}, {"sequences", set->sequences}};
    else if (const auto* eq = std::get_if<AllTokensEqualRule>(&inst.rule()))
        rule = {{"kind", "all_tokens_equal"}, {"token", eq->token}};
    else
        throw InvalidInput("to_json: predicate rules have no JSON form");
    return {{"prompt_id", inst.prompt_id()},
            {"dimension", inst.dimension()},
            {"max_length", inst.max_length()},
            {"eos_index", inst.eos() ? json(*inst.eos()) : json(nullptr)},
            {"tokens", std::move(tokens)},
            {"positive_rule", std::move(rule)}};
}

using AnyInstance = std::variant<TrajectoryInstance, TokenInstance>;

/// Token instances are recognized by their "tokens" array.
inline AnyInstance instance_from_json(const json& j) {
    if (j.is_object() && j.contains("tokens"))
        return token_from_json(j);
    return trajectory_from_json(j);
}

}  // namespace gradgap
