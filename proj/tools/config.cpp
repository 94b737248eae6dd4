#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "gmpl/errors.hpp"

namespace gmpl::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void add_entry(ConfigEntries& out, std::string key, std::string value) {
    if (key.empty()) throw ConfigError("empty config key");
    for (const auto& [k, v] : out)
        if (k == key) throw ConfigError(fmt::format("duplicate config key '{}'", key));
    out.emplace_back(std::move(key), std::move(value));
}

std::string json_scalar(const nlohmann::json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) return fmt::format("{}", v.get<double>());
    throw ConfigError(fmt::format("config key '{}' must be a scalar or a list of scalars", key));
}

ConfigEntries parse_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(fmt::format("malformed JSON config: {}", e.what()));
    }
    if (!j.is_object()) throw ConfigError("JSON config must be a single object");
    ConfigEntries out;
    for (const auto& [key, v] : j.items()) {
        if (v.is_array()) {
            std::string joined;
            for (const auto& x : v) {
                if (!joined.empty()) joined += ',';
                joined += json_scalar(x, key);
            }
            add_entry(out, key, joined);
        } else {
            add_entry(out, key, json_scalar(v, key));
        }
    }
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    for (;;) {
        const auto p = s.find(sep);
        parts.push_back(trim(s.substr(0, p)));
        if (p == std::string_view::npos) return parts;
        s.remove_prefix(p + 1);
    }
}

}  // namespace

ConfigEntries parse_config(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return parse_json(text);

    ConfigEntries out;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(fmt::format("config line {}: expected key = value", line_no));
        const std::string_view key = trim(line.substr(0, eq));
        if (key.find_first_of(" \t") != std::string_view::npos)
            throw ConfigError(fmt::format("config line {}: malformed key '{}'", line_no, key));
        add_entry(out, std::string(key), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

ConfigEntries load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && p == text.data() + text.size() && !text.empty()) return v;
    // 1e5 and friends
    const double d = parse_real(text, what);
    if (d >= 0 && d < 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", what, text));
}

double parse_real(std::string_view text, std::string_view what) {
    text = trim(text);
    if (text == "inf") return HUGE_VAL;
    double v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size() || text.empty() || std::isnan(v))
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, text));
    return v;
}

ResolvedConfig::ResolvedConfig(const ExperimentInfo& info, ConfigEntries values)
    : info_(&info), values_(std::move(values)) {}

const std::string& ResolvedConfig::str(std::string_view key) const {
    for (const auto& [k, v] : values_)
        if (k == key) return v;
    throw ConfigError(fmt::format("'{}' takes no parameter '{}'", info_->name, key));
}

std::uint64_t ResolvedConfig::u64(std::string_view key) const { return parse_u64(str(key), key); }

double ResolvedConfig::real(std::string_view key) const { return parse_real(str(key), key); }

std::vector<std::uint64_t> ResolvedConfig::u64_list(std::string_view key) const {
    std::vector<std::uint64_t> out;
    for (const std::string_view part : split(str(key), ',')) {
        const auto dots = part.find("..");
        if (dots == std::string_view::npos) {
            out.push_back(parse_u64(part, key));
            continue;
        }
        const std::uint64_t a = parse_u64(part.substr(0, dots), key), b = parse_u64(part.substr(dots + 2), key);
        if (b < a || b - a > 1'000'000) throw ConfigError(fmt::format("{}: bad range '{}'", key, part));
        for (std::uint64_t x = a; x <= b; ++x) out.push_back(x);
    }
    return out;
}

std::string ResolvedConfig::to_text() const {
    std::string out = fmt::format("experiment = {}\n", info_->name);
    for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
    return out;
}

ResolvedConfig resolve(const ExperimentInfo& info, const ConfigEntries& file, const ConfigEntries& overrides) {
    ConfigEntries values;
    for (const ParamSpec& p : info.params) values.emplace_back(p.key, p.fallback);
    auto apply = [&](const ConfigEntries& src) {
        for (const auto& [k, v] : src) {
            if (k == "experiment") {
                if (v != info.name)
                    throw ConfigError(fmt::format("config names experiment '{}', not '{}'", v, info.name));
                continue;
            }
            auto it = std::find_if(values.begin(), values.end(), [&](const auto& e) { return e.first == k; });
            if (it == values.end()) throw ConfigError(fmt::format("'{}' takes no parameter '{}'", info.name, k));
            it->second = v;
        }
    };
    apply(file);
    apply(overrides);
    return ResolvedConfig(info, std::move(values));
}

}  // namespace gmpl::cli
