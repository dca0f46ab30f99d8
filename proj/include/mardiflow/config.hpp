#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mardiflow/model.hpp"

// Parsing of the three user-facing inputs: the JSON inputs object, the INI
// config file, and the command line. CLI values override config values,
// built-in defaults apply last.

namespace mardiflow {

inline constexpr const char* kDefaultWorkflowTitle =
    "This is a CSE workflow description under MaRDIFlow";
inline constexpr const char* kDefaultOutputDirectory = "Output";

struct MalformedJson : std::runtime_error {
    std::size_t byte;
    MalformedJson(std::size_t byte_, const std::string& what)
        : std::runtime_error("malformed JSON at byte " + std::to_string(byte_) + ": " + what),
          byte(byte_) {}
};

struct NestedValue : std::runtime_error {
    std::string key;
    explicit NestedValue(const std::string& key_)
        : std::runtime_error("inputs key \"" + key_ +
                             "\": values must be scalars (number, string or boolean)"),
          key(key_) {}
};

struct MalformedIni : std::runtime_error {
    int line;
    MalformedIni(int line_, const std::string& what)
        : std::runtime_error("malformed INI at line " + std::to_string(line_) + ": " + what),
          line(line_) {}
};

struct DuplicateKey : std::runtime_error {
    int line;
    std::string section, key;
    DuplicateKey(int line_, std::string section_, std::string key_)
        : std::runtime_error("duplicate key \"" + key_ + "\" in section [" + section_ +
                             "] at line " + std::to_string(line_)),
          line(line_), section(std::move(section_)), key(std::move(key_)) {}
};

struct UnknownFlag : std::runtime_error {
    std::string flag;
    explicit UnknownFlag(std::string flag_)
        : std::runtime_error("unknown flag: " + flag_), flag(std::move(flag_)) {}
};

struct MissingFlagValue : std::runtime_error {
    std::string flag;
    explicit MissingFlagValue(std::string flag_)
        : std::runtime_error("flag " + flag_ + " requires a value"), flag(std::move(flag_)) {}
};

struct BadFlagValue : std::runtime_error {
    std::string flag;
    BadFlagValue(std::string flag_, const std::string& what)
        : std::runtime_error("bad value for " + flag_ + ": " + what), flag(std::move(flag_)) {}
};

struct ConflictingDataFlags : std::runtime_error {
    ConflictingDataFlags()
        : std::runtime_error("--get-data and --get-url-data cannot both be set") {}
};

enum class ComponentSelector { Unset, MathData, MathSolver };

// Effective option set after merging CLI, config file and defaults.
struct Config {
    std::string workflow_title = kDefaultWorkflowTitle;
    std::optional<std::string> input_path;
    std::string output_directory = kDefaultOutputDirectory;
    ComponentSelector component_selector = ComponentSelector::Unset;
    bool display_html = false;
    bool display_pdf = false;
    std::optional<std::pair<std::string, std::string>> inputmarkdown;  // in, out
    std::optional<std::string> get_data;
    std::optional<std::string> get_url_data;
    // User-defined sections are retained verbatim: section -> key -> value.
    std::map<std::string, std::map<std::string, std::string>> user_entries;

    bool operator==(const Config&) const = default;
};

// What the command line alone said; unset fields defer to the config file.
struct CliOptions {
    bool help = false;
    bool component_group = false;  // --component, grouping marker
    bool data_group = false;       // --data, grouping marker
    std::optional<std::string> workflow_title;
    std::optional<std::string> input;
    std::optional<std::string> output_directory;
    std::optional<std::string> config_path;
    std::optional<ComponentSelector> selector;
    std::optional<bool> display_html;
    std::optional<bool> display_pdf;
    std::optional<std::pair<std::string, std::string>> inputmarkdown;
    std::optional<std::string> get_data;
    std::optional<std::string> get_url_data;

    bool operator==(const CliOptions&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Accepted spellings: true/false/1/0 (case-insensitive); empty parses false.
inline std::optional<bool> parse_bool(std::string_view raw) {
    std::string v = to_lower(trim(raw));
    if (v.empty() || v == "false" || v == "0") return false;
    if (v == "true" || v == "1") return true;
    return std::nullopt;
}

inline std::pair<std::string, std::string> split_markdown_paths(const std::string& flag,
                                                                const std::string& value) {
    auto colon = value.find(':');
    if (colon == std::string::npos)
        throw BadFlagValue(flag, "expected <input path>:<output path>");
    std::string in = value.substr(0, colon);
    std::string out = value.substr(colon + 1);
    if (in.empty() || out.empty())
        throw BadFlagValue(flag, "expected <input path>:<output path>");
    return {in, out};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Inputs object (.json)

inline InputsObject parse_inputs(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedJson(e.byte, e.what());
    }
    if (!j.is_object()) throw MalformedJson(0, "top-level value must be an object");

    InputsObject inputs;
    for (const auto& [key, value] : j.items()) {
        if (key.empty()) throw MalformedJson(0, "empty parameter name");
        if (value.is_number()) {
            inputs.entries[key] = value.get<double>();
        } else if (value.is_string()) {
            inputs.entries[key] = value.get<std::string>();
        } else if (value.is_boolean()) {
            inputs.entries[key] = value.get<bool>();
        } else {
            throw NestedValue(key);
        }
    }
    return inputs;
}

// Stable byte form of an inputs object, used for provenance digests.
inline std::string canonical_inputs_bytes(const InputsObject& inputs) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, value] : inputs.entries) {
        std::visit([&](const auto& v) { j[key] = v; }, value);
    }
    return j.dump() + "\n";
}

// ---------------------------------------------------------------------------
// Config file (.ini)

// Dialect: [section] headers, key = value, full-line # or ; comments,
// whitespace-trimmed keys and values, case-sensitive, no line continuations.
inline Config parse_config(std::string_view text) {
    Config cfg;
    std::string section = "default";
    std::map<std::string, std::set<std::string>> seen;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                              : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

        std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw MalformedIni(line_no, "bad section header");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw MalformedIni(line_no, "empty section name");
            continue;
        }

        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw MalformedIni(line_no, "expected key = value");
        std::string key = detail::trim(std::string_view(line).substr(0, eq));
        std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw MalformedIni(line_no, "empty key");
        if (!seen[section].insert(key).second) throw DuplicateKey(line_no, section, key);

        auto bool_value = [&]() {
            auto b = detail::parse_bool(value);
            if (!b) throw MalformedIni(line_no, "expected a boolean for key \"" + key + "\"");
            return *b;
        };

        if (section == "default") {
            if (key == "workflow_title") {
                cfg.workflow_title = value;
            } else if (key == "input") {
                if (!value.empty()) cfg.input_path = value;
            } else if (key == "output_directory") {
                if (!value.empty()) cfg.output_directory = value;
            } else if (key == "math_data") {
                if (bool_value()) cfg.component_selector = ComponentSelector::MathData;
            } else if (key == "math_solver") {
                if (bool_value()) cfg.component_selector = ComponentSelector::MathSolver;
            } else if (key == "display_html") {
                cfg.display_html = bool_value();
            } else if (key == "display_pdf") {
                cfg.display_pdf = bool_value();
            } else if (key == "inputmarkdown") {
                if (!value.empty())
                    cfg.inputmarkdown = detail::split_markdown_paths("inputmarkdown", value);
            } else if (key == "get_data") {
                if (!value.empty()) cfg.get_data = value;
            } else if (key == "get_url_data") {
                if (!value.empty()) cfg.get_url_data = value;
            } else {
                cfg.user_entries[section][key] = value;
            }
        } else {
            cfg.user_entries[section][key] = value;
        }
    }
    return cfg;
}

inline std::string config_to_ini(const Config& cfg) {
    std::ostringstream out;
    out << "[default]\n";
    out << "workflow_title = " << cfg.workflow_title << "\n";
    if (cfg.input_path) out << "input = " << *cfg.input_path << "\n";
    out << "output_directory = " << cfg.output_directory << "\n";
    if (cfg.component_selector == ComponentSelector::MathData) out << "math_data = true\n";
    if (cfg.component_selector == ComponentSelector::MathSolver) out << "math_solver = true\n";
    out << "display_html = " << (cfg.display_html ? "true" : "false") << "\n";
    out << "display_pdf = " << (cfg.display_pdf ? "true" : "false") << "\n";
    if (cfg.inputmarkdown)
        out << "inputmarkdown = " << cfg.inputmarkdown->first << ":" << cfg.inputmarkdown->second
            << "\n";
    if (cfg.get_data) out << "get_data = " << *cfg.get_data << "\n";
    if (cfg.get_url_data) out << "get_url_data = " << *cfg.get_url_data << "\n";
    for (const auto& [section, entries] : cfg.user_entries) {
        if (section != "default") out << "\n[" << section << "]\n";
        for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Command line

// Flag surface (exact spellings): --help, --workflow-title <s>, --input <path>,
// --output-directory <path>, --config <path>, --component, --math-data,
// --math-solver, --display_html <bool>, --display_pdf <bool>,
// --inputmarkdown <in>:<out>, --data, --get-data <path>, --get-url-data <url>.
// Values attach as "--flag value" or "--flag=value".
inline CliOptions parse_cli(const std::vector<std::string>& args) {
    CliOptions opts;

    std::size_t i = 0;
    auto take_value = [&](const std::string& flag,
                          const std::optional<std::string>& attached) -> std::string {
        if (attached) return *attached;
        if (i + 1 >= args.size() || args[i + 1].starts_with("--"))
            throw MissingFlagValue(flag);
        return args[++i];
    };

    for (; i < args.size(); ++i) {
        std::string arg = args[i];
        std::optional<std::string> attached;
        if (auto eq = arg.find('='); arg.starts_with("--") && eq != std::string::npos) {
            attached = arg.substr(eq + 1);
            arg = arg.substr(0, eq);
        }

        if (arg == "--help") {
            opts.help = true;
        } else if (arg == "--workflow-title") {
            opts.workflow_title = take_value(arg, attached);
        } else if (arg == "--input") {
            opts.input = take_value(arg, attached);
        } else if (arg == "--output-directory") {
            opts.output_directory = take_value(arg, attached);
        } else if (arg == "--config") {
            opts.config_path = take_value(arg, attached);
        } else if (arg == "--component") {
            opts.component_group = true;
        } else if (arg == "--data") {
            opts.data_group = true;
        } else if (arg == "--math-data") {
            opts.selector = ComponentSelector::MathData;
        } else if (arg == "--math-solver") {
            opts.selector = ComponentSelector::MathSolver;
        } else if (arg == "--display_html" || arg == "--display_pdf") {
            std::string v = take_value(arg, attached);
            auto b = detail::parse_bool(v);
            if (!b) throw BadFlagValue(arg, "expected true/false/1/0 or empty");
            (arg == "--display_html" ? opts.display_html : opts.display_pdf) = *b;
        } else if (arg == "--inputmarkdown") {
            opts.inputmarkdown = detail::split_markdown_paths(arg, take_value(arg, attached));
        } else if (arg == "--get-data") {
            opts.get_data = take_value(arg, attached);
        } else if (arg == "--get-url-data") {
            opts.get_url_data = take_value(arg, attached);
        } else {
            throw UnknownFlag(args[i]);
        }
    }
    return opts;
}

// CLI wins over config file; built-in defaults apply last (they are already
// baked into Config's field initializers).
inline Config merge_options(const CliOptions& cli, Config cfg) {
    if (cli.workflow_title) cfg.workflow_title = *cli.workflow_title;
    if (cli.input) cfg.input_path = *cli.input;
    if (cli.output_directory) cfg.output_directory = *cli.output_directory;
    if (cli.selector) cfg.component_selector = *cli.selector;
    if (cli.display_html) cfg.display_html = *cli.display_html;
    if (cli.display_pdf) cfg.display_pdf = *cli.display_pdf;
    if (cli.inputmarkdown) cfg.inputmarkdown = *cli.inputmarkdown;
    if (cli.get_data) cfg.get_data = *cli.get_data;
    if (cli.get_url_data) cfg.get_url_data = *cli.get_url_data;
    if (cfg.output_directory.empty()) cfg.output_directory = kDefaultOutputDirectory;
    if (cfg.get_data && cfg.get_url_data) throw ConflictingDataFlags();
    return cfg;
}

}  // namespace mardiflow
