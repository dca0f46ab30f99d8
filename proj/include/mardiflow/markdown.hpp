#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Markdown description rendering (the level-1 realization of a component).
// Covered subset: ATX headings, paragraphs, unordered/ordered lists, fenced
// code blocks, inline code, emphasis/strong, links. Everything else passes
// through as escaped text. PDF output delegates to an external converter.

namespace mardiflow {

struct NoConverterConfigured : std::runtime_error {
    NoConverterConfigured()
        : std::runtime_error("no PDF converter configured (set [tools] pdf_converter)") {}
};

struct ConverterFailed : std::runtime_error {
    int exit_code;
    explicit ConverterFailed(int exit_code_)
        : std::runtime_error("PDF converter exited with code " + std::to_string(exit_code_)),
          exit_code(exit_code_) {}
};

struct MarkdownDoc {
    std::string source;
    std::string source_path;
};

namespace detail {

inline std::string escape_html(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// Inline constructs: `code`, [text](url), **strong**, __strong__, *em*, _em_.
// Unclosed markers fall back to literal escaped text.
inline std::string render_inline(std::string_view text) {
    std::string out;
    std::size_t i = 0;
    auto starts = [&](std::string_view marker) {
        return text.substr(i).starts_with(marker);
    };

    while (i < text.size()) {
        if (text[i] == '`') {
            auto close = text.find('`', i + 1);
            if (close != std::string_view::npos) {
                out += "<code>" + escape_html(text.substr(i + 1, close - i - 1)) + "</code>";
                i = close + 1;
                continue;
            }
        } else if (text[i] == '[') {
            auto close_bracket = text.find(']', i + 1);
            if (close_bracket != std::string_view::npos && close_bracket + 1 < text.size() &&
                text[close_bracket + 1] == '(') {
                auto close_paren = text.find(')', close_bracket + 2);
                if (close_paren != std::string_view::npos) {
                    std::string_view label = text.substr(i + 1, close_bracket - i - 1);
                    std::string_view url =
                        text.substr(close_bracket + 2, close_paren - close_bracket - 2);
                    out += "<a href=\"" + escape_html(url) + "\">" + escape_html(label) + "</a>";
                    i = close_paren + 1;
                    continue;
                }
            }
        } else if (starts("**") || starts("__")) {
            std::string marker(text.substr(i, 2));
            auto close = text.find(marker, i + 2);
            if (close != std::string_view::npos && close > i + 2) {
                out += "<strong>" + render_inline(text.substr(i + 2, close - i - 2)) + "</strong>";
                i = close + 2;
                continue;
            }
        } else if (text[i] == '*' || text[i] == '_') {
            char marker = text[i];
            auto close = text.find(marker, i + 1);
            if (close != std::string_view::npos && close > i + 1) {
                out += "<em>" + render_inline(text.substr(i + 1, close - i - 1)) + "</em>";
                i = close + 1;
                continue;
            }
        }
        out += escape_html(text.substr(i, 1));
        ++i;
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return lines;
}

inline bool is_blank(const std::string& line) {
    return line.find_first_not_of(" \t") == std::string::npos;
}

// Heading level 1..6, or 0 if the line is not an ATX heading.
inline int heading_level(const std::string& line, std::string& text) {
    std::size_t hashes = 0;
    while (hashes < line.size() && line[hashes] == '#') ++hashes;
    if (hashes == 0 || hashes > 6) return 0;
    if (hashes < line.size() && line[hashes] != ' ') return 0;
    text = line.substr(std::min(line.size(), hashes + 1));
    return static_cast<int>(hashes);
}

inline bool unordered_item(const std::string& line, std::string& text) {
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*' || line[0] == '+') &&
        line[1] == ' ') {
        text = line.substr(2);
        return true;
    }
    return false;
}

inline bool ordered_item(const std::string& line, std::string& text) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i + 1 >= line.size() || line[i] != '.' || line[i + 1] != ' ') return false;
    text = line.substr(i + 2);
    return true;
}

}  // namespace detail

// Renders the markdown subset to a standalone HTML document.
inline std::string render_markdown(const MarkdownDoc& doc, const std::string& title = {}) {
    auto lines = detail::split_lines(doc.source);
    std::ostringstream body;

    std::size_t n = 0;
    while (n < lines.size()) {
        const std::string& line = lines[n];
        if (detail::is_blank(line)) {
            ++n;
            continue;
        }

        if (line.starts_with("```")) {
            body << "<pre><code>";
            ++n;
            while (n < lines.size() && !lines[n].starts_with("```")) {
                body << detail::escape_html(lines[n]) << "\n";
                ++n;
            }
            if (n < lines.size()) ++n;  // closing fence
            body << "</code></pre>\n";
            continue;
        }

        std::string text;
        if (int level = detail::heading_level(line, text); level > 0) {
            body << "<h" << level << ">" << detail::render_inline(text) << "</h" << level << ">\n";
            ++n;
            continue;
        }

        if (detail::unordered_item(line, text)) {
            body << "<ul>\n";
            while (n < lines.size() && detail::unordered_item(lines[n], text)) {
                body << "<li>" << detail::render_inline(text) << "</li>\n";
                ++n;
            }
            body << "</ul>\n";
            continue;
        }

        if (detail::ordered_item(line, text)) {
            body << "<ol>\n";
            while (n < lines.size() && detail::ordered_item(lines[n], text)) {
                body << "<li>" << detail::render_inline(text) << "</li>\n";
                ++n;
            }
            body << "</ol>\n";
            continue;
        }

        // Paragraph: consecutive non-blank, non-structural lines.
        std::string paragraph = line;
        ++n;
        std::string probe;
        while (n < lines.size() && !detail::is_blank(lines[n]) &&
               !lines[n].starts_with("```") && detail::heading_level(lines[n], probe) == 0 &&
               !detail::unordered_item(lines[n], probe) && !detail::ordered_item(lines[n], probe)) {
            paragraph += "\n" + lines[n];
            ++n;
        }
        body << "<p>" << detail::render_inline(paragraph) << "</p>\n";
    }

    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>"
         << detail::escape_html(title) << "</title>\n</head>\n<body>\n"
         << body.str() << "</body>\n</html>\n";
    return html.str();
}

// Pipes the rendered HTML through the configured external converter command
// (stdin -> stdout) and returns the converter's output bytes.
inline std::string render_pdf(const MarkdownDoc& doc,
                              const std::optional<std::string>& converter_cmd,
                              const std::string& title = {}) {
    if (!converter_cmd || converter_cmd->empty()) throw NoConverterConfigured();

    const std::string html = render_markdown(doc, title);

    namespace fs = std::filesystem;
    std::random_device rd;
    const std::string tag = std::to_string(rd()) + "-" + std::to_string(rd());
    const fs::path in_path = fs::temp_directory_path() / ("mardiflow-md-" + tag + ".html");
    const fs::path out_path = fs::temp_directory_path() / ("mardiflow-md-" + tag + ".out");
    struct Cleanup {
        fs::path a, b;
        ~Cleanup() {
            std::error_code ec;
            fs::remove(a, ec);
            fs::remove(b, ec);
        }
    } cleanup{in_path, out_path};

    {
        std::ofstream out(in_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write converter input: " + in_path.string());
        out << html;
    }

    auto quote = [](const std::string& s) {
        std::string q = "'";
        for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
        return q + "'";
    };
    const std::string command =
        *converter_cmd + " < " + quote(in_path.string()) + " > " + quote(out_path.string());
    int rc = std::system(command.c_str());
    if (rc == -1) throw ConverterFailed(-1);
    if (WIFEXITED(rc)) {
        if (WEXITSTATUS(rc) != 0) throw ConverterFailed(WEXITSTATUS(rc));
    } else {
        throw ConverterFailed(-1);
    }

    std::ifstream in(out_path, std::ios::binary);
    if (!in) throw ConverterFailed(-1);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace mardiflow
