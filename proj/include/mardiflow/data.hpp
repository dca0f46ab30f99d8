#pragma once

#include <curl/curl.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mardiflow/digest.hpp"

// Data-level (surrogate) realizations: CSV lookup tables, URL-fetched
// sources, and the time-average objective over a sampled trajectory.

namespace mardiflow {

struct MalformedCsv : std::runtime_error {
    int line;
    MalformedCsv(int line_, const std::string& what)
        : std::runtime_error("malformed CSV at line " + std::to_string(line_) + ": " + what),
          line(line_) {}
};

struct NonMonotonicX : std::runtime_error {
    int line;
    explicit NonMonotonicX(int line_)
        : std::runtime_error("first column must be strictly increasing (line " +
                             std::to_string(line_) + ")"),
          line(line_) {}
};

struct TooFewRows : std::runtime_error {
    TooFewRows() : std::runtime_error("table needs at least 2 rows") {}
};

struct OutOfRange : std::runtime_error {
    double x;
    explicit OutOfRange(double x_)
        : std::runtime_error("x outside table range (no extrapolation)"), x(x_) {}
};

struct UnsupportedScheme : std::runtime_error {
    explicit UnsupportedScheme(const std::string& url)
        : std::runtime_error("unsupported URL scheme: " + url) {}
};

struct TransportFailure : std::runtime_error {
    explicit TransportFailure(const std::string& what)
        : std::runtime_error("transport failure: " + what) {}
};

struct HttpStatusError : std::runtime_error {
    long code;
    explicit HttpStatusError(long code_)
        : std::runtime_error("HTTP status " + std::to_string(code_)), code(code_) {}
};

struct CoverageError : std::runtime_error {
    explicit CoverageError(const std::string& what)
        : std::runtime_error("series does not cover requested interval: " + what) {}
};

struct Knot {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Knot&) const = default;
};

// Piecewise-linear data source; x strictly increasing, at least 2 knots.
struct LookupTable {
    std::vector<Knot> knots;

    bool operator==(const LookupTable&) const = default;
};

struct SeriesSample {
    double t = 0.0;
    double value = 0.0;

    bool operator==(const SeriesSample&) const = default;
};

// Sampled trajectory (t strictly increasing, at least 2 samples).
struct TimeSeries {
    std::vector<SeriesSample> samples;

    bool operator==(const TimeSeries&) const = default;
};

namespace detail {

inline bool parse_strict_double(const std::string& field, double& out) {
    const char* s = field.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    return end == s + field.size() && !field.empty();
}

// Shared CSV reader: numeric rows with a fixed column count, one optional
// header line, LF or CRLF endings.
inline std::vector<std::vector<double>> parse_numeric_csv(std::string_view text,
                                                          std::size_t min_columns,
                                                          std::size_t max_columns) {
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    bool first_content_line = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw =
            text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (raw.empty()) continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = raw.find(',', start);
            fields.emplace_back(raw.substr(
                start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }

        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            std::string trimmed = fields[i];
            // Trim surrounding blanks only; decimal point is '.'.
            auto b = trimmed.find_first_not_of(" \t");
            auto e = trimmed.find_last_not_of(" \t");
            trimmed = b == std::string::npos ? std::string() : trimmed.substr(b, e - b + 1);
            if (!parse_strict_double(trimmed, values[i])) {
                numeric = false;
                break;
            }
            if (!std::isfinite(values[i]))
                throw MalformedCsv(line_no, "non-finite value");
        }

        if (!numeric) {
            if (first_content_line) {  // header row
                first_content_line = false;
                continue;
            }
            throw MalformedCsv(line_no, "non-numeric field");
        }
        first_content_line = false;
        if (fields.size() < min_columns || fields.size() > max_columns)
            throw MalformedCsv(line_no, "expected " + std::to_string(min_columns) +
                                            (max_columns == min_columns ? "" : "+") + " columns, got " +
                                            std::to_string(fields.size()));
        rows.push_back(std::move(values));
    }
    return rows;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace detail

inline LookupTable parse_table(std::string_view text) {
    auto rows = detail::parse_numeric_csv(text, 2, 2);
    if (rows.size() < 2) throw TooFewRows();
    LookupTable table;
    table.knots.reserve(rows.size());
    int row_no = 0;
    for (const auto& row : rows) {
        ++row_no;
        if (!table.knots.empty() && row[0] <= table.knots.back().x) throw NonMonotonicX(row_no);
        table.knots.push_back({row[0], row[1]});
    }
    return table;
}

inline LookupTable load_table(const std::filesystem::path& path) {
    return parse_table(detail::read_file_bytes(path));
}

// Time-series CSV: first column t, second the sampled value; extra columns
// are ignored so solver outputs with several observables load directly.
inline TimeSeries parse_time_series(std::string_view text) {
    auto rows = detail::parse_numeric_csv(text, 2, 64);
    if (rows.size() < 2) throw TooFewRows();
    TimeSeries series;
    series.samples.reserve(rows.size());
    int row_no = 0;
    for (const auto& row : rows) {
        ++row_no;
        if (!series.samples.empty() && row[0] <= series.samples.back().t)
            throw NonMonotonicX(row_no);
        series.samples.push_back({row[0], row[1]});
    }
    return series;
}

inline TimeSeries load_time_series(const std::filesystem::path& path) {
    return parse_time_series(detail::read_file_bytes(path));
}

inline std::string table_to_csv(const LookupTable& table) {
    std::string out;
    char buf[64];
    for (const auto& k : table.knots) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", k.x, k.y);
        out += buf;
    }
    return out;
}

// Piecewise-linear interpolation, exact at knots, no extrapolation.
inline double interpolate(const LookupTable& table, double x) {
    const auto& knots = table.knots;
    if (knots.size() < 2) throw TooFewRows();
    if (x < knots.front().x || x > knots.back().x) throw OutOfRange(x);

    auto it = std::lower_bound(knots.begin(), knots.end(), x,
                               [](const Knot& k, double v) { return k.x < v; });
    if (it != knots.end() && it->x == x) return it->y;
    const Knot& hi = *it;
    const Knot& lo = *(it - 1);
    double t = (x - lo.x) / (hi.x - lo.x);
    return lo.y + t * (hi.y - lo.y);
}

struct FetchResult {
    std::string bytes;
    Digest digest;
};

namespace detail {

inline size_t curl_write_to_string(char* ptr, size_t size, size_t nmemb, void* userdata) {
    auto* out = static_cast<std::string*>(userdata);
    out->append(ptr, size * nmemb);
    return size * nmemb;
}

inline void curl_global_init_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

inline FetchResult fetch_http(const std::string& url) {
    curl_global_init_once();
    CURL* curl = curl_easy_init();
    if (!curl) throw TransportFailure("curl init failed");

    std::string body;
    char errbuf[CURL_ERROR_SIZE] = {0};
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, curl_write_to_string);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &body);
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_MAXREDIRS, 5L);
    curl_easy_setopt(curl, CURLOPT_TIMEOUT, 30L);
    curl_easy_setopt(curl, CURLOPT_NOSIGNAL, 1L);
    curl_easy_setopt(curl, CURLOPT_ERRORBUFFER, errbuf);

    CURLcode rc = curl_easy_perform(curl);
    long status = 0;
    curl_off_t expected_length = -1;
    if (rc == CURLE_OK) {
        curl_easy_getinfo(curl, CURLINFO_RESPONSE_CODE, &status);
        curl_easy_getinfo(curl, CURLINFO_CONTENT_LENGTH_DOWNLOAD_T, &expected_length);
    }
    curl_easy_cleanup(curl);

    if (rc != CURLE_OK)
        throw TransportFailure(errbuf[0] ? errbuf : curl_easy_strerror(rc));
    if (status >= 400) throw HttpStatusError(status);
    if (expected_length >= 0 && static_cast<curl_off_t>(body.size()) != expected_length)
        throw TransportFailure("body length does not match Content-Length");
    return {body, hash_artifact(body)};
}

}  // namespace detail

// Fetches the body of an http(s) or file URL and digests it; the digest goes
// into provenance alongside the artifact.
inline FetchResult fetch_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw UnsupportedScheme(url);
    std::string scheme = url.substr(0, scheme_end);
    std::transform(scheme.begin(), scheme.end(), scheme.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    if (scheme == "file") {
        std::string path = url.substr(scheme_end + 3);
        std::string bytes;
        try {
            bytes = detail::read_file_bytes(path);
        } catch (const std::exception& e) {
            throw TransportFailure(e.what());
        }
        return {bytes, hash_artifact(bytes)};
    }
    if (scheme == "http" || scheme == "https") return detail::fetch_http(url);
    throw UnsupportedScheme(url);
}

// Time average of a sampled trajectory over [0, t_end]: trapezoidal
// quadrature, exact for the piecewise-linear data model.
inline double time_average_objective(const TimeSeries& series, double t_end) {
    if (t_end <= 0.0) throw CoverageError("t_end must be positive");
    const auto& s = series.samples;
    if (s.size() < 2) throw TooFewRows();
    if (s.front().t > 0.0 || s.back().t < t_end)
        throw CoverageError("samples span [" + std::to_string(s.front().t) + ", " +
                            std::to_string(s.back().t) + "], need [0, " + std::to_string(t_end) +
                            "]");

    auto value_at = [&](double t) {
        auto it = std::lower_bound(s.begin(), s.end(), t,
                                   [](const SeriesSample& a, double v) { return a.t < v; });
        if (it != s.end() && it->t == t) return it->value;
        const SeriesSample& hi = *it;
        const SeriesSample& lo = *(it - 1);
        return lo.value + (t - lo.t) / (hi.t - lo.t) * (hi.value - lo.value);
    };

    double integral = 0.0;
    double prev_t = 0.0;
    double prev_v = value_at(0.0);
    for (const auto& sample : s) {
        if (sample.t <= 0.0) continue;
        double t = std::min(sample.t, t_end);
        double v = t == sample.t ? sample.value : value_at(t);
        integral += 0.5 * (prev_v + v) * (t - prev_t);
        prev_t = t;
        prev_v = v;
        if (sample.t >= t_end) break;
    }
    return integral / t_end;
}

}  // namespace mardiflow
