// Runtime configuration: star thresholds, verdict significance levels, and
// the pecking-order comparison mode, loadable from a small key = value file.
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "capstruct/ingest.hpp"
#include "capstruct/theorylab.hpp"

namespace capstruct::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EngineConfig {
    theorylab::StarThresholds stars;
    theorylab::SignificanceLevels verdicts;
    bool pecking_strict = true;
};

/// Parses "key = value" lines. Blank lines and lines starting with # are
/// skipped; inline "# ..." trailers are stripped. Recognized keys:
///
///   stars.strong      p-value below which a result gets ***   (default 0.01)
///   stars.medium      p-value below which a result gets **    (default 0.05)
///   stars.weak        p-value below which a result gets *     (default 0.10)
///   verdict.followed  p-value below which evidence is firm    (default 0.05)
///   verdict.partial   p-value below which evidence is weak    (default 0.10)
///   pecking.strict    true for strict inequalities            (default true)
///
/// Unknown keys, unparsable values, and out-of-order thresholds all raise
/// ConfigError.
inline EngineConfig parse_config(std::string_view text) {
    EngineConfig cfg;
    const auto lines = ingest::detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = ingest::detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(i + 1) + ": expected key = value");
        const std::string key{ingest::detail::trim(line.substr(0, eq))};
        const std::string value{ingest::detail::trim(line.substr(eq + 1))};
        if (key.empty() || value.empty())
            throw ConfigError("line " + std::to_string(i + 1) + ": expected key = value");

        auto as_level = [&]() {
            double p;
            try {
                p = ingest::detail::parse_double(value, i + 1, key);
            } catch (const ingest::ParseError&) {
                throw ConfigError("line " + std::to_string(i + 1) + ": bad number for " + key);
            }
            if (!(p > 0.0) || !(p < 1.0))
                throw ConfigError("line " + std::to_string(i + 1) + ": " + key +
                                  " must be in (0, 1)");
            return p;
        };

        if (key == "stars.strong") cfg.stars.three = as_level();
        else if (key == "stars.medium") cfg.stars.two = as_level();
        else if (key == "stars.weak") cfg.stars.one = as_level();
        else if (key == "verdict.followed") cfg.verdicts.followed = as_level();
        else if (key == "verdict.partial") cfg.verdicts.partial = as_level();
        else if (key == "pecking.strict") {
            if (value == "true") cfg.pecking_strict = true;
            else if (value == "false") cfg.pecking_strict = false;
            else
                throw ConfigError("line " + std::to_string(i + 1) +
                                  ": pecking.strict must be true or false");
        } else {
            throw ConfigError("line " + std::to_string(i + 1) + ": unknown key '" + key + "'");
        }
    }
    if (!(cfg.stars.three <= cfg.stars.two && cfg.stars.two <= cfg.stars.one))
        throw ConfigError("star thresholds must satisfy strong <= medium <= weak");
    if (!(cfg.verdicts.followed <= cfg.verdicts.partial))
        throw ConfigError("verdict levels must satisfy followed <= partial");
    return cfg;
}

}  // namespace capstruct::config
