// Panel ingestion: CSV parsing, validation, and serialization for firm-year
// financial statement data and daily price series.
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace capstruct::ingest {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MissingColumn : public ParseError {
public:
    explicit MissingColumn(std::string column)
        : ParseError("missing required column: " + column), column_(std::move(column)) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class MalformedNumber : public ParseError {
public:
    MalformedNumber(std::size_t line, std::string column)
        : ParseError("malformed number at line " + std::to_string(line) + ", column " + column),
          line_(line), column_(std::move(column)) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::string column_;
};

class MalformedRow : public ParseError {
public:
    explicit MalformedRow(std::size_t line, const std::string& what)
        : ParseError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class DuplicateYear : public ParseError {
public:
    explicit DuplicateYear(int year)
        : ParseError("duplicate fiscal year: " + std::to_string(year)), year_(year) {}
    int year() const noexcept { return year_; }

private:
    int year_;
};

/// One firm-year of statement data. Currency fields share one (arbitrary) unit.
struct AnnualRecord {
    int fiscal_year = 0;
    double long_term_debt = 0;
    double total_debt = 0;
    double equity = 0;
    double retained_earnings = 0;
    double total_assets = 0;
    double revenue = 0;
    double total_expenses = 0;
    double ebit = 0;
    double net_income = 0;
    double market_value = 0;
    double eps = 0;
    std::optional<double> interest_expense;
    std::optional<double> debt_service;
    std::optional<double> price_year_end;
    std::optional<double> dividends_per_share;
    std::optional<double> sales_per_share;
};

/// Records are kept sorted by fiscal year; parse rejects duplicate years.
struct FirmPanel {
    std::string firm_id;
    std::vector<AnnualRecord> records;

    std::size_t size() const noexcept { return records.size(); }
};

struct PricePoint {
    std::string date;  // ISO-8601 calendar date
    double close = 0;
};

struct PriceSeries {
    std::string firm_id;
    std::vector<PricePoint> points;
};

/// A collection of firm panels plus optional price histories, keyed by firm id.
struct Dataset {
    std::map<std::string, FirmPanel> panels;
    std::map<std::string, PriceSeries> prices;
};

struct ValidationIssue {
    std::string code;
    int year = 0;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;
    std::vector<ValidationIssue> warnings;

    bool ok() const noexcept { return errors.empty(); }
};

namespace detail {

inline constexpr std::array<std::string_view, 12> required_columns = {
    "fiscal_year",   "long_term_debt", "total_debt", "equity",
    "retained_earnings", "total_assets", "revenue",  "total_expenses",
    "ebit",          "net_income",     "market_value", "eps",
};

inline constexpr std::array<std::string_view, 5> optional_columns = {
    "interest_expense", "debt_service", "price_year_end",
    "dividends_per_share", "sales_per_share",
};

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line = text.substr(start, i - start);
            if (!trim(line).empty()) out.push_back(line);
            start = i + 1;
        }
    }
    return out;
}

// Locale independent; "." is the only accepted decimal separator and the
// value must be finite.
inline double parse_double(std::string_view cell, std::size_t line, std::string_view column) {
    double value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value))
        throw MalformedNumber(line, std::string(column));
    return value;
}

inline int parse_int(std::string_view cell, std::size_t line, std::string_view column) {
    int value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw MalformedNumber(line, std::string(column));
    return value;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_number(double value) {
    std::array<char, 40> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    (void)ec;
    return std::string(buf.data(), ptr);
}

}  // namespace detail

/// Parses one firm's panel from CSV text (UTF-8, comma separated, header row).
/// Columns may appear in any order; the optional firm_id column overrides
/// fallback_firm_id. Rows are sorted by fiscal year on return.
inline FirmPanel parse_panel_csv(std::string_view text, std::string_view fallback_firm_id = "") {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    auto lines = detail::split_lines(text);
    if (lines.empty()) throw MalformedRow(1, "empty input");

    auto header = detail::split_fields(lines[0]);
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);
    for (auto col : detail::required_columns)
        if (!index.count(col)) throw MissingColumn(std::string(col));

    auto cell = [&](const std::vector<std::string_view>& fields, std::string_view col)
        -> std::optional<std::string_view> {
        auto it = index.find(col);
        if (it == index.end() || it->second >= fields.size()) return std::nullopt;
        auto v = fields[it->second];
        if (v.empty()) return std::nullopt;
        return v;
    };

    FirmPanel panel;
    panel.firm_id = std::string(fallback_firm_id);
    bool id_from_file = false;
    std::map<int, std::size_t> seen_years;

    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::size_t line_no = r + 1;
        auto fields = detail::split_fields(lines[r]);
        if (fields.size() != header.size())
            throw MalformedRow(line_no, "expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size()));

        AnnualRecord rec;
        auto required = [&](std::string_view col) {
            auto v = cell(fields, col);
            if (!v) throw MalformedNumber(line_no, std::string(col));
            return detail::parse_double(*v, line_no, col);
        };
        auto optional_field = [&](std::string_view col) -> std::optional<double> {
            auto v = cell(fields, col);
            if (!v) return std::nullopt;
            return detail::parse_double(*v, line_no, col);
        };

        {
            auto v = cell(fields, "fiscal_year");
            if (!v) throw MalformedNumber(line_no, "fiscal_year");
            rec.fiscal_year = detail::parse_int(*v, line_no, "fiscal_year");
        }
        rec.long_term_debt = required("long_term_debt");
        rec.total_debt = required("total_debt");
        rec.equity = required("equity");
        rec.retained_earnings = required("retained_earnings");
        rec.total_assets = required("total_assets");
        rec.revenue = required("revenue");
        rec.total_expenses = required("total_expenses");
        rec.ebit = required("ebit");
        rec.net_income = required("net_income");
        rec.market_value = required("market_value");
        rec.eps = required("eps");
        rec.interest_expense = optional_field("interest_expense");
        rec.debt_service = optional_field("debt_service");
        rec.price_year_end = optional_field("price_year_end");
        rec.dividends_per_share = optional_field("dividends_per_share");
        rec.sales_per_share = optional_field("sales_per_share");

        if (auto id = cell(fields, "firm_id"); id && !id_from_file) {
            panel.firm_id = std::string(*id);
            id_from_file = true;
        }

        if (seen_years.count(rec.fiscal_year)) throw DuplicateYear(rec.fiscal_year);
        seen_years.emplace(rec.fiscal_year, r);
        panel.records.push_back(rec);
    }

    std::sort(panel.records.begin(), panel.records.end(),
              [](const AnnualRecord& a, const AnnualRecord& b) { return a.fiscal_year < b.fiscal_year; });
    return panel;
}

/// Emits the canonical 18-column CSV schema. parse(serialize(p)) reproduces
/// every field bit-for-bit (numbers use shortest round-trip formatting).
inline std::string serialize_panel_csv(const FirmPanel& panel) {
    std::string out =
        "firm_id,fiscal_year,long_term_debt,total_debt,equity,retained_earnings,total_assets,"
        "revenue,total_expenses,ebit,net_income,market_value,eps,interest_expense,debt_service,"
        "price_year_end,dividends_per_share,sales_per_share\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? detail::format_number(*v) : std::string();
    };
    for (const auto& r : panel.records) {
        out += panel.firm_id;
        out += ',' + std::to_string(r.fiscal_year);
        for (double v : {r.long_term_debt, r.total_debt, r.equity, r.retained_earnings,
                         r.total_assets, r.revenue, r.total_expenses, r.ebit, r.net_income,
                         r.market_value, r.eps})
            out += ',' + detail::format_number(v);
        out += ',' + opt(r.interest_expense);
        out += ',' + opt(r.debt_service);
        out += ',' + opt(r.price_year_end);
        out += ',' + opt(r.dividends_per_share);
        out += ',' + opt(r.sales_per_share);
        out += '\n';
    }
    return out;
}

/// Parses a daily price history (columns: date, close). Dates must be strictly
/// ascending ISO-8601 strings and closes strictly positive.
inline PriceSeries parse_price_csv(std::string_view text, std::string_view fallback_firm_id = "") {
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    auto lines = detail::split_lines(text);
    if (lines.empty()) throw MalformedRow(1, "empty input");

    auto header = detail::split_fields(lines[0]);
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);
    if (!index.count("date")) throw MissingColumn("date");
    if (!index.count("close")) throw MissingColumn("close");

    PriceSeries series;
    series.firm_id = std::string(fallback_firm_id);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::size_t line_no = r + 1;
        auto fields = detail::split_fields(lines[r]);
        if (fields.size() != header.size())
            throw MalformedRow(line_no, "expected " + std::to_string(header.size()) +
                                            " fields, found " + std::to_string(fields.size()));
        PricePoint p;
        p.date = std::string(fields[index["date"]]);
        if (p.date.size() != 10 || p.date[4] != '-' || p.date[7] != '-')
            throw MalformedRow(line_no, "date is not ISO-8601 (YYYY-MM-DD): " + p.date);
        p.close = detail::parse_double(fields[index["close"]], line_no, "close");
        if (p.close <= 0) throw MalformedRow(line_no, "close must be positive");
        if (!series.points.empty() && p.date <= series.points.back().date)
            throw MalformedRow(line_no, "dates must be strictly ascending");
        series.points.push_back(std::move(p));
    }
    return series;
}

/// Structural checks on a parsed panel. Errors break downstream analysis;
/// warnings (negative equity, negative retained earnings, year gaps) do not.
inline ValidationReport validate_panel(const FirmPanel& panel) {
    ValidationReport report;
    auto error = [&](std::string code, int year, std::string msg) {
        report.errors.push_back({std::move(code), year, std::move(msg)});
    };
    auto warn = [&](std::string code, int year, std::string msg) {
        report.warnings.push_back({std::move(code), year, std::move(msg)});
    };

    if (panel.records.empty()) {
        error("empty_panel", 0, "panel has no records");
        return report;
    }

    const AnnualRecord* prev = nullptr;
    for (const auto& r : panel.records) {
        if (r.fiscal_year < 1900 || r.fiscal_year > 2100)
            error("year_out_of_range", r.fiscal_year, "fiscal year outside 1900..2100");
        if (prev) {
            if (r.fiscal_year == prev->fiscal_year)
                error("duplicate_year", r.fiscal_year, "fiscal year appears twice");
            else if (r.fiscal_year < prev->fiscal_year)
                error("unsorted_years", r.fiscal_year, "years are not ascending");
            else if (r.fiscal_year - prev->fiscal_year > 1)
                warn("year_gap", r.fiscal_year,
                     "gap after " + std::to_string(prev->fiscal_year));
        }
        if (!(r.total_assets > 0))
            error("non_positive_assets", r.fiscal_year, "total_assets must be positive");
        const std::array<std::pair<std::string_view, double>, 11> fields = {{
            {"long_term_debt", r.long_term_debt}, {"total_debt", r.total_debt},
            {"equity", r.equity}, {"retained_earnings", r.retained_earnings},
            {"total_assets", r.total_assets}, {"revenue", r.revenue},
            {"total_expenses", r.total_expenses}, {"ebit", r.ebit},
            {"net_income", r.net_income}, {"market_value", r.market_value}, {"eps", r.eps},
        }};
        for (auto [name, value] : fields)
            if (!std::isfinite(value))
                error("non_finite", r.fiscal_year, std::string(name) + " is not finite");
        if (r.equity < 0) warn("negative_equity", r.fiscal_year, "equity is negative");
        if (r.retained_earnings < 0)
            warn("negative_retained_earnings", r.fiscal_year, "retained earnings are negative");
        prev = &r;
    }
    return report;
}

}  // namespace capstruct::ingest
