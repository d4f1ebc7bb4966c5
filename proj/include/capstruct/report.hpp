// Orchestration and rendering: runs the full per-firm analysis over a dataset
// and renders the results as Markdown, sectioned CSV, or structured JSON.
// Output is a pure function of the inputs (no timestamps, no locale, no
// environment reads), so repeated runs are byte-identical.
#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capstruct/benchmarks.hpp"
#include "capstruct/config.hpp"
#include "capstruct/derive.hpp"
#include "capstruct/ingest.hpp"
#include "capstruct/stats.hpp"
#include "capstruct/theorylab.hpp"

namespace capstruct::report {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedFormat : public ReportError {
public:
    explicit UnsupportedFormat(const std::string& what)
        : ReportError("unsupported format: " + what) {}
};

enum class Format { Markdown, Csv, Structured };

inline Format parse_format(const std::string& name) {
    if (name == "markdown" || name == "md") return Format::Markdown;
    if (name == "csv") return Format::Csv;
    if (name == "structured" || name == "json") return Format::Structured;
    throw UnsupportedFormat(name);
}

inline const char* file_extension(Format f) {
    switch (f) {
        case Format::Markdown: return "md";
        case Format::Csv: return "csv";
        case Format::Structured: return "json";
    }
    return "txt";
}

struct AnalysisOptions {
    config::EngineConfig engine;
    std::optional<double> wacc;
    std::optional<double> roi;
    std::size_t ma_window = 200;
    std::size_t rsi_period = 14;
};

/// Everything the pipeline produced for one firm. Stages that could not run
/// leave their optional empty and record the reason in the matching *_failure
/// string.
struct FirmAnalysis {
    ingest::FirmPanel panel;
    ingest::ValidationReport validation;

    std::optional<derive::DerivedSeries> derived;
    std::string derive_failure;

    std::optional<theorylab::HypothesisBattery> battery;
    std::optional<theorylab::PeckingOrderResult> pecking;
    std::string pecking_failure;
    std::optional<theorylab::PeakResult> peak;
    std::string peak_failure;
    std::vector<theorylab::TheoryVerdict> verdicts;
    std::string verdict_failure;

    std::vector<benchmarks::ScreenRow> ratio_screen;
    std::vector<benchmarks::ScreenRow> quant_screen;

    bool has_prices = false;
    std::vector<std::pair<std::string, double>> moving_average;
    std::string moving_average_note;
    std::optional<benchmarks::RsiResult> rsi;
    std::string rsi_note;

    std::optional<stats::CorrelationMatrix> correlations;
    // aligned with derive::DerivedSeries::variable_names
    std::vector<std::optional<stats::DescriptiveStats>> descriptives;
};

struct ReportBundle {
    std::vector<FirmAnalysis> firms;  // sorted by firm id
    config::EngineConfig engine;
};

/// Runs validation, derivation, the hypothesis battery, both procedures, the
/// verdict classifier, benchmark screens, and (when prices are given) the
/// technical indicators for one firm. Analysis stages run only when the panel
/// validates cleanly; the screens run regardless.
inline FirmAnalysis analyze_firm(const ingest::FirmPanel& panel,
                                 const ingest::PriceSeries* prices,
                                 const AnalysisOptions& opt = {}) {
    FirmAnalysis a;
    a.panel = panel;
    a.validation = ingest::validate_panel(panel);

    if (!panel.records.empty()) {
        const auto inputs = benchmarks::benchmark_inputs_from_panel(panel, opt.wacc, opt.roi);
        a.ratio_screen = benchmarks::screen_ratios(inputs);
        a.quant_screen = benchmarks::screen_quant(inputs);
    }

    if (prices != nullptr) {
        a.has_prices = true;
        try {
            a.moving_average = benchmarks::moving_average(*prices, opt.ma_window);
        } catch (const benchmarks::BenchmarkError& e) {
            a.moving_average_note = e.what();
        }
        try {
            a.rsi = benchmarks::rsi(*prices, opt.rsi_period);
        } catch (const benchmarks::BenchmarkError& e) {
            a.rsi_note = e.what();
        }
    }

    if (!a.validation.ok()) {
        a.derive_failure = "panel failed validation";
        return a;
    }
    try {
        a.derived = derive::compute_derived_series(panel);
    } catch (const derive::DeriveError& e) {
        a.derive_failure = e.what();
        return a;
    }
    const auto& d = *a.derived;

    a.battery = theorylab::test_hypotheses(d, opt.engine.stars);
    try {
        a.pecking = theorylab::pecking_order_count(d, opt.engine.pecking_strict);
    } catch (const theorylab::TheoryError& e) {
        a.pecking_failure = e.what();
    }
    try {
        a.peak = theorylab::peak_mvf_analysis(d);
    } catch (const theorylab::TheoryError& e) {
        a.peak_failure = e.what();
    }
    if (a.pecking && a.peak) {
        try {
            a.verdicts = theorylab::classify_firm(*a.battery, *a.pecking, *a.peak,
                                                  opt.engine.verdicts);
        } catch (const theorylab::TheoryError& e) {
            a.verdict_failure = e.what();
        }
    } else {
        a.verdict_failure = !a.pecking ? a.pecking_failure : a.peak_failure;
    }

    std::vector<std::string> names;
    std::vector<stats::Series> columns;
    for (auto name : derive::DerivedSeries::variable_names) {
        names.emplace_back(name);
        columns.push_back(d.column(name));
    }
    a.correlations = stats::spearman_matrix(names, columns);
    for (const auto& col : columns) {
        try {
            a.descriptives.emplace_back(stats::describe(col));
        } catch (const stats::StatsError&) {
            a.descriptives.emplace_back(std::nullopt);
        }
    }
    return a;
}

/// Analyzes every firm in the dataset (alphabetical by firm id). Price series
/// are matched to firms by id.
inline ReportBundle analyze_dataset(const ingest::Dataset& data, const AnalysisOptions& opt = {}) {
    ReportBundle bundle;
    bundle.engine = opt.engine;
    for (const auto& [id, panel] : data.panels) {
        const auto it = data.prices.find(id);
        bundle.firms.push_back(analyze_firm(panel, it == data.prices.end() ? nullptr : &it->second,
                                            opt));
    }
    return bundle;
}

namespace detail {

inline std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

inline std::string fixed6(const std::optional<double>& x) { return x ? fixed6(*x) : "n/a"; }

inline std::string compact(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

/// Full-precision cell for CSV output (shortest round-trip representation).
inline std::string full(double x) { return ingest::detail::format_number(x); }

inline std::string full(const std::optional<double>& x) { return x ? full(*x) : ""; }

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ",";
        out += csv_escape(cells[i]);
    }
    out += "\n";
    return out;
}

inline std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) {
        out += " ";
        out += c.empty() ? " " : c;
        out += " |";
    }
    out += "\n";
    return out;
}

inline std::string md_table(const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
    std::string out = md_row(header);
    std::vector<std::string> rule(header.size(), "---");
    out += md_row(rule);
    for (const auto& r : rows) out += md_row(r);
    return out;
}

inline std::string csv_table(const std::string& name, const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
    std::string out = "# table: " + name + "\n";
    out += csv_row(header);
    for (const auto& r : rows) out += csv_row(r);
    return out;
}

inline void require_tabular(Format f) {
    if (f == Format::Structured)
        throw UnsupportedFormat("structured output is produced by render_report only");
}

inline std::string star_legend(const theorylab::StarThresholds& th) {
    return std::string("*** p<") + compact(th.three) + ", ** p<" + compact(th.two) + ", * p<" +
           compact(th.one);
}

inline const theorylab::HypothesisOutcome* outcome_of(const FirmAnalysis& a,
                                                      theorylab::HypothesisId id) {
    return a.battery ? a.battery->find(id) : nullptr;
}

struct SummaryLine {
    theorylab::HypothesisId id = theorylab::HypothesisId::H11;
    std::string label;
};

struct SummaryBlock {
    std::string title;
    std::vector<SummaryLine> lines;
};

inline std::vector<SummaryBlock> regression_blocks() {
    using H = theorylab::HypothesisId;
    return {
        {"Dependent variable: MVF",
         {{H::H11, "RTD"}, {H::H12, "EBIT"}, {H::H13, "DER"}, {H::H14, "ETFR"}}},
        {"Dependent variable: REX", {{H::H15, "RTD"}}},
        {"Dependent variable: ROA",
         {{H::H16, "LTDA (rank)"}, {H::H18, "LTDA + LTDE (joint)"}}},
        {"Dependent variable: ROE", {{H::H17, "LTDA (rank)"}}},
    };
}

}  // namespace detail

/// Cross-firm adherence grid: one row per theory, one column per firm.
inline std::string render_verdict_summary(const ReportBundle& bundle, Format fmt) {
    detail::require_tabular(fmt);
    using theorylab::Theory;
    static constexpr Theory order[] = {Theory::NetIncome,    Theory::NetOperatingIncome,
                                       Theory::ModiglianiMiller, Theory::TradeOff,
                                       Theory::PeckingOrder, Theory::Agency};
    std::vector<std::string> header{"Theory"};
    for (const auto& a : bundle.firms) header.push_back(a.panel.firm_id);
    std::vector<std::vector<std::string>> rows;
    for (Theory t : order) {
        std::vector<std::string> row{theorylab::to_string(t)};
        for (const auto& a : bundle.firms) {
            std::string cell = "n/a";
            for (const auto& v : a.verdicts)
                if (v.theory == t) cell = theorylab::to_string(v.status);
            row.push_back(cell);
        }
        rows.push_back(std::move(row));
    }
    if (fmt == Format::Csv) return detail::csv_table("theory_adherence", header, rows);
    return "## Theory adherence\n\n" + detail::md_table(header, rows);
}

/// Market value peak location, leverage at and before the peak, and the
/// pecking-order year count. The prior-year columns show "---" when the peak
/// falls on the first observation.
inline std::string render_peak_table(const ReportBundle& bundle, Format fmt) {
    detail::require_tabular(fmt);
    const bool csv = fmt == Format::Csv;
    std::vector<std::string> header{"Firm",       "Peak year",         "Peak MVF",
                                    "DER at peak", "Prior year",       "DER at prior year",
                                    "Financing order"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : bundle.firms) {
        std::vector<std::string> row{a.panel.firm_id};
        if (a.peak) {
            const auto& p = *a.peak;
            row.push_back(std::to_string(p.peak_year));
            row.push_back(csv ? detail::full(p.peak_mvf) : detail::fixed6(p.peak_mvf));
            row.push_back(csv ? detail::full(p.contemporaneous_der)
                              : detail::fixed6(p.contemporaneous_der));
            row.push_back(p.lag_year ? std::to_string(*p.lag_year) : "---");
            if (p.lag_year)
                row.push_back(csv ? detail::full(p.lag_der) : detail::fixed6(p.lag_der));
            else
                row.push_back("---");
        } else {
            row.insert(row.end(), {"n/a", "n/a", "n/a", "n/a", "n/a"});
        }
        if (a.pecking)
            row.push_back("RRE > RTD > REQ in " + std::to_string(a.pecking->years_followed) +
                          " of " + std::to_string(a.pecking->n_usable) + " years");
        else
            row.push_back("n/a");
        rows.push_back(std::move(row));
    }
    if (csv) return detail::csv_table("peak_and_financing_order", header, rows);
    return "## Market value peaks and financing order\n\n" + detail::md_table(header, rows);
}

/// Hypothesis-test grid in journal layout: firms as columns; per regressor an
/// "R square" row and a "P-VALUE" row (stars appended to the p cell).
inline std::string render_regression_summary(const ReportBundle& bundle, Format fmt) {
    detail::require_tabular(fmt);
    std::string out;
    if (fmt == Format::Csv) {
        std::vector<std::string> header{"firm",        "hypothesis", "dependent", "regressors",
                                        "r_squared",   "p_value",    "stars",     "sign",
                                        "n_used"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            if (!a.battery) continue;
            for (const auto& o : a.battery->outcomes) {
                std::string regs;
                for (std::size_t i = 0; i < o.regressors.size(); ++i)
                    regs += (i ? "+" : "") + o.regressors[i];
                rows.push_back({a.panel.firm_id, theorylab::to_string(o.id), o.dependent, regs,
                                detail::full(o.r_squared), detail::full(o.p_value), o.stars,
                                std::to_string(o.coefficient_sign), std::to_string(o.n_used)});
            }
            for (const auto& [id, why] : a.battery->failures)
                rows.push_back({a.panel.firm_id, theorylab::to_string(id), "", "", "", "", "", "",
                                why});
        }
        return detail::csv_table("hypothesis_tests", header, rows);
    }

    out += "## Regression and rank correlation summary\n\n";
    std::vector<std::string> header{"Statistic"};
    for (const auto& a : bundle.firms) header.push_back(a.panel.firm_id);
    for (const auto& block : detail::regression_blocks()) {
        out += "### " + block.title + "\n\n";
        std::vector<std::vector<std::string>> rows;
        for (const auto& line : block.lines) {
            std::vector<std::string> r2row{line.label + " R square"};
            std::vector<std::string> prow{line.label + " P-VALUE"};
            for (const auto& a : bundle.firms) {
                const auto* o = detail::outcome_of(a, line.id);
                r2row.push_back(o ? detail::fixed6(o->r_squared) : "n/a");
                prow.push_back(o ? detail::fixed6(o->p_value) + o->stars : "n/a");
            }
            rows.push_back(std::move(r2row));
            rows.push_back(std::move(prow));
        }
        out += detail::md_table(header, rows);
        out += "\n";
    }
    out += detail::star_legend(bundle.engine.stars) + "\n";
    return out;
}

/// Four-regressor pooled fit of MVF on RTD, EBIT, DER, and ETFR per firm,
/// with classical and HC1 standard errors side by side.
inline std::string render_pooled_fits(const ReportBundle& bundle, Format fmt) {
    detail::require_tabular(fmt);
    static const char* term_names[] = {"Intercept", "RTD", "EBIT", "DER", "ETFR"};
    if (fmt == Format::Csv) {
        std::vector<std::string> header{"firm", "term",        "estimate", "se_classical",
                                        "se_hc1", "t",         "p",        "r_squared",
                                        "f_stat", "f_p_value", "n_used"};
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            if (!a.battery || !a.battery->pooled) continue;
            const auto& f = *a.battery->pooled;
            for (std::size_t j = 0; j < f.coefficients.size(); ++j)
                rows.push_back({a.panel.firm_id, term_names[j], detail::full(f.coefficients[j]),
                                detail::full(f.classical_se[j]), detail::full(f.robust_se[j]),
                                detail::full(f.t_stats[j]), detail::full(f.p_values[j]),
                                detail::full(f.r_squared), detail::full(f.f_stat),
                                detail::full(f.f_p_value), std::to_string(f.n_used)});
        }
        return detail::csv_table("pooled_fits", header, rows);
    }

    std::string out = "## Pooled market value regressions\n\n";
    out += "MVF on RTD, EBIT, DER, and ETFR jointly; HC1 standard errors in parentheses.\n\n";
    for (const auto& a : bundle.firms) {
        out += "### " + a.panel.firm_id + "\n\n";
        if (!a.battery || !a.battery->pooled) {
            out += "Not estimated: too few complete observations.\n\n";
            continue;
        }
        const auto& f = *a.battery->pooled;
        std::vector<std::vector<std::string>> rows;
        for (std::size_t j = 0; j < f.coefficients.size(); ++j) {
            rows.push_back({term_names[j],
                            detail::fixed6(f.coefficients[j]) + " (" +
                                detail::fixed6(f.robust_se[j]) + ")",
                            detail::fixed6(f.classical_se[j]), detail::fixed6(f.t_stats[j]),
                            detail::fixed6(f.p_values[j])});
        }
        out += detail::md_table({"Term", "Estimate (HC1 SE)", "Classical SE", "t", "p"}, rows);
        out += "\nR square " + detail::fixed6(f.r_squared) + ", F " + detail::fixed6(f.f_stat) +
               " (p " + detail::fixed6(f.f_p_value) + "), n " + std::to_string(f.n_used) + ".\n\n";
    }
    return out;
}

namespace detail {

inline std::string render_validation_md(const FirmAnalysis& a) {
    std::string out = "### Data quality\n\n";
    if (a.validation.errors.empty() && a.validation.warnings.empty())
        return out + "No validation issues.\n\n";
    for (const auto& e : a.validation.errors)
        out += "- error " + e.code + (e.year ? " (" + std::to_string(e.year) + ")" : "") + ": " +
               e.message + "\n";
    for (const auto& w : a.validation.warnings)
        out += "- warning " + w.code + (w.year ? " (" + std::to_string(w.year) + ")" : "") +
               ": " + w.message + "\n";
    return out + "\n";
}

inline std::string render_descriptives_md(const FirmAnalysis& a) {
    if (!a.derived) return "";
    std::string out = "### Descriptive statistics\n\n";
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < derive::DerivedSeries::variable_names.size(); ++i) {
        std::vector<std::string> row{std::string(derive::DerivedSeries::variable_names[i])};
        const auto& st = a.descriptives[i];
        if (st) {
            row.push_back(fixed6(st->mean));
            row.push_back(st->standard_error ? fixed6(*st->standard_error) : "n/a");
            row.push_back(fixed6(st->minimum));
            row.push_back(fixed6(st->maximum));
            row.push_back(std::to_string(st->n));
        } else {
            row.insert(row.end(), {"n/a", "n/a", "n/a", "n/a", "0"});
        }
        rows.push_back(std::move(row));
    }
    return out + md_table({"Variable", "Mean", "Std. error", "Min", "Max", "n"}, rows) + "\n";
}

inline std::string render_derived_md(const FirmAnalysis& a) {
    if (!a.derived) return "";
    const auto& d = *a.derived;
    std::string out = "### Derived series\n\n";
    std::vector<std::string> header{"Year"};
    for (auto name : derive::DerivedSeries::variable_names) header.emplace_back(name);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::string> row{std::to_string(d.years[i])};
        for (auto name : derive::DerivedSeries::variable_names) {
            const auto& cell = d.column(name)[i];
            row.push_back(cell ? fixed6(*cell) : "n/a");
        }
        rows.push_back(std::move(row));
    }
    return out + md_table(header, rows) + "\n";
}

inline std::string render_correlations_md(const FirmAnalysis& a) {
    if (!a.correlations) return "";
    const auto& m = *a.correlations;
    std::string out = "### Rank correlations (lower triangle)\n\n";
    std::vector<std::string> header{" "};
    for (const auto& n : m.names) header.push_back(n);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < m.names.size(); ++i) {
        std::vector<std::string> row{m.names[i]};
        for (std::size_t j = 0; j < m.names.size(); ++j) {
            if (j > i) row.push_back("");
            else if (j == i) row.push_back("1");
            else row.push_back(m.cells[i][j] ? fixed6(m.cells[i][j]->rho) : "n/a");
        }
        rows.push_back(std::move(row));
    }
    return out + md_table(header, rows) + "\n";
}

inline std::string render_screen_md(const FirmAnalysis& a) {
    std::string out = "### Benchmark screening\n\n";
    auto table = [&](const std::vector<benchmarks::ScreenRow>& rows_in) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : rows_in)
            rows.push_back({r.name, r.value ? fixed6(*r.value) : "n/a", r.benchmark,
                            benchmarks::to_string(r.status)});
        return md_table({"Metric", "Value", "Benchmark", "Assessment"}, rows);
    };
    if (!a.ratio_screen.empty()) {
        out += "Financial ratios:\n\n" + table(a.ratio_screen) + "\n";
    }
    if (!a.quant_screen.empty()) {
        out += "Quantitative screens:\n\n" + table(a.quant_screen) + "\n";
    }
    out += "Qualitative areas:\n\n";
    std::vector<std::vector<std::string>> esg;
    for (const auto& name : benchmarks::esg_rows())
        esg.push_back({name, "manual assessment required"});
    out += md_table({"Area", "Assessment"}, esg) + "\n";
    return out;
}

inline std::string render_indicators_md(const FirmAnalysis& a) {
    std::string out = "### Technical indicators\n\n";
    if (!a.has_prices) return out + "No price series supplied.\n\n";
    if (!a.moving_average.empty()) {
        const auto& last = a.moving_average.back();
        out += "- Moving average: " + fixed6(last.second) + " as of " + last.first + " (" +
               std::to_string(a.moving_average.size()) + " window positions)\n";
    } else {
        out += "- Moving average not computed: " + a.moving_average_note + "\n";
    }
    if (a.rsi && !a.rsi->points.empty()) {
        const auto& last = a.rsi->points.back();
        out += "- RSI: " + fixed6(last.value) + " as of " + last.date + " (" +
               benchmarks::to_string(a.rsi->regime) + ")\n";
    } else {
        out += "- RSI not computed: " + a.rsi_note + "\n";
    }
    return out + "\n";
}

inline std::string render_verdict_detail_md(const FirmAnalysis& a) {
    std::string out = "### Theory verdicts\n\n";
    if (a.verdicts.empty()) {
        return out + "Not classified: " +
               (a.verdict_failure.empty() ? std::string("analysis unavailable")
                                          : a.verdict_failure) +
               "\n\n";
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& v : a.verdicts) {
        std::string evidence;
        for (std::size_t i = 0; i < v.evidence.size(); ++i)
            evidence += (i ? "; " : "") + v.evidence[i];
        rows.push_back({theorylab::to_string(v.theory), theorylab::to_string(v.status), evidence});
    }
    out += md_table({"Theory", "Adherence", "Evidence"}, rows);
    if (a.pecking && !a.pecking->followed_years.empty()) {
        out += "\nYears matching RRE > RTD > REQ: ";
        for (std::size_t i = 0; i < a.pecking->followed_years.size(); ++i)
            out += (i ? ", " : "") + std::to_string(a.pecking->followed_years[i]);
        out += "\n";
    }
    return out + "\n";
}

}  // namespace detail

/// Benchmark screening tables for one firm (markdown).
inline std::string render_screening(const FirmAnalysis& a) { return detail::render_screen_md(a); }

/// Descriptive statistics table for one firm (markdown).
inline std::string render_descriptives(const FirmAnalysis& a) {
    return detail::render_descriptives_md(a);
}

/// Full per-firm detail section (markdown only; the CSV report carries the
/// same content in its tables).
inline std::string render_firm_section(const FirmAnalysis& a) {
    std::string out = "## Firm " + a.panel.firm_id + "\n\n";
    out += detail::render_validation_md(a);
    if (!a.derive_failure.empty())
        out += "Derived analysis unavailable: " + a.derive_failure + ".\n\n";
    out += detail::render_descriptives_md(a);
    out += detail::render_derived_md(a);
    out += detail::render_correlations_md(a);
    out += detail::render_screen_md(a);
    out += detail::render_indicators_md(a);
    out += detail::render_verdict_detail_md(a);
    return out;
}

/// Fixed interpretation notes rendered at the end of every report.
inline std::string render_methods_notes(const ReportBundle& bundle) {
    std::string out = "## Methods notes\n\n";
    out += "- ETFR is the expanding-window trend forecast of next year's revenue minus the "
           "current year's revenue; it needs at least two prior observations, so the first two "
           "years are blank.\n";
    out += "- LTDR is long-term debt over the sum of long-term debt and equity; LTDE and LTDA "
           "divide long-term debt by equity and total assets respectively.\n";
    out += "- Hypothesis decisions use classical standard errors; HC1 robust errors are reported "
           "alongside every pooled fit for comparison.\n";
    out += "- Rank correlations use average ranks for ties; their p-values come from the "
           "t approximation with n-2 degrees of freedom.\n";
    out += "- The financing-order count compares year-over-year growth rates of retained "
           "earnings, total debt, and equity"
           + std::string(bundle.engine.pecking_strict ? " with strict inequalities.\n"
                                                      : " allowing ties.\n");
    out += "- Verdict cutoffs: firm evidence at p < " + detail::compact(bundle.engine.verdicts.followed)
           + ", partial evidence at p < " + detail::compact(bundle.engine.verdicts.partial) + ".\n";
    out += "- Significance stars: " + detail::star_legend(bundle.engine.stars) + ".\n";
    return out;
}

namespace detail {

inline std::string render_csv_report(const ReportBundle& bundle) {
    std::string out;
    // derived series, long format
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            if (!a.derived) continue;
            const auto& d = *a.derived;
            for (auto name : derive::DerivedSeries::variable_names) {
                const auto& col = d.column(name);
                for (std::size_t i = 0; i < d.size(); ++i)
                    rows.push_back({a.panel.firm_id, std::to_string(d.years[i]), std::string(name),
                                    full(col[i])});
            }
        }
        out += csv_table("derived_series", {"firm", "year", "variable", "value"}, rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            for (const auto& e : a.validation.errors)
                rows.push_back({a.panel.firm_id, "error", e.code,
                                e.year ? std::to_string(e.year) : "", e.message});
            for (const auto& w : a.validation.warnings)
                rows.push_back({a.panel.firm_id, "warning", w.code,
                                w.year ? std::to_string(w.year) : "", w.message});
        }
        out += csv_table("validation", {"firm", "severity", "code", "year", "message"}, rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            for (std::size_t i = 0; i < a.descriptives.size(); ++i) {
                const auto& st = a.descriptives[i];
                if (!st) continue;
                rows.push_back({a.panel.firm_id,
                                std::string(derive::DerivedSeries::variable_names[i]),
                                full(st->mean),
                                st->standard_error ? full(*st->standard_error) : "",
                                full(st->minimum), full(st->maximum), std::to_string(st->n)});
            }
        }
        out += csv_table("descriptives",
                         {"firm", "variable", "mean", "standard_error", "min", "max", "n"}, rows);
    }
    out += render_regression_summary(bundle, Format::Csv);
    out += render_pooled_fits(bundle, Format::Csv);
    out += render_peak_table(bundle, Format::Csv);
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            if (!a.correlations) continue;
            const auto& m = *a.correlations;
            for (std::size_t i = 0; i < m.names.size(); ++i)
                for (std::size_t j = 0; j < i; ++j) {
                    const auto& c = m.cells[i][j];
                    rows.push_back({a.panel.firm_id, m.names[i], m.names[j],
                                    c ? full(c->rho) : "", c ? full(c->p_value) : "",
                                    c ? std::to_string(c->n) : ""});
                }
        }
        out += csv_table("rank_correlations", {"firm", "var_a", "var_b", "rho", "p_value", "n"},
                         rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            for (const auto& r : a.ratio_screen)
                rows.push_back({a.panel.firm_id, "ratio", r.name, full(r.value), r.benchmark,
                                benchmarks::to_string(r.status)});
            for (const auto& r : a.quant_screen)
                rows.push_back({a.panel.firm_id, "quant", r.name, full(r.value), r.benchmark,
                                benchmarks::to_string(r.status)});
            for (const auto& name : benchmarks::esg_rows())
                rows.push_back({a.panel.firm_id, "qualitative", name, "", "",
                                "manual assessment required"});
        }
        out += csv_table("screening", {"firm", "group", "metric", "value", "benchmark", "status"},
                         rows);
    }
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            if (!a.has_prices) continue;
            if (!a.moving_average.empty()) {
                const auto& last = a.moving_average.back();
                rows.push_back({a.panel.firm_id, "moving_average", last.first, full(last.second),
                                ""});
            } else {
                rows.push_back({a.panel.firm_id, "moving_average", "", "", a.moving_average_note});
            }
            if (a.rsi && !a.rsi->points.empty()) {
                const auto& last = a.rsi->points.back();
                rows.push_back({a.panel.firm_id, "rsi", last.date, full(last.value),
                                benchmarks::to_string(a.rsi->regime)});
            } else {
                rows.push_back({a.panel.firm_id, "rsi", "", "", a.rsi_note});
            }
        }
        out += csv_table("technical_indicators", {"firm", "indicator", "date", "value", "note"},
                         rows);
    }
    out += render_verdict_summary(bundle, Format::Csv);
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& a : bundle.firms) {
            for (const auto& v : a.verdicts) {
                std::string evidence;
                for (std::size_t i = 0; i < v.evidence.size(); ++i)
                    evidence += (i ? "; " : "") + v.evidence[i];
                rows.push_back({a.panel.firm_id, theorylab::to_string(v.theory),
                                theorylab::to_string(v.status), evidence});
            }
            if (a.verdicts.empty() && !a.verdict_failure.empty())
                rows.push_back({a.panel.firm_id, "", "not classified", a.verdict_failure});
        }
        out += csv_table("verdict_evidence", {"firm", "theory", "adherence", "evidence"}, rows);
    }
    return out;
}

inline nlohmann::ordered_json json_opt(const std::optional<double>& x) {
    if (!x) return nullptr;
    return *x;
}

inline nlohmann::ordered_json render_json_report(const ReportBundle& bundle) {
    using json = nlohmann::ordered_json;
    json root;
    root["schema"] = "capstruct-report/1";
    root["settings"] = {{"stars", {{"strong", bundle.engine.stars.three},
                                   {"medium", bundle.engine.stars.two},
                                   {"weak", bundle.engine.stars.one}}},
                        {"verdict", {{"followed", bundle.engine.verdicts.followed},
                                     {"partial", bundle.engine.verdicts.partial}}},
                        {"pecking_strict", bundle.engine.pecking_strict}};
    root["firms"] = json::array();
    for (const auto& a : bundle.firms) {
        json f;
        f["firm_id"] = a.panel.firm_id;
        f["years"] = json::array();
        for (const auto& r : a.panel.records) f["years"].push_back(r.fiscal_year);
        f["validation"] = {{"errors", json::array()}, {"warnings", json::array()}};
        for (const auto& e : a.validation.errors)
            f["validation"]["errors"].push_back(
                {{"code", e.code},
                 {"year", e.year ? json(e.year) : json(nullptr)},
                 {"message", e.message}});
        for (const auto& w : a.validation.warnings)
            f["validation"]["warnings"].push_back(
                {{"code", w.code},
                 {"year", w.year ? json(w.year) : json(nullptr)},
                 {"message", w.message}});
        if (a.derived) {
            json derived;
            for (auto name : derive::DerivedSeries::variable_names) {
                json col = json::array();
                for (const auto& cell : a.derived->column(name)) col.push_back(json_opt(cell));
                derived[std::string(name)] = std::move(col);
            }
            f["derived"] = std::move(derived);
        } else {
            f["derived"] = nullptr;
            f["derive_failure"] = a.derive_failure;
        }
        if (a.battery) {
            json hyp = json::array();
            for (const auto& o : a.battery->outcomes)
                hyp.push_back({{"id", theorylab::to_string(o.id)},
                               {"dependent", o.dependent},
                               {"regressors", o.regressors},
                               {"r_squared", o.r_squared},
                               {"p_value", o.p_value},
                               {"stars", o.stars},
                               {"coefficient_sign", o.coefficient_sign},
                               {"n_used", o.n_used}});
            f["hypotheses"] = std::move(hyp);
            json fails = json::object();
            for (const auto& [id, why] : a.battery->failures)
                fails[theorylab::to_string(id)] = why;
            f["hypothesis_failures"] = std::move(fails);
            if (a.battery->pooled) {
                const auto& p = *a.battery->pooled;
                f["pooled_fit"] = {{"terms", {"Intercept", "RTD", "EBIT", "DER", "ETFR"}},
                                   {"coefficients", p.coefficients},
                                   {"classical_se", p.classical_se},
                                   {"robust_se", p.robust_se},
                                   {"robust_flavor", std::string(p.robust_flavor)},
                                   {"t_stats", p.t_stats},
                                   {"p_values", p.p_values},
                                   {"r_squared", p.r_squared},
                                   {"f_stat", p.f_stat},
                                   {"f_p_value", p.f_p_value},
                                   {"n_used", p.n_used}};
            } else {
                f["pooled_fit"] = nullptr;
            }
        }
        if (a.pecking) {
            f["pecking_order"] = {{"years_followed", a.pecking->years_followed},
                                  {"n_usable", a.pecking->n_usable},
                                  {"followed_years", a.pecking->followed_years}};
        } else if (!a.pecking_failure.empty()) {
            f["pecking_order"] = nullptr;
            f["pecking_failure"] = a.pecking_failure;
        }
        if (a.peak) {
            f["peak_mvf"] = {{"peak_year", a.peak->peak_year},
                             {"peak_mvf", a.peak->peak_mvf},
                             {"der_at_peak", json_opt(a.peak->contemporaneous_der)},
                             {"prior_year",
                              a.peak->lag_year ? json(*a.peak->lag_year) : json(nullptr)},
                             {"der_at_prior_year", json_opt(a.peak->lag_der)},
                             {"interior", a.peak->interior}};
        } else if (!a.peak_failure.empty()) {
            f["peak_mvf"] = nullptr;
            f["peak_failure"] = a.peak_failure;
        }
        json verdicts = json::array();
        for (const auto& v : a.verdicts)
            verdicts.push_back({{"theory", theorylab::to_string(v.theory)},
                                {"adherence", theorylab::to_string(v.status)},
                                {"evidence", v.evidence}});
        f["verdicts"] = std::move(verdicts);
        if (!a.verdict_failure.empty()) f["verdict_failure"] = a.verdict_failure;
        auto screen_json = [](const std::vector<benchmarks::ScreenRow>& rows) {
            json out = json::array();
            for (const auto& r : rows)
                out.push_back({{"metric", r.name},
                               {"value", json_opt(r.value)},
                               {"benchmark", r.benchmark},
                               {"status", benchmarks::to_string(r.status)}});
            return out;
        };
        f["screening"] = {{"ratios", screen_json(a.ratio_screen)},
                          {"quantitative", screen_json(a.quant_screen)},
                          {"qualitative", json::array()}};
        for (const auto& name : benchmarks::esg_rows())
            f["screening"]["qualitative"].push_back(
                {{"area", name}, {"status", "manual assessment required"}});
        if (a.has_prices) {
            json ind;
            if (!a.moving_average.empty()) {
                const auto& last = a.moving_average.back();
                ind["moving_average"] = {{"date", last.first},
                                         {"value", last.second},
                                         {"points", a.moving_average.size()}};
            } else {
                ind["moving_average"] = nullptr;
                ind["moving_average_note"] = a.moving_average_note;
            }
            if (a.rsi && !a.rsi->points.empty()) {
                const auto& last = a.rsi->points.back();
                ind["rsi"] = {{"date", last.date},
                              {"value", last.value},
                              {"regime", benchmarks::to_string(a.rsi->regime)}};
            } else {
                ind["rsi"] = nullptr;
                ind["rsi_note"] = a.rsi_note;
            }
            f["technical_indicators"] = std::move(ind);
        }
        if (a.correlations) {
            json m;
            m["names"] = a.correlations->names;
            m["rho"] = json::array();
            m["p_value"] = json::array();
            m["n"] = json::array();
            for (std::size_t i = 0; i < a.correlations->names.size(); ++i) {
                json rrow = json::array(), prow = json::array(), nrow = json::array();
                for (std::size_t j = 0; j < a.correlations->names.size(); ++j) {
                    const auto& c = a.correlations->cells[i][j];
                    rrow.push_back(c ? json(c->rho) : json(nullptr));
                    prow.push_back(c ? json(c->p_value) : json(nullptr));
                    nrow.push_back(c ? json(c->n) : json(nullptr));
                }
                m["rho"].push_back(std::move(rrow));
                m["p_value"].push_back(std::move(prow));
                m["n"].push_back(std::move(nrow));
            }
            f["rank_correlations"] = std::move(m);
        }
        json desc = json::object();
        for (std::size_t i = 0; i < a.descriptives.size(); ++i) {
            const auto& st = a.descriptives[i];
            if (!st) continue;
            desc[std::string(derive::DerivedSeries::variable_names[i])] = {
                {"mean", st->mean},
                {"standard_error", st->standard_error ? json(*st->standard_error) : json(nullptr)},
                {"min", st->minimum},
                {"max", st->maximum},
                {"n", st->n}};
        }
        f["descriptives"] = std::move(desc);
        root["firms"].push_back(std::move(f));
    }
    return root;
}

}  // namespace detail

/// Renders the whole bundle in the requested format. Markdown and CSV are
/// assembled from the section renderers; structured output is a single JSON
/// document.
inline std::string render_report(const ReportBundle& bundle, Format fmt) {
    if (fmt == Format::Structured) return detail::render_json_report(bundle).dump(2) + "\n";
    if (fmt == Format::Csv) return detail::render_csv_report(bundle);

    std::string out = "# Capital structure diagnostics\n\n";
    out += "Firms analyzed: " + std::to_string(bundle.firms.size()) + "\n\n";
    out += render_verdict_summary(bundle, fmt) + "\n";
    out += render_peak_table(bundle, fmt) + "\n";
    out += render_regression_summary(bundle, fmt) + "\n";
    out += render_pooled_fits(bundle, fmt);
    for (const auto& a : bundle.firms) out += render_firm_section(a);
    out += render_methods_notes(bundle);
    return out;
}

}  // namespace capstruct::report
