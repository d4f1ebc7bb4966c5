// Derived firm-year variables: leverage ratios, profitability ratios,
// year-over-year rates of change, and the expanding-window revenue trend
// forecast increment (ETFR).
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "capstruct/ingest.hpp"
#include "capstruct/stats.hpp"

namespace capstruct::derive {

class DeriveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SeriesTooShort : public DeriveError {
public:
    SeriesTooShort(std::size_t n, std::size_t needed)
        : DeriveError("series needs at least " + std::to_string(needed) +
                      " observations, found " + std::to_string(n)) {}
};

class PanelTooShort : public DeriveError {
public:
    PanelTooShort(std::size_t n)
        : DeriveError("panel needs at least 4 years, found " + std::to_string(n)) {}
};

/// Per-year derived variables, aligned with years. Missing cells (first-year
/// rates, zero denominators, short forecast windows) are nullopt.
///
/// Level variables: MVF (market value) and EBIT are carried through in
/// currency units. Ratios: DER = total_debt/equity, LTDE = long_term_debt/
/// equity, LTDA = long_term_debt/total_assets, LTDR = long_term_debt/
/// (long_term_debt + equity), ROA = net_income/total_assets, ROE =
/// net_income/equity. Rates (RTD, REX, RRE, REQ, REPS) are year-over-year
/// changes of long-term debt, total expenses, retained earnings, equity, and
/// EPS. ETFR is the one-step-ahead revenue trend forecast minus current
/// revenue, in currency units.
///
/// Note on LTDR: the three long-term-debt ratios are deliberately exposed as
/// separate columns (scaled by total capital, equity, and assets). Source
/// tables for this family of studies often collapse or mangle these labels;
/// keeping all three distinct avoids that ambiguity.
struct DerivedSeries {
    std::string firm_id;
    std::vector<int> years;
    stats::Series mvf, rtd, ebit, der, etfr, rex, rre, req, ltdr, ltde, ltda, roa, roe, reps;

    static constexpr std::array<std::string_view, 14> variable_names = {
        "MVF", "RTD", "EBIT", "DER", "ETFR", "REX", "RRE",
        "REQ", "LTDR", "LTDE", "LTDA", "ROA", "ROE", "REPS",
    };

    std::size_t size() const noexcept { return years.size(); }

    const stats::Series& column(std::string_view name) const {
        if (name == "MVF") return mvf;
        if (name == "RTD") return rtd;
        if (name == "EBIT") return ebit;
        if (name == "DER") return der;
        if (name == "ETFR") return etfr;
        if (name == "REX") return rex;
        if (name == "RRE") return rre;
        if (name == "REQ") return req;
        if (name == "LTDR") return ltdr;
        if (name == "LTDE") return ltde;
        if (name == "LTDA") return ltda;
        if (name == "ROA") return roa;
        if (name == "ROE") return roe;
        if (name == "REPS") return reps;
        throw DeriveError("unknown derived variable: " + std::string(name));
    }
};

/// Year-over-year rate of change r_t = (x_t - x_{t-1}) / |x_{t-1}|. The first
/// entry is always missing; a zero base makes that year's rate missing rather
/// than an error.
inline stats::Series rate_of_change(const std::vector<double>& series) {
    if (series.size() < 2) throw SeriesTooShort(series.size(), 2);
    stats::Series out(series.size());
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double prev = series[i - 1];
        if (prev != 0.0) out[i] = (series[i] - prev) / std::fabs(prev);
    }
    return out;
}

/// One-step-ahead forecast from an OLS linear trend fitted to the whole
/// window (time indices 0..n-1, prediction at n). Needs at least 3 points.
inline double forecast_next_revenue(const std::vector<double>& revenues) {
    const std::size_t n = revenues.size();
    if (n < 3) throw SeriesTooShort(n, 3);
    const double nd = static_cast<double>(n);
    const double tbar = (nd - 1.0) / 2.0;
    double xbar = 0.0;
    for (double v : revenues) xbar += v;
    xbar /= nd;
    double stx = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = static_cast<double>(i) - tbar;
        stx += dt * (revenues[i] - xbar);
        stt += dt * dt;
    }
    const double slope = stx / stt;
    const double intercept = xbar - slope * tbar;
    return intercept + slope * nd;
}

/// Builds the full derived table for one firm. Requires at least 4 years.
/// Zero equity makes DER, LTDE, and ROE missing for that year instead of
/// failing the whole panel.
inline DerivedSeries compute_derived_series(const ingest::FirmPanel& panel) {
    const std::size_t n = panel.records.size();
    if (n < 4) throw PanelTooShort(n);

    DerivedSeries d;
    d.firm_id = panel.firm_id;
    d.years.reserve(n);

    std::vector<double> ltd(n), expenses(n), retained(n), equity(n), eps(n), revenue(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = panel.records[i];
        d.years.push_back(r.fiscal_year);
        ltd[i] = r.long_term_debt;
        expenses[i] = r.total_expenses;
        retained[i] = r.retained_earnings;
        equity[i] = r.equity;
        eps[i] = r.eps;
        revenue[i] = r.revenue;
    }

    d.mvf.resize(n);
    d.ebit.resize(n);
    d.der.resize(n);
    d.ltde.resize(n);
    d.ltda.resize(n);
    d.ltdr.resize(n);
    d.roa.resize(n);
    d.roe.resize(n);
    d.etfr.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = panel.records[i];
        d.mvf[i] = r.market_value;
        d.ebit[i] = r.ebit;
        d.ltda[i] = r.long_term_debt / r.total_assets;
        if (r.equity != 0.0) {
            d.der[i] = r.total_debt / r.equity;
            d.ltde[i] = r.long_term_debt / r.equity;
            d.roe[i] = r.net_income / r.equity;
        }
        const double capital = r.long_term_debt + r.equity;
        if (capital != 0.0) d.ltdr[i] = r.long_term_debt / capital;
        d.roa[i] = r.net_income / r.total_assets;
        if (i >= 2) {
            std::vector<double> window(revenue.begin(), revenue.begin() + static_cast<long>(i) + 1);
            d.etfr[i] = forecast_next_revenue(window) - revenue[i];
        }
    }

    d.rtd = rate_of_change(ltd);
    d.rex = rate_of_change(expenses);
    d.rre = rate_of_change(retained);
    d.req = rate_of_change(equity);
    d.reps = rate_of_change(eps);
    return d;
}

}  // namespace capstruct::derive
