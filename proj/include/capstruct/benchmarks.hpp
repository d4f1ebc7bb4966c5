// Benchmark screening against fixed quantitative thresholds plus the two
// price-series indicators (trailing moving average, Wilder RSI).
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "capstruct/ingest.hpp"

namespace capstruct::benchmarks {

class BenchmarkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class WindowTooLarge : public BenchmarkError {
public:
    WindowTooLarge(std::size_t window, std::size_t n)
        : BenchmarkError("window " + std::to_string(window) + " exceeds series length " +
                         std::to_string(n)) {}
};

class SeriesTooShort : public BenchmarkError {
public:
    SeriesTooShort(std::size_t n, std::size_t needed)
        : BenchmarkError("series needs at least " + std::to_string(needed) +
                         " points, found " + std::to_string(n)) {}
};

/// Screening inputs; any field may be missing. Rates (revenue_growth,
/// net_profit_margin, roe, dividend_yield) are fractions, so the 10% bar is
/// 0.10. wacc and roi are percentages compared only against each other.
struct BenchmarkInputs {
    std::optional<double> der;
    std::optional<double> debt_to_assets;
    std::optional<double> interest_coverage;
    std::optional<double> dscr;
    std::optional<double> wacc;
    std::optional<double> roi;
    std::optional<double> revenue_growth;
    std::optional<double> net_profit_margin;
    std::optional<double> roe;
    std::optional<double> pe;
    std::optional<double> ps;
    std::optional<double> dividend_yield;
    std::optional<double> peg;
};

enum class ScreenStatus { Pass, Fail, NotEvaluable };

inline const char* to_string(ScreenStatus s) {
    switch (s) {
        case ScreenStatus::Pass: return "Pass";
        case ScreenStatus::Fail: return "Fail";
        case ScreenStatus::NotEvaluable: return "Not evaluable";
    }
    return "?";
}

struct ScreenRow {
    std::string name;
    std::optional<double> value;
    std::string benchmark;  // human-readable threshold text
    ScreenStatus status = ScreenStatus::NotEvaluable;
};

namespace detail {

// All comparisons are strict: a value sitting exactly on its threshold fails.
inline ScreenRow below(std::string name, std::optional<double> v, double threshold,
                       std::string text) {
    ScreenRow row{std::move(name), v, std::move(text), ScreenStatus::NotEvaluable};
    if (v) row.status = *v < threshold ? ScreenStatus::Pass : ScreenStatus::Fail;
    return row;
}

inline ScreenRow above(std::string name, std::optional<double> v, double threshold,
                       std::string text) {
    ScreenRow row{std::move(name), v, std::move(text), ScreenStatus::NotEvaluable};
    if (v) row.status = *v > threshold ? ScreenStatus::Pass : ScreenStatus::Fail;
    return row;
}

}  // namespace detail

/// Fundamental and capital-structure screening rows (8 of the 12 thresholds).
inline std::vector<ScreenRow> screen_ratios(const BenchmarkInputs& in) {
    std::vector<ScreenRow> rows;
    rows.push_back(detail::above("Revenue growth", in.revenue_growth, 0.10,
                                 "Above 10% annually is considered good"));
    rows.push_back(detail::above("Net profit margin", in.net_profit_margin, 0.15,
                                 "Above 15% is considered good"));
    rows.push_back(detail::above("Return on equity", in.roe, 0.15,
                                 "Above 15% is considered good"));
    rows.push_back(detail::below("Debt to equity ratio", in.der, 1.5,
                                 "Below 1.5 is considered good"));
    rows.push_back(detail::below("Debt to assets ratio", in.debt_to_assets, 0.6,
                                 "Below 0.6 is considered good"));
    rows.push_back(detail::above("Interest coverage ratio", in.interest_coverage, 1.5,
                                 "Above 1.5 is considered good"));
    rows.push_back(detail::above("Debt service coverage ratio", in.dscr, 1.0,
                                 "Above 1 is considered good"));
    {
        ScreenRow row{"Weighted average cost of capital", in.wacc,
                      "Below ROI is considered good", ScreenStatus::NotEvaluable};
        if (in.wacc && in.roi)
            row.status = *in.wacc < *in.roi ? ScreenStatus::Pass : ScreenStatus::Fail;
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Quantitative market-multiple screening rows (the remaining 4 thresholds).
inline std::vector<ScreenRow> screen_quant(const BenchmarkInputs& in) {
    std::vector<ScreenRow> rows;
    rows.push_back(detail::below("Price to earnings ratio", in.pe, 20.0,
                                 "Below 20 is considered good"));
    rows.push_back(detail::below("Price to sales ratio", in.ps, 2.0,
                                 "Below 2 is considered good"));
    rows.push_back(detail::above("Dividend yield", in.dividend_yield, 0.02,
                                 "Above 2% is considered good"));
    rows.push_back(detail::below("PEG ratio", in.peg, 1.0,
                                 "Below 1 is considered good"));
    return rows;
}

/// ESG criteria are screened qualitatively, never numerically.
inline std::vector<std::string> esg_rows() {
    return {"Carbon footprint", "Labour practices", "Board diversity"};
}

/// Trailing simple moving average; output i covers input [i, i + window) and
/// is dated by the window end, so the result has n - window + 1 points.
inline std::vector<std::pair<std::string, double>> moving_average(const ingest::PriceSeries& s,
                                                                  std::size_t window) {
    if (window == 0) throw BenchmarkError("window must be positive");
    const std::size_t n = s.points.size();
    if (window > n) throw WindowTooLarge(window, n);

    std::vector<std::pair<std::string, double>> out;
    out.reserve(n - window + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += s.points[i].close;
        if (i + 1 >= window) {
            out.emplace_back(s.points[i].date, acc / static_cast<double>(window));
            acc -= s.points[i + 1 - window].close;
        }
    }
    return out;
}

enum class Regime { Overbought, Oversold, Neutral };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Overbought: return "Overbought";
        case Regime::Oversold: return "Oversold";
        case Regime::Neutral: return "Neutral";
    }
    return "?";
}

/// Overbought above 70, oversold below 30 (strict).
inline Regime regime_of(double rsi_value) {
    if (rsi_value > 70.0) return Regime::Overbought;
    if (rsi_value < 30.0) return Regime::Oversold;
    return Regime::Neutral;
}

struct RsiPoint {
    std::string date;
    double value = 0;
};

struct RsiResult {
    std::vector<RsiPoint> points;
    Regime regime = Regime::Neutral;  // regime of the latest value
};

/// Wilder-smoothed relative strength index. The seed averages the first
/// `period` changes; each later step uses avg = (prev * (period - 1) +
/// current) / period. All-loss windows read 0, all-gain windows 100, and a
/// flat window (no gains, no losses) reads 50.
inline RsiResult rsi(const ingest::PriceSeries& s, std::size_t period = 14) {
    const std::size_t n = s.points.size();
    if (period == 0) throw BenchmarkError("period must be positive");
    if (n < period + 1) throw SeriesTooShort(n, period + 1);

    auto value_of = [](double avg_gain, double avg_loss) {
        if (avg_loss == 0.0 && avg_gain == 0.0) return 50.0;
        if (avg_loss == 0.0) return 100.0;
        const double rs = avg_gain / avg_loss;
        return 100.0 - 100.0 / (1.0 + rs);
    };

    double avg_gain = 0.0, avg_loss = 0.0;
    for (std::size_t i = 1; i <= period; ++i) {
        const double change = s.points[i].close - s.points[i - 1].close;
        if (change > 0) avg_gain += change;
        else avg_loss -= change;
    }
    avg_gain /= static_cast<double>(period);
    avg_loss /= static_cast<double>(period);

    RsiResult res;
    res.points.push_back({s.points[period].date, value_of(avg_gain, avg_loss)});
    for (std::size_t i = period + 1; i < n; ++i) {
        const double change = s.points[i].close - s.points[i - 1].close;
        const double gain = change > 0 ? change : 0.0;
        const double loss = change < 0 ? -change : 0.0;
        avg_gain = (avg_gain * static_cast<double>(period - 1) + gain) / static_cast<double>(period);
        avg_loss = (avg_loss * static_cast<double>(period - 1) + loss) / static_cast<double>(period);
        res.points.push_back({s.points[i].date, value_of(avg_gain, avg_loss)});
    }
    res.regime = regime_of(res.points.back().value);
    return res;
}

/// Builds screening inputs from a panel's latest year. Conventions: DSCR =
/// EBIT / debt_service, P/S = price / sales_per_share, PEG = P/E divided by
/// the EPS growth rate expressed in percent (missing unless growth > 0),
/// revenue growth = rate of change of revenue over the last two years.
inline BenchmarkInputs benchmark_inputs_from_panel(const ingest::FirmPanel& panel,
                                                   std::optional<double> wacc = std::nullopt,
                                                   std::optional<double> roi = std::nullopt) {
    if (panel.records.empty()) throw BenchmarkError("panel has no records");
    const auto& last = panel.records.back();
    BenchmarkInputs in;
    in.wacc = wacc;
    in.roi = roi;
    if (last.equity != 0.0) {
        in.der = last.total_debt / last.equity;
        in.roe = last.net_income / last.equity;
    }
    if (last.total_assets != 0.0) in.debt_to_assets = last.total_debt / last.total_assets;
    if (last.interest_expense && *last.interest_expense != 0.0)
        in.interest_coverage = last.ebit / *last.interest_expense;
    if (last.debt_service && *last.debt_service != 0.0) in.dscr = last.ebit / *last.debt_service;
    if (last.revenue != 0.0) in.net_profit_margin = last.net_income / last.revenue;
    if (panel.records.size() >= 2) {
        const auto& prev = panel.records[panel.records.size() - 2];
        if (prev.revenue != 0.0)
            in.revenue_growth = (last.revenue - prev.revenue) / std::fabs(prev.revenue);
        if (last.price_year_end && last.eps != 0.0) {
            in.pe = *last.price_year_end / last.eps;
            if (prev.eps != 0.0) {
                const double eps_growth = (last.eps - prev.eps) / std::fabs(prev.eps);
                if (eps_growth > 0) in.peg = *in.pe / (100.0 * eps_growth);
            }
        }
    } else if (last.price_year_end && last.eps != 0.0) {
        in.pe = *last.price_year_end / last.eps;
    }
    if (last.price_year_end && last.sales_per_share && *last.sales_per_share != 0.0)
        in.ps = *last.price_year_end / *last.sales_per_share;
    if (last.price_year_end && last.dividends_per_share && *last.price_year_end != 0.0)
        in.dividend_yield = *last.dividends_per_share / *last.price_year_end;
    return in;
}

}  // namespace capstruct::benchmarks
