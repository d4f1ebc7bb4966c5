// Hypothesis battery H11..H18 over the derived variables, the pecking-order
// year count, the peak-market-value leverage probe, and the per-firm
// six-theory verdict classifier.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "capstruct/derive.hpp"
#include "capstruct/stats.hpp"

namespace capstruct::theorylab {

class TheoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NoUsableYears : public TheoryError {
public:
    NoUsableYears() : TheoryError("fewer than two years have all three financing rates") {}
};

class AllMissingMVF : public TheoryError {
public:
    AllMissingMVF() : TheoryError("market value is missing for every year") {}
};

class MissingEvidence : public TheoryError {
public:
    explicit MissingEvidence(const std::string& what)
        : TheoryError("verdict needs evidence that is unavailable: " + what) {}
};

enum class Theory {
    NetIncome,
    NetOperatingIncome,
    ModiglianiMiller,
    TradeOff,
    PeckingOrder,
    Agency,
};

enum class Adherence { Followed, PartiallyFollowed, NotFollowed };

enum class HypothesisId { H11, H12, H13, H14, H15, H16, H17, H18 };

inline const char* to_string(Theory t) {
    switch (t) {
        case Theory::NetIncome: return "Net Income";
        case Theory::NetOperatingIncome: return "Net Operating Income";
        case Theory::ModiglianiMiller: return "Modigliani-Miller";
        case Theory::TradeOff: return "Trade-Off";
        case Theory::PeckingOrder: return "Pecking Order";
        case Theory::Agency: return "Agency";
    }
    return "?";
}

inline const char* to_string(Adherence a) {
    switch (a) {
        case Adherence::Followed: return "Followed";
        case Adherence::PartiallyFollowed: return "Partially Followed";
        case Adherence::NotFollowed: return "Not Followed";
    }
    return "?";
}

inline const char* to_string(HypothesisId id) {
    switch (id) {
        case HypothesisId::H11: return "H11";
        case HypothesisId::H12: return "H12";
        case HypothesisId::H13: return "H13";
        case HypothesisId::H14: return "H14";
        case HypothesisId::H15: return "H15";
        case HypothesisId::H16: return "H16";
        case HypothesisId::H17: return "H17";
        case HypothesisId::H18: return "H18";
    }
    return "?";
}

/// Star ladder cutoffs, strict inequalities: p < three -> "***",
/// p < two -> "**", p < one -> "*".
struct StarThresholds {
    double three = 0.01;
    double two = 0.05;
    double one = 0.10;
};

/// Verdict cutoffs: "significant" means p < followed, "marginal" means
/// p < partial.
struct SignificanceLevels {
    double followed = 0.05;
    double partial = 0.10;
};

inline std::string stars_for(double p, const StarThresholds& th = {}) {
    if (p < th.three) return "***";
    if (p < th.two) return "**";
    if (p < th.one) return "*";
    return "";
}

/// One tested hypothesis. For regression hypotheses r_squared is the fit R^2
/// and coefficient_sign the slope sign (the joint H18 stores the common slope
/// sign, 0 when the two slopes disagree). For the rank-correlation hypotheses
/// H16/H17 r_squared holds rho^2 and coefficient_sign the sign of rho.
struct HypothesisOutcome {
    HypothesisId id = HypothesisId::H11;
    std::string dependent;
    std::vector<std::string> regressors;
    double r_squared = 0;
    double p_value = 1;
    int coefficient_sign = 0;  // -1, 0, +1
    std::string stars;
    std::size_t n_used = 0;
};

/// Battery output. Hypotheses that cannot run are recorded in failures and do
/// not block the others. Regression-backed outcomes keep their full fit (for
/// robust standard errors in reports); the pooled four-regressor fit of MVF on
/// RTD, EBIT, DER, and ETFR is attached as supplementary evidence.
struct HypothesisBattery {
    std::vector<HypothesisOutcome> outcomes;
    std::map<HypothesisId, std::string> failures;
    std::map<HypothesisId, stats::RegressionResult> fits;
    std::optional<stats::RegressionResult> pooled;

    const HypothesisOutcome* find(HypothesisId id) const {
        for (const auto& o : outcomes)
            if (o.id == id) return &o;
        return nullptr;
    }
};

struct PeckingOrderResult {
    std::size_t years_followed = 0;
    std::size_t n_usable = 0;
    std::vector<int> followed_years;
};

struct PeakResult {
    int peak_year = 0;
    std::size_t peak_index = 0;
    double peak_mvf = 0;
    std::optional<double> contemporaneous_der;
    std::optional<int> lag_year;        // missing iff the peak is the first observation
    std::optional<double> lag_der;      // DER at lag_year when computable
    bool interior = false;              // peak is neither the first nor the last year
};

struct TheoryVerdict {
    Theory theory = Theory::NetIncome;
    Adherence status = Adherence::NotFollowed;
    std::vector<std::string> evidence;
};

namespace detail {

inline std::string fmt_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", p);
    return buf;
}

inline int sign_of(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

// Regression hypotheses require at least 6 complete rows each, a firm-level
// usability floor stricter than the kernel's k + 3.
constexpr std::size_t kMinHypothesisRows = 6;

inline HypothesisOutcome from_regression(HypothesisId id, const std::string& dependent,
                                         std::vector<std::string> regressors,
                                         const stats::RegressionResult& fit,
                                         const StarThresholds& th) {
    HypothesisOutcome o;
    o.id = id;
    o.dependent = dependent;
    o.regressors = std::move(regressors);
    o.r_squared = fit.r_squared;
    o.n_used = fit.n_used;
    if (o.regressors.size() == 1) {
        o.p_value = fit.p_values[1];
        o.coefficient_sign = sign_of(fit.coefficients[1]);
    } else {
        o.p_value = fit.f_p_value;
        int s = sign_of(fit.coefficients[1]);
        for (std::size_t j = 2; j < fit.coefficients.size(); ++j)
            if (sign_of(fit.coefficients[j]) != s) s = 0;
        o.coefficient_sign = s;
    }
    o.stars = stars_for(o.p_value, th);
    return o;
}

}  // namespace detail

/// Runs the battery:
///   H11  MVF ~ RTD          H12  MVF ~ EBIT        H13  MVF ~ DER
///   H14  MVF ~ ETFR         H15  REX ~ RTD
///   H16  Spearman(LTDA, ROA)                        H17  Spearman(LTDA, ROE)
///   H18  ROA ~ LTDA + LTDE (joint F test)
/// Decisions use classical standard errors; HC1 values stay available in the
/// recorded fits.
inline HypothesisBattery test_hypotheses(const derive::DerivedSeries& d,
                                         const StarThresholds& th = {}) {
    HypothesisBattery battery;

    auto run_regression = [&](HypothesisId id, const std::string& yname,
                              const std::vector<std::string>& xnames) {
        try {
            std::size_t complete = 0;
            const auto& y = d.column(yname);
            for (std::size_t i = 0; i < d.size(); ++i) {
                bool row = y[i].has_value();
                for (const auto& xn : xnames) row = row && d.column(xn)[i].has_value();
                if (row) ++complete;
            }
            if (complete < detail::kMinHypothesisRows)
                throw stats::TooFewObservations(complete, detail::kMinHypothesisRows);
            std::vector<stats::Series> xs;
            for (const auto& xn : xnames) xs.push_back(d.column(xn));
            auto fit = stats::ols_fit(y, xs, /*robust=*/false);
            battery.outcomes.push_back(detail::from_regression(id, yname, xnames, fit, th));
            battery.fits.emplace(id, std::move(fit));
        } catch (const stats::StatsError& e) {
            battery.failures.emplace(id, e.what());
        }
    };

    auto run_spearman = [&](HypothesisId id, const std::string& xname, const std::string& yname) {
        try {
            auto c = stats::spearman(d.column(xname), d.column(yname));
            HypothesisOutcome o;
            o.id = id;
            o.dependent = yname;
            o.regressors = {xname};
            o.r_squared = c.rho * c.rho;
            o.p_value = c.p_value;
            o.coefficient_sign = detail::sign_of(c.rho);
            o.stars = stars_for(o.p_value, th);
            o.n_used = c.n;
            battery.outcomes.push_back(std::move(o));
        } catch (const stats::StatsError& e) {
            battery.failures.emplace(id, e.what());
        }
    };

    run_regression(HypothesisId::H11, "MVF", {"RTD"});
    run_regression(HypothesisId::H12, "MVF", {"EBIT"});
    run_regression(HypothesisId::H13, "MVF", {"DER"});
    run_regression(HypothesisId::H14, "MVF", {"ETFR"});
    run_regression(HypothesisId::H15, "REX", {"RTD"});
    run_spearman(HypothesisId::H16, "LTDA", "ROA");
    run_spearman(HypothesisId::H17, "LTDA", "ROE");
    run_regression(HypothesisId::H18, "ROA", {"LTDA", "LTDE"});

    try {
        battery.pooled = stats::ols_fit(d.mvf, {d.rtd, d.ebit, d.der, d.etfr}, /*robust=*/false);
    } catch (const stats::StatsError&) {
        battery.pooled.reset();
    }
    return battery;
}

/// Counts the years whose financing growth ordering matches the pecking-order
/// prediction RRE > RTD > REQ (strictly, unless strict is false, which uses
/// >=). Years with any of the three rates missing are excluded from n_usable.
inline PeckingOrderResult pecking_order_count(const derive::DerivedSeries& d, bool strict = true) {
    PeckingOrderResult res;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.rre[i] || !d.rtd[i] || !d.req[i]) continue;
        ++res.n_usable;
        const double rre = *d.rre[i], rtd = *d.rtd[i], req = *d.req[i];
        const bool follows = strict ? (rre > rtd && rtd > req) : (rre >= rtd && rtd >= req);
        if (follows) {
            ++res.years_followed;
            res.followed_years.push_back(d.years[i]);
        }
    }
    if (res.n_usable < 2) throw NoUsableYears();
    return res;
}

/// Locates the market-value peak (earliest year on ties) and reads DER at the
/// peak and at the year before it. The lag is undefined iff the peak is the
/// first observation.
inline PeakResult peak_mvf_analysis(const derive::DerivedSeries& d) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.mvf[i]) continue;
        if (!best || *d.mvf[i] > *d.mvf[*best]) best = i;
    }
    if (!best) throw AllMissingMVF();

    PeakResult res;
    res.peak_index = *best;
    res.peak_year = d.years[*best];
    res.peak_mvf = *d.mvf[*best];
    res.contemporaneous_der = d.der[*best];
    if (*best > 0) {
        res.lag_year = d.years[*best - 1];
        res.lag_der = d.der[*best - 1];
    }
    res.interior = *best > 0 && *best + 1 < d.size();
    return res;
}

/// Applies the per-theory decision rules to the battery and procedure
/// outputs. Throws MissingEvidence when a required outcome is absent.
inline std::vector<TheoryVerdict> classify_firm(const HypothesisBattery& battery,
                                                const PeckingOrderResult& pecking,
                                                const PeakResult& peak,
                                                const SignificanceLevels& lv = {}) {
    auto need = [&](HypothesisId id) -> const HypothesisOutcome& {
        const auto* o = battery.find(id);
        if (!o) {
            auto it = battery.failures.find(id);
            std::string why = it == battery.failures.end() ? "not run" : it->second;
            throw MissingEvidence(std::string(to_string(id)) + " (" + why + ")");
        }
        return *o;
    };
    auto sig = [&](const HypothesisOutcome& o) { return o.p_value < lv.followed; };
    auto marginal = [&](const HypothesisOutcome& o) { return o.p_value < lv.partial; };
    auto cite = [](const HypothesisOutcome& o) {
        std::string s = std::string(to_string(o.id)) + ": p=" + detail::fmt_p(o.p_value);
        s += o.coefficient_sign > 0 ? ", sign +" : (o.coefficient_sign < 0 ? ", sign -" : ", sign 0");
        s += ", n=" + std::to_string(o.n_used);
        return s;
    };

    const auto& h11 = need(HypothesisId::H11);
    const auto& h12 = need(HypothesisId::H12);
    const auto& h13 = need(HypothesisId::H13);
    const auto& h14 = need(HypothesisId::H14);
    const auto& h15 = need(HypothesisId::H15);
    const auto& h16 = need(HypothesisId::H16);
    const auto& h17 = need(HypothesisId::H17);

    std::vector<TheoryVerdict> verdicts;

    {
        // Net income theory: leverage moves market value.
        TheoryVerdict v{Theory::NetIncome, Adherence::NotFollowed, {cite(h11), cite(h13)}};
        if (sig(h11) || sig(h13)) v.status = Adherence::Followed;
        else if (marginal(h11) || marginal(h13)) v.status = Adherence::PartiallyFollowed;
        verdicts.push_back(std::move(v));
    }
    {
        // Net operating income theory: earnings move value, leverage does not.
        TheoryVerdict v{Theory::NetOperatingIncome, Adherence::NotFollowed, {cite(h12), cite(h13)}};
        if (sig(h12) && !marginal(h13)) v.status = Adherence::Followed;
        else if (marginal(h12) && !marginal(h13)) v.status = Adherence::PartiallyFollowed;
        verdicts.push_back(std::move(v));
    }
    {
        // Capital-structure irrelevance: value tracks expected future earnings
        // (ETFR) while both leverage terms stay insignificant.
        TheoryVerdict v{Theory::ModiglianiMiller, Adherence::NotFollowed,
                        {cite(h11), cite(h13), cite(h14)}};
        if (!marginal(h11) && !marginal(h13)) {
            if (sig(h14)) v.status = Adherence::Followed;
            else if (marginal(h14)) v.status = Adherence::PartiallyFollowed;
        }
        verdicts.push_back(std::move(v));
    }
    {
        // Trade-off theory: negative debt-to-expenses linkage plus an interior
        // value peak over the leverage path.
        const bool link = sig(h15) && h15.coefficient_sign < 0;
        const bool interior = peak.interior;
        TheoryVerdict v{Theory::TradeOff, Adherence::NotFollowed, {cite(h15)}};
        v.evidence.push_back("peak MVF in " + std::to_string(peak.peak_year) +
                             (interior ? " (interior)" : " (boundary)"));
        if (link && interior) v.status = Adherence::Followed;
        else if (link || interior) v.status = Adherence::PartiallyFollowed;
        verdicts.push_back(std::move(v));
    }
    {
        TheoryVerdict v{Theory::PeckingOrder, Adherence::NotFollowed, {}};
        v.evidence.push_back("RRE > RTD > REQ in " + std::to_string(pecking.years_followed) +
                             " of " + std::to_string(pecking.n_usable) + " usable years");
        const double half = static_cast<double>(pecking.n_usable) / 2.0;
        if (static_cast<double>(pecking.years_followed) > half) v.status = Adherence::Followed;
        else if (pecking.years_followed >= 1) v.status = Adherence::PartiallyFollowed;
        verdicts.push_back(std::move(v));
    }
    {
        // Agency theory: leverage disciplines management, so leverage and
        // profitability rank-correlate positively.
        const bool pos16 = sig(h16) && h16.coefficient_sign > 0;
        const bool pos17 = sig(h17) && h17.coefficient_sign > 0;
        TheoryVerdict v{Theory::Agency, Adherence::NotFollowed, {cite(h16), cite(h17)}};
        if (pos16 || pos17) v.status = Adherence::Followed;
        else if (marginal(h16) || marginal(h17)) v.status = Adherence::PartiallyFollowed;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

}  // namespace capstruct::theorylab
