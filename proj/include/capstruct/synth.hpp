// Synthetic panel generation for classifier recovery testing. One generator
// per theory plants that theory's signature relation in the panel columns the
// derivation stage actually reads. Regressors the theory predicts to be
// irrelevant are removed from the market value series by exact in-sample
// projection, so their regression t-statistics are ~0 by construction. These
// are test scaffolding, not economic models.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "capstruct/derive.hpp"
#include "capstruct/ingest.hpp"
#include "capstruct/theorylab.hpp"

namespace capstruct::synth {

class SynthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidSpec : public SynthError {
public:
    explicit InvalidSpec(const std::string& what) : SynthError("invalid generator spec: " + what) {}
};

/// SplitMix64: a counter-based generator (64-bit Weyl sequence fed through a
/// two-round mixing function). The integer stream is identical on every
/// platform; uniforms take the top 53 bits, normal deviates use the Marsaglia
/// polar method.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal(double mean, double sd) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sd * spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        have_spare_ = true;
        return mean + sd * u * scale;
    }

private:
    std::uint64_t state_;
    double spare_ = 0;
    bool have_spare_ = false;
};

struct GeneratorSpec {
    theorylab::Theory theory = theorylab::Theory::NetIncome;
    std::size_t n_years = 12;
    double base_scale = 1e8;
    double effect_size = 2.0;
    double noise_sd = 5e6;
    std::uint64_t seed = 1;
    std::string firm_id;  // defaults to SIM-<theory>-<seed>
};

namespace detail {

inline std::string theory_tag(theorylab::Theory t) {
    switch (t) {
        case theorylab::Theory::NetIncome: return "NI";
        case theorylab::Theory::NetOperatingIncome: return "NOI";
        case theorylab::Theory::ModiglianiMiller: return "MM";
        case theorylab::Theory::TradeOff: return "TO";
        case theorylab::Theory::PeckingOrder: return "PO";
        case theorylab::Theory::Agency: return "AG";
    }
    return "XX";
}

inline std::vector<double> draw_rates(SplitMix64& rng, std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (auto& r : out) r = rng.uniform(lo, hi);
    return out;
}

/// levels[0] = x0, levels[t] = levels[t-1] * (1 + rate[t-1]); a zero rate
/// copies the previous level exactly.
inline std::vector<double> levels_from_rates(double x0, const std::vector<double>& rates) {
    std::vector<double> out;
    out.reserve(rates.size() + 1);
    out.push_back(x0);
    for (double r : rates) out.push_back(r == 0.0 ? out.back() : out.back() * (1.0 + r));
    return out;
}

/// Constraint vector for a simple regression that uses rows first_row..n-1:
/// zero below first_row, centered over the used rows. A response orthogonal
/// to this vector has a zero slope (and zero t) in that regression.
inline std::vector<double> masked_centered(const std::vector<double>& x, std::size_t first_row) {
    std::vector<double> out(x.size(), 0.0);
    double mean = 0;
    for (std::size_t i = first_row; i < x.size(); ++i) mean += x[i];
    mean /= static_cast<double>(x.size() - first_row);
    for (std::size_t i = first_row; i < x.size(); ++i) out[i] = x[i] - mean;
    return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void project_out(std::vector<double>& v, const std::vector<double>& c) {
    const double cc = dot(c, c);
    if (cc <= 0) return;
    const double k = dot(v, c) / cc;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= k * c[i];
}

/// Removes the span of the constraint vectors from v (Gram-Schmidt order).
inline void remove_components(std::vector<double>& v,
                              std::vector<std::vector<double>> constraints) {
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) project_out(constraints[i], constraints[j]);
        project_out(v, constraints[i]);
    }
}

/// Same arithmetic as the derivation stage's rate of change, evaluated on a
/// level path; index 0 is unused and left at zero.
inline std::vector<double> rate_path(const std::vector<double>& levels) {
    std::vector<double> out(levels.size(), 0.0);
    for (std::size_t i = 1; i < levels.size(); ++i)
        out[i] = (levels[i] - levels[i - 1]) / std::abs(levels[i - 1]);
    return out;
}

struct Draft {
    std::vector<int> years;
    std::vector<double> ltd, td, eq, re, ta, rev, tex, ebit, ni, mv;
};

inline ingest::FirmPanel finish(const GeneratorSpec& spec, const Draft& d) {
    ingest::FirmPanel panel;
    panel.firm_id = spec.firm_id.empty()
                        ? "SIM-" + theory_tag(spec.theory) + "-" + std::to_string(spec.seed)
                        : spec.firm_id;
    const double shares = spec.base_scale / 10.0;
    for (std::size_t i = 0; i < d.years.size(); ++i) {
        ingest::AnnualRecord r;
        r.fiscal_year = d.years[i];
        r.long_term_debt = d.ltd[i];
        r.total_debt = d.td[i];
        r.equity = d.eq[i];
        r.retained_earnings = d.re[i];
        r.total_assets = d.ta[i];
        r.revenue = d.rev[i];
        r.total_expenses = d.tex[i];
        r.ebit = d.ebit[i];
        r.net_income = d.ni[i];
        r.market_value = d.mv[i];
        r.eps = d.ni[i] / shares;
        panel.records.push_back(r);
    }
    return panel;
}

}  // namespace detail

/// Deterministic synthetic panel for the requested theory. Same spec and seed
/// give a byte-identical panel; generated panels always validate with zero
/// errors.
inline ingest::FirmPanel generate_panel(const GeneratorSpec& spec) {
    if (spec.n_years < 6 || spec.n_years > 80)
        throw InvalidSpec("n_years must be in 6..80");
    if (!(spec.base_scale > 0) || !std::isfinite(spec.base_scale))
        throw InvalidSpec("base_scale must be positive and finite");
    if (!(spec.noise_sd >= 0) || !std::isfinite(spec.noise_sd))
        throw InvalidSpec("noise_sd must be non-negative and finite");
    if (!std::isfinite(spec.effect_size)) throw InvalidSpec("effect_size must be finite");

    using theorylab::Theory;
    const std::size_t n = spec.n_years;
    const double S = spec.base_scale;
    const double e = spec.effect_size;
    const double ns = spec.noise_sd;
    SplitMix64 rng(spec.seed);

    detail::Draft d;
    d.years.resize(n);
    for (std::size_t t = 0; t < n; ++t) d.years[t] = 2011 + static_cast<int>(t);

    // Shared baseline paths; theory couplings below overwrite what they need.
    auto req_rates = detail::draw_rates(rng, n - 1, -0.04, 0.10);
    auto rre_rates = detail::draw_rates(rng, n - 1, -0.05, 0.15);
    auto rtd_rates = detail::draw_rates(rng, n - 1, -0.12, 0.12);
    auto rex_rates = detail::draw_rates(rng, n - 1, 0.00, 0.10);
    d.rev.resize(n);
    d.ebit.resize(n);
    d.ni.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        d.rev[t] = S * (1.0 + 0.08 * static_cast<double>(t) + 0.02 * rng.uniform(-1.0, 1.0));
        d.ebit[t] = S * (0.12 + 0.05 * rng.uniform(-1.0, 1.0));
        d.ni[t] = d.ebit[t] * (0.45 + 0.10 * rng.uniform(-1.0, 1.0));
    }

    if (spec.theory == Theory::Agency) {
        // Leverage share of assets and profitability move together in rank.
        d.ta.resize(n);
        d.ltd.resize(n);
        d.eq.resize(n);
        d.td.resize(n);
        d.mv.resize(n);
        for (std::size_t t = 0; t < n; ++t) {
            d.ta[t] = 2.0 * S * (1.0 + 0.04 * static_cast<double>(t)) *
                      (1.0 + 0.02 * rng.uniform(-1.0, 1.0));
            const double ltda = 0.15 + 0.12 * rng.uniform01();
            const double roa = 0.004 + 0.002 * e * (ltda - 0.15) / 0.12 + rng.normal(0.0, 2e-5);
            d.ltd[t] = ltda * d.ta[t];
            d.td[t] = 1.35 * d.ltd[t];
            d.ni[t] = roa * d.ta[t];
            d.eq[t] = 0.35 * d.ta[t] * (1.0 + 0.03 * rng.uniform(-1.0, 1.0));
            d.mv[t] = S * (1.0 + 0.03 * static_cast<double>(t)) + rng.normal(0.0, ns);
        }
        d.re = detail::levels_from_rates(0.25 * S, rre_rates);
        d.tex = detail::levels_from_rates(0.75 * S, rex_rates);
        return detail::finish(spec, d);
    }

    switch (spec.theory) {
        case Theory::TradeOff: {
            // Expense growth falls when debt growth rises.
            const double rate_noise = 0.25 * ns / S;
            for (std::size_t t = 0; t + 1 < n; ++t)
                rex_rates[t] = -0.2 * e * rtd_rates[t] + rng.normal(0.0, rate_noise);
            break;
        }
        case Theory::PeckingOrder: {
            // effect_size is read as the target fraction of qualifying years.
            const double want = std::ceil(e * static_cast<double>(n));
            const std::size_t k =
                want <= 0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(want), n - 1);
            for (std::size_t t = 0; t + 1 < n; ++t) {
                if (t < k) {
                    rre_rates[t] = 0.25 + 0.05 * rng.uniform(-1.0, 1.0);
                    rtd_rates[t] = 0.12 + 0.04 * rng.uniform(-1.0, 1.0);
                    req_rates[t] = 0.02 + 0.03 * rng.uniform(-1.0, 1.0);
                } else {
                    rre_rates[t] = 0.02 + 0.02 * rng.uniform(-1.0, 1.0);
                    rtd_rates[t] = 0.12 + 0.04 * rng.uniform(-1.0, 1.0);
                    req_rates[t] = 0.25 + 0.05 * rng.uniform(-1.0, 1.0);
                }
            }
            break;
        }
        default: break;
    }

    d.eq = detail::levels_from_rates(0.8 * S, req_rates);
    d.re = detail::levels_from_rates(0.25 * S, rre_rates);
    d.td = detail::levels_from_rates(0.8 * S, rtd_rates);
    d.tex = detail::levels_from_rates(0.75 * S, rex_rates);
    d.ltd.resize(n);
    d.ta.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        d.ltd[t] = 0.7 * d.td[t];
        d.ta[t] = d.td[t] + d.eq[t] + 0.5 * S * (1.0 + 0.02 * static_cast<double>(t));
    }

    d.mv.resize(n);
    switch (spec.theory) {
        case Theory::NetIncome: {
            // Market value tracks the growth rate of total debt.
            const auto rtd = detail::rate_path(d.td);
            d.mv[0] = S + rng.normal(0.0, ns);
            for (std::size_t t = 1; t < n; ++t) d.mv[t] = S + e * S * rtd[t] + rng.normal(0.0, ns);
            break;
        }
        case Theory::NetOperatingIncome:
        case Theory::ModiglianiMiller: {
            const bool mm = spec.theory == Theory::ModiglianiMiller;
            // The value signal is centered so years without an expected-growth
            // estimate sit on the same base path instead of a level below it.
            std::vector<double> etfr(n, 0.0);
            if (mm) {
                double mean = 0.0;
                for (std::size_t t = 2; t < n; ++t) {
                    std::vector<double> window(d.rev.begin(),
                                               d.rev.begin() + static_cast<long>(t) + 1);
                    etfr[t] = derive::forecast_next_revenue(window) - d.rev[t];
                    mean += etfr[t];
                }
                mean /= static_cast<double>(n - 2);
                for (std::size_t t = 2; t < n; ++t) etfr[t] -= mean;
                for (std::size_t t = 0; t < 2; ++t) etfr[t] = 0.0;
            }
            for (std::size_t t = 0; t < n; ++t) {
                const double signal =
                    mm ? 0.8 * S * (1.0 + 0.01 * static_cast<double>(t)) + 20.0 * e * etfr[t]
                       : 0.4 * S + 3.5 * e * d.ebit[t];
                d.mv[t] = signal + rng.normal(0.0, ns);
            }
            // Null couplings removed exactly: the derived debt growth rate and
            // debt-to-equity series end up uncorrelated with market value over
            // the rows their regressions use.
            std::vector<double> der(n);
            for (std::size_t t = 0; t < n; ++t) der[t] = d.td[t] / d.eq[t];
            detail::remove_components(d.mv,
                                      {detail::masked_centered(detail::rate_path(d.td), 1),
                                       detail::masked_centered(der, 0)});
            break;
        }
        case Theory::TradeOff: {
            // One interior peak in the value path.
            const std::size_t m = (n - 1) / 2;
            const double w = static_cast<double>(std::max(m, n - 1 - m));
            const double amp = std::max(S, 450.0 * ns);
            for (std::size_t t = 0; t < n; ++t) {
                const double z = (static_cast<double>(t) - static_cast<double>(m)) / w;
                d.mv[t] = 0.5 * S + amp * (1.0 - z * z) + rng.normal(0.0, ns);
            }
            break;
        }
        case Theory::PeckingOrder: {
            for (std::size_t t = 0; t < n; ++t)
                d.mv[t] = S * (1.0 + 0.03 * static_cast<double>(t)) + rng.normal(0.0, ns);
            break;
        }
        default: break;
    }

    return detail::finish(spec, d);
}

}  // namespace capstruct::synth
