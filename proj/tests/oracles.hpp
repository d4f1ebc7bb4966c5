// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written with different algorithms than the
// code under test: regression via normal equations and Gaussian elimination
// instead of QR, tail probabilities via adaptive Simpson integration of the
// density instead of the incomplete beta function.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracles {

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.

inline double simpson_slice(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson_slice(a, m, fa, flm, fm);
    const double right = simpson_slice(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson_slice(a, b, fa, fm, fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 60);
}

// ---------------------------------------------------------------------------
// Tail probabilities by integrating the density (std::lgamma only).

/// Two-sided t tail: P(|T_df| >= |t|) = 1 - 2 * integral of the density over
/// [0, |t|].
inline double t_tail(double t, double df) {
    const double at = std::abs(t);
    if (at == 0.0) return 1.0;
    const double logc = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                        0.5 * std::log(df * std::acos(-1.0));
    auto density = [&](double x) {
        return std::exp(logc - 0.5 * (df + 1.0) * std::log1p(x * x / df));
    };
    const double body = integrate(density, 0.0, at);
    return std::max(0.0, 1.0 - 2.0 * body);
}

/// Upper F tail: P(F_{d1,d2} >= f) = 1 - integral of the density over [0, f].
inline double f_tail(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    const double logc = std::lgamma(0.5 * (d1 + d2)) - std::lgamma(0.5 * d1) -
                        std::lgamma(0.5 * d2) + 0.5 * d1 * std::log(d1 / d2);
    auto density = [&](double x) {
        if (x <= 0.0) return d1 >= 2.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::exp(logc + (0.5 * d1 - 1.0) * std::log(x) -
                        0.5 * (d1 + d2) * std::log1p(d1 * x / d2));
    };
    // Near zero the density behaves like x^(d1/2 - 1), singular for d1 < 2.
    // Substituting x = u^2 turns the integrand into
    //   2 u^(d1 - 1) (1 + d1 u^2 / d2)^(-(d1 + d2)/2)
    // which is smooth for every d1 >= 1, so Simpson converges.
    auto density_u = [&](double u) {
        if (u <= 0.0) return d1 == 1.0 ? 2.0 * std::exp(logc) : 0.0;
        return 2.0 * std::exp(logc + (d1 - 1.0) * std::log(u) -
                              0.5 * (d1 + d2) * std::log1p(d1 * u * u / d2));
    };
    const double split = std::min(f, 1.0);
    double body = integrate(density_u, 0.0, std::sqrt(split));
    if (f > split) body += integrate(density, split, f);
    return std::max(0.0, 1.0 - body);
}

/// Two-sided standard normal tail via the complementary error function.
inline double normal_tail(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Ordinary least squares by normal equations + Gaussian elimination.

struct OlsOracle {
    std::vector<double> coefficients;
    std::vector<double> classical_se;
    std::vector<double> hc1_se;
    std::vector<double> t_stats;
    std::vector<double> p_values;
    double r_squared = 0;
    double f_stat = 0;
    double f_p_value = 1;
};

/// Solves A x = b for square A (partial pivoting); A and b are clobbered.
inline std::vector<double> solve_linear(std::vector<std::vector<double>> A,
                                        std::vector<double> b) {
    const std::size_t p = A.size();
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        if (A[col][col] == 0.0) throw std::runtime_error("singular system in oracle");
        for (std::size_t r = col + 1; r < p; ++r) {
            const double m = A[r][col] / A[col][col];
            for (std::size_t c = col; c < p; ++c) A[r][c] -= m * A[col][c];
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(p);
    for (std::size_t i = p; i-- > 0;) {
        double acc = b[i];
        for (std::size_t j = i + 1; j < p; ++j) acc -= A[i][j] * x[j];
        x[i] = acc / A[i][i];
    }
    return x;
}

inline std::vector<std::vector<double>> invert(const std::vector<std::vector<double>>& A) {
    const std::size_t p = A.size();
    std::vector<std::vector<double>> inv(p, std::vector<double>(p, 0.0));
    for (std::size_t j = 0; j < p; ++j) {
        std::vector<double> e(p, 0.0);
        e[j] = 1.0;
        auto col = solve_linear(A, e);
        for (std::size_t i = 0; i < p; ++i) inv[i][j] = col[i];
    }
    return inv;
}

/// xs holds the regressor columns (no intercept column; the oracle adds it).
inline OlsOracle ols(const std::vector<double>& y, const std::vector<std::vector<double>>& xs) {
    const std::size_t n = y.size();
    const std::size_t k = xs.size();
    const std::size_t p = k + 1;

    std::vector<std::vector<double>> X(n, std::vector<double>(p, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) X[i][j + 1] = xs[j][i];

    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += X[i][a] * y[i];
            for (std::size_t b = 0; b < p; ++b) xtx[a][b] += X[i][a] * X[i][b];
        }
    }

    OlsOracle out;
    out.coefficients = solve_linear(xtx, xty);

    std::vector<double> resid(n);
    double ssr = 0, sst = 0;
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double yhat = 0;
        for (std::size_t j = 0; j < p; ++j) yhat += X[i][j] * out.coefficients[j];
        resid[i] = y[i] - yhat;
        ssr += resid[i] * resid[i];
        sst += (y[i] - ybar) * (y[i] - ybar);
    }
    const double dfree = static_cast<double>(n - p);
    const double sigma2 = ssr / dfree;
    const auto inv = invert(xtx);

    std::vector<std::vector<double>> meat(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                meat[a][b] += X[i][a] * resid[i] * resid[i] * X[i][b];
    const double hc1_scale = static_cast<double>(n) / dfree;

    out.classical_se.resize(p);
    out.hc1_se.resize(p);
    out.t_stats.resize(p);
    out.p_values.resize(p);
    for (std::size_t a = 0; a < p; ++a) {
        out.classical_se[a] = std::sqrt(sigma2 * inv[a][a]);
        double sandwich = 0;
        for (std::size_t u = 0; u < p; ++u)
            for (std::size_t v = 0; v < p; ++v) sandwich += inv[a][u] * meat[u][v] * inv[v][a];
        out.hc1_se[a] = std::sqrt(hc1_scale * sandwich);
        out.t_stats[a] = out.classical_se[a] > 0 ? out.coefficients[a] / out.classical_se[a] : 0.0;
        out.p_values[a] = t_tail(out.t_stats[a], dfree);
    }
    out.r_squared = sst > 0 ? 1.0 - ssr / sst : 0.0;
    if (sst > 0 && ssr > 0) {
        out.f_stat = ((sst - ssr) / static_cast<double>(k)) / (ssr / dfree);
        out.f_p_value = f_tail(out.f_stat, static_cast<double>(k), dfree);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rank and location statistics.

/// Average ranks (1-based); ties share the mean of the ranks they span.
inline std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = shared;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

struct WelchOracle {
    double t = 0, df = 0, p = 1;
};

inline WelchOracle welch(const std::vector<double>& a, const std::vector<double>& b) {
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    auto var = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double va = var(a) / na, vb = var(b) / nb;
    WelchOracle out;
    out.t = (mean(a) - mean(b)) / std::sqrt(va + vb);
    out.df = (va + vb) * (va + vb) /
             (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    out.p = t_tail(out.t, out.df);
    return out;
}

/// Hand-stepped Wilder smoothing: seed averages are plain means of the first
/// `period` changes, later averages reuse the previous value.
inline std::vector<double> wilder_rsi(const std::vector<double>& closes, std::size_t period) {
    std::vector<double> gains, losses;
    for (std::size_t i = 1; i < closes.size(); ++i) {
        const double change = closes[i] - closes[i - 1];
        gains.push_back(change > 0 ? change : 0.0);
        losses.push_back(change < 0 ? -change : 0.0);
    }
    std::vector<double> out;
    double ag = 0, al = 0;
    for (std::size_t i = 0; i < period; ++i) {
        ag += gains[i];
        al += losses[i];
    }
    ag /= static_cast<double>(period);
    al /= static_cast<double>(period);
    auto value = [](double g, double l) {
        if (g == 0.0 && l == 0.0) return 50.0;
        if (l == 0.0) return 100.0;
        return 100.0 - 100.0 / (1.0 + g / l);
    };
    out.push_back(value(ag, al));
    for (std::size_t i = period; i < gains.size(); ++i) {
        ag = (ag * static_cast<double>(period - 1) + gains[i]) / static_cast<double>(period);
        al = (al * static_cast<double>(period - 1) + losses[i]) / static_cast<double>(period);
        out.push_back(value(ag, al));
    }
    return out;
}

}  // namespace oracles
