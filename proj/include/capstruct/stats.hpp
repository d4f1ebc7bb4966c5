// Self-contained statistics kernel: descriptive stats, OLS with classical and
// HC1 robust standard errors, Student-t and F tail probabilities, Welch's
// t-test, and Spearman rank correlation with midrank tie handling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace capstruct::stats {

class StatsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptySeries : public StatsError {
public:
    EmptySeries() : StatsError("series has no usable observations") {}
};

class TooFewObservations : public StatsError {
public:
    TooFewObservations(std::size_t n, std::size_t needed)
        : StatsError("regression needs at least " + std::to_string(needed) +
                     " complete rows, found " + std::to_string(n)) {}
};

class RankDeficient : public StatsError {
public:
    RankDeficient() : StatsError("design matrix is rank deficient (collinear regressors)") {}
};

class InvalidDf : public StatsError {
public:
    InvalidDf() : StatsError("degrees of freedom must be positive and finite") {}
};

class GroupTooSmall : public StatsError {
public:
    GroupTooSmall() : StatsError("each group needs at least two observations") {}
};

class TooFewPairs : public StatsError {
public:
    TooFewPairs() : StatsError("correlation needs at least three complete pairs") {}
};

class ZeroVariance : public StatsError {
public:
    ZeroVariance() : StatsError("series is constant, correlation undefined") {}
};

/// A column of observations where nullopt marks a missing value.
using Series = std::vector<std::optional<double>>;

struct DescriptiveStats {
    double mean = 0;
    std::optional<double> standard_error;  // sample sd / sqrt(n); missing for n = 1
    double minimum = 0;
    double maximum = 0;
    std::size_t n = 0;
};

struct RegressionResult {
    std::vector<double> coefficients;  // intercept first, then one slope per regressor
    std::vector<double> classical_se;
    std::vector<double> robust_se;     // HC1
    std::vector<double> t_stats;
    std::vector<double> p_values;      // two tailed
    std::vector<double> residuals;     // aligned with the rows actually used
    double r_squared = 0;
    double f_stat = 0;                 // joint test on all non-intercept coefficients
    double f_p_value = 1;
    std::size_t n_used = 0;
    bool robust = false;               // which flavor produced t_stats/p_values

    /// Robust flavor is fixed project-wide.
    static constexpr std::string_view robust_flavor = "HC1";
};

struct CorrelationResult {
    double rho = 0;
    double p_value = 1;
    std::size_t n = 0;
};

struct CorrelationMatrix {
    std::vector<std::string> names;
    // cells[i][j]; nullopt where the pairwise computation failed
    std::vector<std::vector<std::optional<CorrelationResult>>> cells;
};

struct WelchResult {
    double t = 0;
    double df = 0;
    double p_value = 1;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
};

namespace detail {

constexpr double kTinyPivot = 1e-10;  // relative pivot tolerance for collinearity

// Continued fraction for the regularized incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
    constexpr int max_iter = 300000;
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

/// Regularized incomplete beta I_x(a, b).
inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

struct DenseMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;  // row major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Householder QR with column pivoting on the design matrix. A column is
// declared collinear when its residual norm falls below kTinyPivot relative
// to that column's own original norm, so the test is invariant to the units
// each regressor happens to be measured in (an intercept next to a column of
// raw currency values must not look degenerate).
struct PivotedQR {
    DenseMatrix a;                  // R in the upper triangle, reflectors below
    std::vector<double> beta;       // Householder scalars
    std::vector<std::size_t> perm;  // column permutation

    PivotedQR(DenseMatrix m) : a(std::move(m)), beta(a.cols, 0.0), perm(a.cols) {
        const std::size_t n = a.rows, p = a.cols;
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::vector<double> original_norm(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += a(i, j) * a(i, j);
            original_norm[j] = std::sqrt(s);
        }
        for (std::size_t k = 0; k < p; ++k) {
            std::size_t best = k;
            double best_ratio = -1.0;
            for (std::size_t j = k; j < p; ++j) {
                double s = 0.0;
                for (std::size_t i = k; i < n; ++i) s += a(i, j) * a(i, j);
                const double ratio =
                    std::sqrt(s) / std::max(original_norm[perm[j]], 1e-300);
                if (ratio > best_ratio) {
                    best_ratio = ratio;
                    best = j;
                }
            }
            if (best != k) {
                for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k), a(i, best));
                std::swap(perm[k], perm[best]);
            }
            double s = 0.0;
            for (std::size_t i = k; i < n; ++i) s += a(i, k) * a(i, k);
            const double norm = std::sqrt(s);
            if (norm <= kTinyPivot * std::max(original_norm[perm[k]], 1e-300))
                throw RankDeficient();

            double alpha = a(k, k) >= 0 ? -norm : norm;
            const double v0 = a(k, k) - alpha;
            beta[k] = -v0 / alpha;  // beta = 2 / (v' v) with v scaled so v[0] = 1
            a(k, k) = alpha;
            for (std::size_t i = k + 1; i < n; ++i) a(i, k) /= v0;
            for (std::size_t j = k + 1; j < p; ++j) {
                double s = a(k, j);
                for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * a(i, j);
                s *= beta[k];
                a(k, j) -= s;
                for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= s * a(i, k);
            }
        }
    }

    void apply_qt(std::vector<double>& y) const {
        const std::size_t n = a.rows, p = a.cols;
        for (std::size_t k = 0; k < p; ++k) {
            double s = y[k];
            for (std::size_t i = k + 1; i < n; ++i) s += a(i, k) * y[i];
            s *= beta[k];
            y[k] -= s;
            for (std::size_t i = k + 1; i < n; ++i) y[i] -= s * a(i, k);
        }
    }

    /// Solves for coefficients in the original (unpermuted) column order.
    std::vector<double> solve(std::vector<double> y) const {
        const std::size_t p = a.cols;
        apply_qt(y);
        std::vector<double> z(p, 0.0);
        for (std::size_t k = p; k-- > 0;) {
            double s = y[k];
            for (std::size_t j = k + 1; j < p; ++j) s -= a(k, j) * z[j];
            z[k] = s / a(k, k);
        }
        std::vector<double> x(p, 0.0);
        for (std::size_t k = 0; k < p; ++k) x[perm[k]] = z[k];
        return x;
    }

    /// (X'X)^-1 in the original column order, from R of the pivoted factorization.
    DenseMatrix xtx_inverse() const {
        const std::size_t p = a.cols;
        DenseMatrix rinv(p, p);
        for (std::size_t j = p; j-- > 0;) {
            rinv(j, j) = 1.0 / a(j, j);
            for (std::size_t i = j; i-- > 0;) {
                double s = 0.0;
                for (std::size_t k = i + 1; k <= j; ++k) s += a(i, k) * rinv(k, j);
                rinv(i, j) = -s / a(i, i);
            }
        }
        DenseMatrix out(p, p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                double s = 0.0;
                for (std::size_t k = std::max(i, j); k < p; ++k) s += rinv(i, k) * rinv(j, k);
                out(perm[i], perm[j]) = s;
            }
        return out;
    }
};

inline double sample_mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

/// Midranks (1-based); tied runs share the average of the ranks they occupy.
inline std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = sample_mean(x), my = sample_mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ZeroVariance();
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

/// Two-tailed tail probability of Student's t with df degrees of freedom,
/// P(|T| >= |t|) = I_x(df/2, 1/2) with x = df / (df + t^2).
inline double t_tail_probability(double t, double df) {
    if (!(df > 0) || !std::isfinite(df)) throw InvalidDf();
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return 0.0;
    return detail::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

/// Upper tail probability of the F distribution, P(F >= f).
inline double f_tail_probability(double f, double df1, double df2) {
    if (!(df1 > 0) || !(df2 > 0) || !std::isfinite(df1) || !std::isfinite(df2)) throw InvalidDf();
    if (std::isnan(f) || f <= 0) return 1.0;
    if (std::isinf(f)) return 0.0;
    return detail::ibeta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

/// Mean, standard error, minimum, maximum over the non-missing entries.
inline DescriptiveStats describe(const Series& series) {
    std::vector<double> v;
    v.reserve(series.size());
    for (const auto& x : series)
        if (x) v.push_back(*x);
    if (v.empty()) throw EmptySeries();

    DescriptiveStats out;
    out.n = v.size();
    out.mean = detail::sample_mean(v);
    auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    out.minimum = *mn;
    out.maximum = *mx;
    if (v.size() >= 2)
        out.standard_error = std::sqrt(detail::sample_variance(v) / static_cast<double>(v.size()));
    return out;
}

/// OLS of y on the given regressor columns plus an automatic intercept.
/// Rows with any missing value are dropped (listwise deletion). Requires
/// n_used >= k + 3 so that the residual df is at least 2. t statistics and
/// p-values are computed from the classical standard errors unless robust is
/// set, in which case the HC1 flavor drives them; both flavors are always
/// recorded in the result.
inline RegressionResult ols_fit(const Series& y, const std::vector<Series>& regressors,
                                bool robust = false) {
    const std::size_t k = regressors.size();
    if (k == 0) throw StatsError("at least one regressor is required");
    const std::size_t n_rows = y.size();
    for (const auto& col : regressors)
        if (col.size() != n_rows) throw StatsError("regressor length mismatch");

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n_rows; ++i) {
        bool complete = y[i].has_value();
        for (const auto& col : regressors) complete = complete && col[i].has_value();
        if (complete) rows.push_back(i);
    }
    const std::size_t n = rows.size();
    const std::size_t p = k + 1;
    if (n < k + 3) throw TooFewObservations(n, k + 3);

    detail::DenseMatrix x(n, p);
    std::vector<double> yv(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 0; j < k; ++j) x(i, j + 1) = *regressors[j][rows[i]];
        yv[i] = *y[rows[i]];
    }

    detail::PivotedQR qr(x);  // also performs the collinearity check
    RegressionResult res;
    res.n_used = n;
    res.robust = robust;

    const auto [ymin_it, ymax_it] = std::minmax_element(yv.begin(), yv.end());
    if (*ymin_it == *ymax_it) {
        // Constant response: the exact solution is intercept = y, zero slopes,
        // zero residuals. The generic path would divide rounding noise by
        // rounding noise here.
        res.coefficients.assign(p, 0.0);
        res.coefficients[0] = yv[0];
        res.residuals.assign(n, 0.0);
        res.classical_se.assign(p, 0.0);
        res.robust_se.assign(p, 0.0);
        res.t_stats.assign(p, 0.0);
        res.p_values.assign(p, 1.0);
        if (yv[0] != 0.0) {
            res.t_stats[0] = std::copysign(std::numeric_limits<double>::infinity(), yv[0]);
            res.p_values[0] = 0.0;
        }
        res.r_squared = 0.0;
        res.f_stat = 0.0;
        res.f_p_value = 1.0;
        return res;
    }

    res.coefficients = qr.solve(yv);

    res.residuals.resize(n);
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < p; ++j) fit += x(i, j) * res.coefficients[j];
        res.residuals[i] = yv[i] - fit;
        ssr += res.residuals[i] * res.residuals[i];
    }
    const double ybar = detail::sample_mean(yv);
    double sst = 0.0;
    for (double v : yv) sst += (v - ybar) * (v - ybar);

    const double df_resid = static_cast<double>(n - p);
    const double sigma2 = ssr / df_resid;
    detail::DenseMatrix xtx_inv = qr.xtx_inverse();

    // HC1 sandwich: (X'X)^-1 X' diag(e^2) X (X'X)^-1 scaled by n / (n - p).
    detail::DenseMatrix meat(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = res.residuals[i] * res.residuals[i];
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) meat(a, b) += w * x(i, a) * x(i, b);
    }
    const double hc1_scale = static_cast<double>(n) / df_resid;

    res.classical_se.resize(p);
    res.robust_se.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        res.classical_se[j] = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        double vj = 0.0;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) vj += xtx_inv(j, a) * meat(a, b) * xtx_inv(b, j);
        res.robust_se[j] = std::sqrt(std::max(0.0, hc1_scale * vj));
    }

    const auto& se = robust ? res.robust_se : res.classical_se;
    res.t_stats.resize(p);
    res.p_values.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (se[j] > 0) {
            res.t_stats[j] = res.coefficients[j] / se[j];
        } else {
            res.t_stats[j] = res.coefficients[j] == 0
                                 ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(),
                                                 res.coefficients[j]);
        }
        res.p_values[j] = t_tail_probability(res.t_stats[j], df_resid);
    }

    if (sst > 0) {
        res.r_squared = 1.0 - ssr / sst;
        if (ssr > 0) {
            res.f_stat = ((sst - ssr) / static_cast<double>(k)) / (ssr / df_resid);
            res.f_p_value = f_tail_probability(res.f_stat, static_cast<double>(k), df_resid);
        } else {
            res.f_stat = std::numeric_limits<double>::infinity();
            res.f_p_value = 0.0;
        }
    } else {
        // Constant response: no variance to explain.
        res.r_squared = 0.0;
        res.f_stat = 0.0;
        res.f_p_value = 1.0;
    }
    return res;
}

/// Welch's two-sample t-test (unequal variances, Welch-Satterthwaite df).
inline WelchResult welch_ttest(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw GroupTooSmall();
    WelchResult res;
    res.n_a = a.size();
    res.n_b = b.size();
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    const double ma = detail::sample_mean(a), mb = detail::sample_mean(b);
    const double va = detail::sample_variance(a), vb = detail::sample_variance(b);
    const double qa = va / na, qb = vb / nb;
    const double se2 = qa + qb;
    if (se2 == 0.0) {
        // Both groups constant: equal means give t = 0, p = 1.
        res.t = 0.0;
        res.df = na + nb - 2.0;
        if (ma != mb) {
            res.t = std::copysign(std::numeric_limits<double>::infinity(), ma - mb);
            res.p_value = 0.0;
        } else {
            res.p_value = 1.0;
        }
        return res;
    }
    res.t = (ma - mb) / std::sqrt(se2);
    res.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
    res.p_value = t_tail_probability(res.t, res.df);
    return res;
}

/// Spearman rank correlation over the pairwise-complete observations.
/// rho is the Pearson correlation of midranks; the p-value uses the
/// t approximation with n - 2 df, and |rho| = 1 maps to p = 0 by convention.
inline CorrelationResult spearman(const Series& x, const Series& y) {
    if (x.size() != y.size()) throw StatsError("series length mismatch");
    std::vector<double> xv, yv;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] && y[i]) {
            xv.push_back(*x[i]);
            yv.push_back(*y[i]);
        }
    const std::size_t n = xv.size();
    if (n < 3) throw TooFewPairs();

    const auto rx = detail::midranks(xv);
    const auto ry = detail::midranks(yv);
    double rho = detail::pearson(rx, ry);  // throws ZeroVariance on constant input
    rho = std::clamp(rho, -1.0, 1.0);

    CorrelationResult res{rho, 0.0, n};
    if (std::fabs(rho) < 1.0) {
        const double df = static_cast<double>(n - 2);
        const double t = rho * std::sqrt(df / (1.0 - rho * rho));
        res.p_value = t_tail_probability(t, df);
    }
    return res;
}

/// Pairwise-deletion Spearman matrix. Cells whose pair fails (too few pairs,
/// constant column) are left missing instead of aborting the whole matrix.
inline CorrelationMatrix spearman_matrix(const std::vector<std::string>& names,
                                         const std::vector<Series>& columns) {
    if (names.size() != columns.size()) throw StatsError("name/column count mismatch");
    if (columns.size() < 2) throw StatsError("matrix needs at least two columns");

    const std::size_t m = columns.size();
    CorrelationMatrix out;
    out.names = names;
    out.cells.assign(m, std::vector<std::optional<CorrelationResult>>(m));
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t present = 0;
        for (const auto& v : columns[i])
            if (v) ++present;
        out.cells[i][i] = CorrelationResult{1.0, 0.0, present};
        for (std::size_t j = 0; j < i; ++j) {
            try {
                auto cell = spearman(columns[i], columns[j]);
                out.cells[i][j] = cell;
                out.cells[j][i] = cell;
            } catch (const StatsError&) {
                // leave the cell missing
            }
        }
    }
    return out;
}

}  // namespace capstruct::stats
