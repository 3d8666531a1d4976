#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evogen::stats {

struct SummaryStats {
    int n = 0;
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0, mean = 0;
    double ci95_low = 0, ci95_high = 0;
    bool has_ci = false;  // false at n = 1, where the CI is omitted
};

struct TestResult {
    double statistic = 0;
    double p_value = 1;
    std::string test_name;
    std::optional<double> df;
    bool degenerate = false;  // zero-variance input handled as a flagged result
};

struct RegressionFit {
    std::string model_name;
    std::vector<double> params;
    double r_square = 0;
};

namespace detail {

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0) || !(b > 0)) throw std::runtime_error("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(ln_front) * detail::betacf(a, b, x) / a;
    }
    return 1.0 - std::exp(ln_front) * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p-value for a t statistic with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

inline double student_t_cdf(double t, double df) {
    const double half = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t >= 0 ? 1.0 - half : half;
}

// Upper-tail quantile by bisection; fine for the few CI evaluations needed.
inline double student_t_quantile(double p, double df) {
    if (!(p > 0 && p < 1)) throw std::runtime_error("student_t_quantile: p must be in (0,1)");
    if (p == 0.5) return 0.0;
    double lo = -1e3, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

inline double sample_mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v, double mean) {
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

// Quantile by linear interpolation at rank p*(n-1) over the sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

inline SummaryStats describe(const std::vector<double>& samples) {
    if (samples.empty()) throw std::runtime_error("describe: empty sample");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    SummaryStats s;
    s.n = static_cast<int>(sorted.size());
    s.min = sorted.front();
    s.max = sorted.back();
    s.q25 = detail::quantile_sorted(sorted, 0.25);
    s.median = detail::quantile_sorted(sorted, 0.50);
    s.q75 = detail::quantile_sorted(sorted, 0.75);
    s.mean = detail::sample_mean(sorted);
    if (s.n >= 2) {
        const double sd = std::sqrt(detail::sample_variance(sorted, s.mean));
        const double t = student_t_quantile(0.975, s.n - 1);
        const double half = t * sd / std::sqrt(static_cast<double>(s.n));
        s.ci95_low = s.mean - half;
        s.ci95_high = s.mean + half;
        s.has_ci = true;
    } else {
        s.ci95_low = s.ci95_high = s.mean;
    }
    return s;
}

// Welch's unpaired t-test with Welch-Satterthwaite degrees of freedom.
inline TestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw std::runtime_error("welch_t_test: each sample needs n >= 2");
    TestResult r;
    r.test_name = "welch_t";
    const double ma = detail::sample_mean(a), mb = detail::sample_mean(b);
    const double va = detail::sample_variance(a, ma), vb = detail::sample_variance(b, mb);
    if (va == 0 && vb == 0) {
        r.degenerate = true;
        if (ma == mb) {
            r.statistic = 0;
            r.p_value = 1;
        } else {
            r.statistic = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_value = 0;
        }
        return r;
    }
    const double sa = va / static_cast<double>(a.size());
    const double sb = vb / static_cast<double>(b.size());
    r.statistic = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) /
                      (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
    r.df = df;
    r.p_value = student_t_two_sided_p(r.statistic, df);
    return r;
}

// One-sample t-test on paired differences.
inline TestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::runtime_error("paired_t_test: samples must have equal length");
    if (a.size() < 2) throw std::runtime_error("paired_t_test: need n >= 2");
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    TestResult r;
    r.test_name = "paired_t";
    const double md = detail::sample_mean(diff);
    const double vd = detail::sample_variance(diff, md);
    if (vd == 0) {
        r.degenerate = true;
        if (md == 0) {
            r.statistic = 0;
            r.p_value = 1;
        } else {
            r.statistic = md > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_value = 0;
        }
        return r;
    }
    const double df = static_cast<double>(a.size() - 1);
    r.statistic = md / std::sqrt(vd / static_cast<double>(a.size()));
    r.df = df;
    r.p_value = student_t_two_sided_p(r.statistic, df);
    return r;
}

namespace detail {

// Midranks of the pooled sample; also reports the tie-group sizes.
inline void pooled_midranks(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& ranks_a,
                            std::vector<std::size_t>& tie_sizes, bool& has_ties) {
    struct Entry {
        double value;
        bool from_a;
        std::size_t index;
    };
    std::vector<Entry> pool;
    pool.reserve(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) pool.push_back({a[i], true, i});
    for (std::size_t i = 0; i < b.size(); ++i) pool.push_back({b[i], false, i});
    std::sort(pool.begin(), pool.end(), [](const Entry& x, const Entry& y) { return x.value < y.value; });
    ranks_a.assign(a.size(), 0.0);
    tie_sizes.clear();
    has_ties = false;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j + 1 < pool.size() && pool[j + 1].value == pool[i].value) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) {
            if (pool[t].from_a) ranks_a[pool[t].index] = midrank;
        }
        const std::size_t group = j - i + 1;
        if (group > 1) has_ties = true;
        tie_sizes.push_back(group);
        i = j + 1;
    }
}

// P(U <= u) from the standard counting recurrence
// c(n, m, u) = c(n-1, m, u-m) + c(n, m-1, u).
inline double mann_whitney_exact_cdf(std::size_t n_a, std::size_t n_b, long long u) {
    const long long u_max = static_cast<long long>(n_a * n_b);
    if (u < 0) return 0.0;
    if (u >= u_max) return 1.0;
    // table[i][j*(u_max+1) + v] over i a's, j b's; doubles stay exact below 2^53
    std::vector<std::vector<double>> counts(n_a + 1, std::vector<double>(u_max + 1, 0.0));
    for (std::size_t j = 0; j <= n_b; ++j) {
        std::vector<std::vector<double>> next(n_a + 1, std::vector<double>(u_max + 1, 0.0));
        for (std::size_t i = 0; i <= n_a; ++i) {
            for (long long v = 0; v <= u_max; ++v) {
                if (i == 0 && j == 0) {
                    next[i][v] = v == 0 ? 1.0 : 0.0;
                    continue;
                }
                double ways = 0.0;
                if (i > 0 && v >= static_cast<long long>(j)) {
                    // previous iteration over j is the same; use current `next` for i-1
                    ways += next[i - 1][v - static_cast<long long>(j)];
                }
                if (j > 0) ways += counts[i][v];
                next[i][v] = ways;
            }
        }
        counts = std::move(next);
    }
    double total = 0.0, below = 0.0;
    for (long long v = 0; v <= u_max; ++v) {
        total += counts[n_a][v];
        if (v <= u) below += counts[n_a][v];
    }
    return below / total;
}

}  // namespace detail

// Mann-Whitney U with midrank ties. Exact two-sided p by enumeration when
// n_a*n_b <= 400 and the pooled sample has no ties; otherwise the normal
// approximation with tie and continuity corrections.
inline TestResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::runtime_error("mann_whitney: samples must be non-empty");
    std::vector<double> ranks_a;
    std::vector<std::size_t> tie_sizes;
    bool has_ties = false;
    detail::pooled_midranks(a, b, ranks_a, tie_sizes, has_ties);
    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());
    double rank_sum = 0.0;
    for (double r : ranks_a) rank_sum += r;
    const double u = rank_sum - n_a * (n_a + 1.0) / 2.0;

    TestResult r;
    r.statistic = u;
    if (!has_ties && n_a * n_b <= 400.0) {
        r.test_name = "mann_whitney_exact";
        const long long u_int = std::llround(u);  // no ties, so U is integral
        const double lower = detail::mann_whitney_exact_cdf(a.size(), b.size(), u_int);
        const double upper = 1.0 - detail::mann_whitney_exact_cdf(a.size(), b.size(), u_int - 1);
        r.p_value = std::min(1.0, 2.0 * std::min(lower, upper));
        return r;
    }

    r.test_name = "mann_whitney_normal";
    const double n = n_a + n_b;
    double tie_term = 0.0;
    for (std::size_t t : tie_sizes) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double mu = n_a * n_b / 2.0;
    const double var = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (var <= 0) {
        r.degenerate = true;
        r.p_value = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::fabs(u - mu) - 0.5) / std::sqrt(var);
    r.p_value = std::erfc(z / std::sqrt(2.0));
    return r;
}

// Ordinary least squares y = slope*x + intercept; params = [slope, intercept].
inline RegressionFit fit_linear(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw std::runtime_error("fit_linear: need n >= 2 matched points");
    const double n = static_cast<double>(xs.size());
    const double mx = detail::sample_mean(xs), my = detail::sample_mean(ys);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0) throw std::runtime_error("fit_linear: xs are all equal");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double resid = ys[i] - (slope * xs[i] + intercept);
        ss_res += resid * resid;
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    RegressionFit fit;
    fit.model_name = "linear";
    fit.params = {slope, intercept};
    fit.r_square = ss_tot == 0 ? (ss_res <= 1e-24 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    (void)n;
    return fit;
}

// Least squares y = c2*x^2 + c1*x + c0; params = [c2, c1, c0].
inline RegressionFit fit_quadratic(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3) throw std::runtime_error("fit_quadratic: need n >= 3 matched points");
    // 3x3 normal equations, solved by Gaussian elimination with partial pivoting
    long double A[3][3] = {{0}};
    long double rhs[3] = {0};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const long double x = xs[i];
        const long double basis[3] = {x * x, x, 1.0L};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) A[r][c] += basis[r] * basis[c];
            rhs[r] += basis[r] * static_cast<long double>(ys[i]);
        }
    }
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::fabs(static_cast<double>(A[perm[r]][col])) > std::fabs(static_cast<double>(A[perm[pivot]][col]))) {
                pivot = r;
            }
        }
        std::swap(perm[col], perm[pivot]);
        if (A[perm[col]][col] == 0) throw std::runtime_error("fit_quadratic: singular system (degenerate xs)");
        for (int r = col + 1; r < 3; ++r) {
            const long double f = A[perm[r]][col] / A[perm[col]][col];
            for (int c = col; c < 3; ++c) A[perm[r]][c] -= f * A[perm[col]][c];
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    long double sol[3];
    for (int r = 2; r >= 0; --r) {
        long double s = rhs[perm[r]];
        for (int c = r + 1; c < 3; ++c) s -= A[perm[r]][c] * sol[c];
        sol[r] = s / A[perm[r]][r];
    }
    RegressionFit fit;
    fit.model_name = "quadratic";
    fit.params = {static_cast<double>(sol[0]), static_cast<double>(sol[1]), static_cast<double>(sol[2])};
    const double my = detail::sample_mean(ys);
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = fit.params[0] * xs[i] * xs[i] + fit.params[1] * xs[i] + fit.params[2];
        ss_res += (ys[i] - pred) * (ys[i] - pred);
        ss_tot += (ys[i] - my) * (ys[i] - my);
    }
    fit.r_square = ss_tot == 0 ? (ss_res <= 1e-24 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
    return fit;
}

namespace detail {

// For fixed decay rate b, the optimal (a, c) of y = a*exp(-b*x) + c solve a
// two-basis linear least squares; returns the residual sum of squares.
inline double exp_profile_sse(const std::vector<double>& xs, const std::vector<double>& ys, double b, double& a_out,
                              double& c_out) {
    const std::size_t n = xs.size();
    double see = 0, se = 0, sy = 0, sey = 0;
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(-b * xs[i]);
        see += e[i] * e[i];
        se += e[i];
        sy += ys[i];
        sey += e[i] * ys[i];
    }
    const double nd = static_cast<double>(n);
    const double det = see * nd - se * se;
    double a, c;
    if (std::fabs(det) < 1e-14 * std::max(1.0, see * nd)) {
        // exp basis is (numerically) constant: fall back to pure offset
        a = 0.0;
        c = sy / nd;
    } else {
        a = (sey * nd - se * sy) / det;
        c = (see * sy - se * sey) / det;
    }
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = ys[i] - (a * e[i] + c);
        sse += resid * resid;
    }
    a_out = a;
    c_out = c;
    return sse;
}

}  // namespace detail

// Fits y = a*exp(-b*x) + c with b >= 0. Initial (a, b) come from a linear
// regression of ln(y - c) on x over a grid of offsets c below min(y); the best
// start is then refined by golden-section search on the profiled objective
// until the relative change drops under 1e-9. params = [a, b, c].
inline RegressionFit fit_exponential(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 4) {
        throw std::runtime_error("fit_exponential: need n >= 4 matched points");
    }
    const double y_min = *std::min_element(ys.begin(), ys.end());
    const double y_max = *std::max_element(ys.begin(), ys.end());
    const double range = y_max - y_min;

    RegressionFit fit;
    fit.model_name = "exponential";
    if (range == 0) {
        // constant data: already converged, decay rate pinned at zero
        fit.params = {0.0, 0.0, y_min};
        fit.r_square = 1.0;
        return fit;
    }

    static const double kGrid[] = {1e-9, 1e-6, 1e-4, 1e-3, 0.01, 0.03, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
    double best_b = -1, best_sse = std::numeric_limits<double>::infinity();
    for (double g : kGrid) {
        const double c = y_min - range * g;
        std::vector<double> logs(ys.size());
        bool ok = true;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double diff = ys[i] - c;
            if (!(diff > 0) || !std::isfinite(diff)) {
                ok = false;
                break;
            }
            logs[i] = std::log(diff);
        }
        if (!ok) continue;
        RegressionFit lin;
        try {
            lin = fit_linear(xs, logs);
        } catch (const std::exception&) {
            continue;
        }
        const double b = std::max(0.0, -lin.params[0]);
        double a, c_ls;
        const double sse = detail::exp_profile_sse(xs, ys, b, a, c_ls);
        if (sse < best_sse) {
            best_sse = sse;
            best_b = b;
        }
    }
    if (best_b < 0) throw std::runtime_error("fit_exponential: no admissible offset; data not decay-shaped");

    // golden-section on b over an expanding bracket around the grid winner
    double lo = 0.0;
    double hi = best_b > 0 ? best_b * 4.0 : 1.0;
    double a_hi, c_hi;
    while (detail::exp_profile_sse(xs, ys, hi, a_hi, c_hi) < best_sse && hi < 1e8) hi *= 2.0;
    constexpr double kGolden = 0.6180339887498949;
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double a_tmp, c_tmp;
    double f1 = detail::exp_profile_sse(xs, ys, x1, a_tmp, c_tmp);
    double f2 = detail::exp_profile_sse(xs, ys, x2, a_tmp, c_tmp);
    double prev = std::min(f1, f2);
    for (int it = 0; it < 300; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = detail::exp_profile_sse(xs, ys, x1, a_tmp, c_tmp);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = detail::exp_profile_sse(xs, ys, x2, a_tmp, c_tmp);
        }
        const double cur = std::min(f1, f2);
        if (it > 20 && std::fabs(prev - cur) <= 1e-9 * std::max(1e-300, prev) && hi - lo < 1e-12 * std::max(1.0, hi)) {
            break;
        }
        prev = cur;
    }
    const double b = 0.5 * (lo + hi);
    double a, c;
    const double sse = detail::exp_profile_sse(xs, ys, b, a, c);

    fit.params = {a, b, c};
    const double my = detail::sample_mean(ys);
    double ss_tot = 0;
    for (double y : ys) ss_tot += (y - my) * (y - my);
    fit.r_square = ss_tot == 0 ? (sse <= 1e-24 ? 1.0 : 0.0) : 1.0 - sse / ss_tot;
    return fit;
}

}  // namespace evogen::stats
