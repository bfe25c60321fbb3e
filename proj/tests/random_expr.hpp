#pragma once

// Random expression text over x1, x2, t, restricted to operations that stay
// finite on [-1, 1]^3 so derivatives can be compared against differences.

#include <random>
#include <string>

#include <fmt/format.h>

namespace testing {

inline std::string random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 11);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const char* vars[] = {"x1", "x2", "t"};
    if (depth == 0) {
        const int k = pick(rng) % 4;
        if (k == 3) return fmt::format("{:.3f}", coef(rng));
        return vars[k];
    }
    const std::string a = random_expr(rng, depth - 1);
    switch (pick(rng)) {
        case 0: return "sin(" + a + ")";
        case 1: return "cos(" + a + ")";
        case 2: return "tanh(" + a + ")";
        case 3: return "exp(0.5*sin(" + a + "))";
        case 4: return "ln(1.5 + cos(" + a + "))";
        case 5: return "sqrt(2 + sin(" + a + "))";
        case 6: return "(" + a + ")^" + std::to_string(2 + static_cast<int>(rng() % 2));
        case 7: return "-(" + a + ")";
        case 8: return "(" + a + ") + (" + random_expr(rng, depth - 1) + ")";
        case 9: return "(" + a + ") - (" + random_expr(rng, depth - 1) + ")";
        case 10: return "(" + a + ")*(" + random_expr(rng, depth - 1) + ")";
        default: return "(" + a + ")/(2.5 + cos(" + random_expr(rng, depth - 1) + "))";
    }
}

}  // namespace testing

#include <cmath>
#include <functional>
#include <limits>

namespace testing {

/// Ridders' extrapolated central difference; returns the estimate with the
/// smallest error estimate over a few starting steps.
inline double ridders(const std::function<double(double)>& f, double x, double* err_out = nullptr) {
    constexpr int kN = 10;
    constexpr double kCon = 1.4, kCon2 = kCon * kCon;
    double best = 0.0, best_err = std::numeric_limits<double>::infinity();
    for (double h0 : {1e-2, 1e-3, 1e-4, 1e-5}) {
        double a[kN][kN];
        double h = h0, run = 0.0, run_err = std::numeric_limits<double>::infinity();
        a[0][0] = (f(x + h) - f(x - h)) / (2 * h);
        for (int i = 1; i < kN; ++i) {
            h /= kCon;
            a[0][i] = (f(x + h) - f(x - h)) / (2 * h);
            double fac = kCon2;
            for (int j = 1; j <= i; ++j) {
                a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1);
                fac *= kCon2;
                const double e = std::max(std::abs(a[j][i] - a[j - 1][i]),
                                          std::abs(a[j][i] - a[j - 1][i - 1]));
                if (e <= run_err) {
                    run_err = e;
                    run = a[j][i];
                }
            }
            if (std::abs(a[i][i] - a[i - 1][i - 1]) >= 2 * run_err) break;
        }
        if (run_err < best_err) {
            best_err = run_err;
            best = run;
        }
    }
    if (err_out) *err_out = best_err;
    return best;
}

}  // namespace testing
