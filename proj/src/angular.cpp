#include "quadcool/angular.hpp"

#include <array>
#include <cmath>

namespace quadcool {

namespace {

// factorials up to 40! cover any (j1+j2+J+1) reachable with our level scheme
constexpr int kMaxFact = 40;

const std::array<double, kMaxFact + 1>& fact_table() {
    static const auto table = [] {
        std::array<double, kMaxFact + 1> t{};
        t[0] = 1.0;
        for (int i = 1; i <= kMaxFact; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    return table;
}

// factorial of a doubled-integer argument that must be a whole number >= 0
double fact2(int two_n) {
    if (two_n < 0 || two_n % 2 != 0) return -1.0;  // caller checks
    return fact_table()[two_n / 2];
}

}  // namespace

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2,
                      int two_J, int two_M) {
    if (two_m1 + two_m2 != two_M) return 0.0;
    if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 ||
        std::abs(two_M) > two_J)
        return 0.0;
    if (two_J < std::abs(two_j1 - two_j2) || two_J > two_j1 + two_j2) return 0.0;
    // j1+j2+J must be integral, and each (j±m) must be integral
    if ((two_j1 + two_j2 + two_J) % 2 != 0) return 0.0;
    if ((two_j1 + two_m1) % 2 != 0 || (two_j2 + two_m2) % 2 != 0) return 0.0;

    // Racah's closed form; all factorial arguments below are whole numbers.
    const double d1 = fact2(two_j1 + two_j2 - two_J);
    const double d2 = fact2(two_j1 - two_j2 + two_J);
    const double d3 = fact2(-two_j1 + two_j2 + two_J);
    const double d4 = fact2(two_j1 + two_j2 + two_J + 2);
    const double pref1 = (two_J + 1.0) * d1 * d2 * d3 / d4;

    const double pref2 = fact2(two_J + two_M) * fact2(two_J - two_M) *
                         fact2(two_j1 - two_m1) * fact2(two_j1 + two_m1) *
                         fact2(two_j2 - two_m2) * fact2(two_j2 + two_m2);

    double sum = 0.0;
    // summation index k runs over all values keeping factorial args >= 0
    for (int two_k = 0; two_k <= two_j1 + two_j2 - two_J; two_k += 2) {
        const int a1 = two_j1 + two_j2 - two_J - two_k;
        const int a2 = two_j1 - two_m1 - two_k;
        const int a3 = two_j2 + two_m2 - two_k;
        const int a4 = two_J - two_j2 + two_m1 + two_k;
        const int a5 = two_J - two_j1 - two_m2 + two_k;
        if (a1 < 0 || a2 < 0 || a3 < 0 || a4 < 0 || a5 < 0) continue;
        const double denom = fact2(two_k) * fact2(a1) * fact2(a2) * fact2(a3) *
                             fact2(a4) * fact2(a5);
        const double sign = (two_k / 2) % 2 == 0 ? 1.0 : -1.0;
        sum += sign / denom;
    }
    return std::sqrt(pref1 * pref2) * sum;
}

}  // namespace quadcool
