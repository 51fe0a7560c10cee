#pragma once

// Angular-momentum coupling coefficients. Half-integer quantum numbers are
// passed as doubled integers (two_j = 2j) so everything stays exact.

namespace quadcool {

// <j1 m1; j2 m2 | J M>, Condon-Shortley phase. Returns 0 for forbidden
// combinations (M != m1+m2, triangle violation, |m|>j).
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2,
                      int two_J, int two_M);

inline double clebsch_gordan_sq(int two_j1, int two_m1, int two_j2, int two_m2,
                                int two_J, int two_M) {
    double c = clebsch_gordan(two_j1, two_m1, two_j2, two_m2, two_J, two_M);
    return c * c;
}

}  // namespace quadcool
