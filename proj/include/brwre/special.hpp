#pragma once

namespace brwre {

// Regularized lower incomplete gamma P(a, x); series for x < a+1, continued
// fraction otherwise.
double gamma_p(double a, double x);

// Survival function of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, int df);

// Asymptotic Kolmogorov survival Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_sf(double lambda);

}  // namespace brwre
