#pragma once

namespace slotcast {

double ln_gamma(double x);

// Regularized incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

// Upper tail of the chi-squared distribution with k degrees of freedom.
double chi_squared_sf(double x, double k);

// Two-sided p-value for a Student-t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Upper tail of the F distribution.
double f_sf(double f, double d1, double d2);

} // namespace slotcast
