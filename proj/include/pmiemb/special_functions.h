// Normal distribution and incomplete beta function.

#ifndef PMIEMB_SPECIAL_FUNCTIONS_H_
#define PMIEMB_SPECIAL_FUNCTIONS_H_

namespace pmiemb {

// Standard normal CDF and upper tail, via erfc (full relative precision in
// both tails).
double normal_cdf(double x);
double normal_upper_tail(double x);

// Inverse standard normal CDF for p in (0, 1).
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0, 1]. Continued
// fraction (modified Lentz) with the symmetry switch at x > (a+1)/(a+b+2).
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace pmiemb

#endif  // PMIEMB_SPECIAL_FUNCTIONS_H_
