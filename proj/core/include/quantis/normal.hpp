#ifndef QUANTIS_NORMAL_HPP
#define QUANTIS_NORMAL_HPP

namespace quantis {

// Standard normal density.
double norm_pdf(double x);

// Standard normal distribution function, computed as erfc(-x/sqrt(2))/2.
// glibc's erfc is accurate to a few ulp, so the absolute error is far below
// the 1e-12 this library requires of its normal primitives.
double norm_cdf(double x);

// Inverse of norm_cdf via Wichura's PPND16 rational approximation
// (algorithm AS 241), absolute error below 1e-15 over p in (0, 1).
// Returns -inf / +inf at p = 0 / 1; p outside [0, 1] is a domain error.
double norm_inv_cdf(double p);

}  // namespace quantis

#endif
