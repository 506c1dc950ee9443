#pragma once

namespace haibench {

double normal_pdf(double x);
double normal_cdf(double x);

// Inverse standard-normal CDF (the z-score of a probability). Acklam's
// rational approximation followed by one Halley refinement step; absolute
// error below 1e-9 on (0.001, 0.999). Throws Undefined outside (0, 1).
double normal_quantile(double p);

}  // namespace haibench
