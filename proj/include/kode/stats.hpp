#pragma once

#include <cstdint>
#include <vector>

namespace kode {

// Quantile with linear interpolation between order statistics:
// position h = (n-1)*p, value = x[floor(h)] + frac(h) * (x[floor(h)+1] - x[floor(h)]).
// Takes its argument by value and sorts the copy.
double quantile_linear(std::vector<double> values, double p);

struct BoxplotStats {
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double whisker_low = 0;   // smallest sample >= q1 - 1.5*IQR
  double whisker_high = 0;  // largest sample <= q3 + 1.5*IQR
  long outliers = 0;        // samples outside the whisker fences
};

BoxplotStats boxplot_stats(const std::vector<double>& samples);

struct PearsonResult {
  double r = 0;
  double p_value = 1;
  long m = 0;  // sample count
};

// Product-moment correlation with a two-sided p-value from the t-statistic
// t = r*sqrt((m-2)/(1-r^2)) on m-2 degrees of freedom.
PearsonResult pearson_r(const std::vector<double>& x,
                        const std::vector<double>& y);

// Permutation-test p-value for the same correlation: proportion of seeded
// shuffles of y whose |r| reaches |r_observed|, with the +1 correction.
PearsonResult pearson_r_permutation(const std::vector<double>& x,
                                    const std::vector<double>& y,
                                    long permutations, std::uint64_t seed);

// Regularized incomplete beta function I_x(a, b), continued-fraction form.
double incomplete_beta(double a, double b, double x);

}  // namespace kode
