#pragma once

// Fixed reference values computed outside this code base.

namespace puda::testing {

// scipy.stats.ttest_ind_from_stats(..., equal_var=False) p-values.
struct WelchCase {
  double ma, sa;
  int na;
  double mb, sb;
  int nb;
  double p;
};

inline constexpr WelchCase kWelch[] = {
    {0.9, 0.02, 10, 0.88, 0.03, 12, 0.0775464386820584},
    {97.48, 0.5, 20, 96.9, 1.2, 20, 0.056844536447840675},
    {0.8, 0.1, 5, 0.6, 0.05, 7, 0.007671075054090349},
    {10.0, 1.0, 2, 12.0, 3.0, 3, 0.3747771172209172},
    {0.5, 0.0, 4, 0.55, 0.01, 4, 0.0021283990584141455},
};

// scipy.stats.ttest_ind(a, b, equal_var=False) on raw samples.
inline constexpr double kWelchSampleA[] = {0.91, 0.93, 0.90, 0.95, 0.92};
inline constexpr double kWelchSampleB[] = {0.88, 0.90, 0.86, 0.91, 0.89, 0.87};
inline constexpr double kWelchSampleP = 0.011285189281868748;

// Two-sided t quantile t_{0.975, 8}.
inline constexpr double kT975Df8 = 2.306004135;

}  // namespace puda::testing
