#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace skewnet
{
    struct Summary
    {
        std::size_t n = 0;
        double mean = 0.0;
        double sd = 0.0;        // sample standard deviation, 0 when n < 2
        double std_error = 0.0; // sd / sqrt(n)
    };

    Summary summarize(std::span<const double> xs);

    // Two-sided confidence half-width for the mean at the given level, Student t with n-1 dof.
    double t_half_width(const Summary &s, double level);

    // Upper tail P(X >= stat) for a chi-square law with `dof` degrees of freedom.
    double chi_square_sf(double stat, double dof);

    // Pearson chi-square goodness-of-fit p-value of observed counts against equal expected cells.
    double chi_square_uniform_pvalue(std::span<const std::uint64_t> counts);

    // Spearman rank correlation with average ranks for ties.
    double spearman_rho(std::span<const double> x, std::span<const double> y);

    double median(std::vector<double> xs);

    // Shortest decimal form that parses back to the same double; "nan", "inf", "-inf" otherwise.
    std::string format_double(double x);
}
