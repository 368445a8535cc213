#include "skewnet/stats.hpp"

#include "skewnet/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace skewnet
{
    Summary summarize(std::span<const double> xs)
    {
        Summary s;
        s.n = xs.size();
        if (s.n == 0)
            return s;
        s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
        if (s.n < 2)
            return s;
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.std_error = s.sd / std::sqrt(static_cast<double>(s.n));
        return s;
    }

    double t_half_width(const Summary &s, double level)
    {
        if (s.n < 2)
            return std::numeric_limits<double>::infinity();
        if (!(level > 0.0 && level < 1.0))
            throw DomainError("confidence level must lie in (0, 1)");
        boost::math::students_t dist(static_cast<double>(s.n - 1));
        return boost::math::quantile(dist, 0.5 + level / 2.0) * s.std_error;
    }

    double chi_square_sf(double stat, double dof)
    {
        if (stat <= 0.0)
            return 1.0;
        boost::math::chi_squared dist(dof);
        return boost::math::cdf(boost::math::complement(dist, stat));
    }

    double chi_square_uniform_pvalue(std::span<const std::uint64_t> counts)
    {
        if (counts.size() < 2)
            return 1.0;
        const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
        if (total == 0.0)
            throw DomainError("chi-square test needs at least one observation");
        const double expected = total / static_cast<double>(counts.size());
        double stat = 0.0;
        for (auto c : counts)
        {
            const double diff = static_cast<double>(c) - expected;
            stat += diff * diff / expected;
        }
        return chi_square_sf(stat, static_cast<double>(counts.size() - 1));
    }

    namespace
    {
        std::vector<double> ranks(std::span<const double> x)
        {
            std::vector<std::size_t> idx(x.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
            std::vector<double> r(x.size());
            for (std::size_t i = 0; i < idx.size();)
            {
                std::size_t j = i;
                while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]])
                    ++j;
                const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
                for (std::size_t k = i; k <= j; ++k)
                    r[idx[k]] = avg;
                i = j + 1;
            }
            return r;
        }
    }

    double spearman_rho(std::span<const double> x, std::span<const double> y)
    {
        if (x.size() != y.size() || x.size() < 2)
            throw DomainError("spearman_rho needs two samples of equal size >= 2");
        const auto rx = ranks(x);
        const auto ry = ranks(y);
        const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
        const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < rx.size(); ++i)
        {
            sxy += (rx[i] - mx) * (ry[i] - my);
            sxx += (rx[i] - mx) * (rx[i] - mx);
            syy += (ry[i] - my) * (ry[i] - my);
        }
        if (sxx == 0.0 || syy == 0.0)
            return 0.0;
        return sxy / std::sqrt(sxx * syy);
    }

    double median(std::vector<double> xs)
    {
        if (xs.empty())
            throw DomainError("median of an empty sample");
        std::sort(xs.begin(), xs.end());
        const std::size_t m = xs.size() / 2;
        return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
    }

    std::string format_double(double x)
    {
        if (std::isnan(x))
            return "nan";
        if (std::isinf(x))
            return x > 0 ? "inf" : "-inf";
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, x);
        return std::string(buf, res.ptr);
    }
}
