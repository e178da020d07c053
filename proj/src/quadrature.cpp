#include "segregate/quadrature.hpp"

#include "segregate/error.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>

namespace segregate {

namespace {

template <int N>
GaussRule make_rule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& a = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        r.x.push_back(a[i]);
        r.w.push_back(w[i]);
        if (a[i] != 0.0) {
            r.x.push_back(-a[i]);
            r.w.push_back(w[i]);
        }
    }
    return r;
}

}  // namespace

const GaussRule& gauss_rule(int order)
{
    static const GaussRule r4 = make_rule<4>(), r6 = make_rule<6>(), r8 = make_rule<8>(),
                           r10 = make_rule<10>(), r12 = make_rule<12>(), r16 = make_rule<16>();
    switch (order) {
    case 4: return r4;
    case 6: return r6;
    case 8: return r8;
    case 10: return r10;
    case 12: return r12;
    case 16: return r16;
    default: throw Error(ErrorKind::InvalidArgument, "unsupported Gauss-Legendre order");
    }
}

std::vector<double> composite_nodes(double a, double b, double width, const GaussRule& r,
                                    std::vector<double>& wts)
{
    int m = std::max(1, static_cast<int>(std::ceil((b - a) / width - 1e-9)));
    double h = (b - a) / m;
    std::vector<double> x;
    wts.clear();
    for (int p = 0; p < m; ++p) {
        double mid = a + (p + 0.5) * h;
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            x.push_back(mid + 0.5 * h * r.x[i]);
            wts.push_back(0.5 * h * r.w[i]);
        }
    }
    return x;
}

}  // namespace segregate
