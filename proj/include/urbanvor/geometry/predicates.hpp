#pragma once

#include "urbanvor/geometry/types.hpp"

#include <cmath>
#include <limits>
#include <vector>

// Orientation and in-circle tests with a floating-point filter and an exact
// fallback built on floating-point expansions (sums of non-overlapping
// doubles). The filter bounds are Shewchuk's "A" bounds; when the filter
// cannot certify the sign, the determinant is evaluated exactly from the
// untranslated coordinates, so the answer is correct for every finite input
// that does not overflow.

namespace urbanvor::geometry {

enum class Orientation { CW = -1, Collinear = 0, CCW = 1 };
enum class CirclePosition { Outside = -1, On = 0, Inside = 1 };

namespace detail {

inline constexpr double kEpsilon = std::numeric_limits<double>::epsilon() / 2; // 2^-53
inline constexpr double kOrientBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
inline constexpr double kInCircleBound = (10.0 + 96.0 * kEpsilon) * kEpsilon;

struct TwoTerm
{
    double hi;
    double lo;
};

inline TwoTerm two_sum(double a, double b)
{
    const double x = a + b;
    const double b_virtual = x - a;
    const double a_virtual = x - b_virtual;
    return {x, (a - a_virtual) + (b - b_virtual)};
}

inline TwoTerm fast_two_sum(double a, double b)
{
    const double x = a + b;
    return {x, b - (x - a)};
}

inline TwoTerm two_product(double a, double b)
{
    const double x = a * b;
    return {x, std::fma(a, b, -x)};
}

/// Non-overlapping expansion, components ordered by increasing magnitude,
/// zeros eliminated. The value is the exact sum of the components.
using Expansion = std::vector<double>;

inline Expansion grow(const Expansion& e, double b)
{
    Expansion h;
    h.reserve(e.size() + 1);
    double q = b;
    for(const double component : e)
    {
        const TwoTerm s = two_sum(q, component);
        q = s.hi;
        if(s.lo != 0.0)
            h.push_back(s.lo);
    }
    if(q != 0.0)
        h.push_back(q);
    return h;
}

inline Expansion sum(const Expansion& e, const Expansion& f)
{
    Expansion h = e;
    for(const double component : f)
        h = grow(h, component);
    return h;
}

inline Expansion scale(const Expansion& e, double b)
{
    Expansion h;
    if(e.empty() || b == 0.0)
        return h;
    h.reserve(2 * e.size());
    TwoTerm p = two_product(e[0], b);
    double q = p.hi;
    if(p.lo != 0.0)
        h.push_back(p.lo);
    for(std::size_t i = 1; i < e.size(); ++i)
    {
        const TwoTerm t = two_product(e[i], b);
        const TwoTerm s = two_sum(q, t.lo);
        if(s.lo != 0.0)
            h.push_back(s.lo);
        const TwoTerm f = fast_two_sum(t.hi, s.hi);
        q = f.hi;
        if(f.lo != 0.0)
            h.push_back(f.lo);
    }
    if(q != 0.0)
        h.push_back(q);
    return h;
}

inline Expansion product(const Expansion& e, const Expansion& f)
{
    Expansion h;
    for(const double component : f)
        h = sum(h, scale(e, component));
    return h;
}

inline Expansion negate(Expansion e)
{
    for(double& component : e)
        component = -component;
    return e;
}

inline int sign(const Expansion& e)
{
    if(e.empty())
        return 0;
    return e.back() > 0.0 ? 1 : -1;
}

inline Expansion from_two(TwoTerm t)
{
    Expansion e;
    if(t.lo != 0.0)
        e.push_back(t.lo);
    if(t.hi != 0.0)
        e.push_back(t.hi);
    return e;
}

/// Exact p.x * q.y - p.y * q.x.
inline Expansion cross_exact(Point2 p, Point2 q)
{
    return sum(from_two(two_product(p.x, q.y)), negate(from_two(two_product(p.y, q.x))));
}

/// Exact p.x^2 + p.y^2.
inline Expansion lift_exact(Point2 p)
{
    return sum(from_two(two_product(p.x, p.x)), from_two(two_product(p.y, p.y)));
}

inline int orient2d_exact(Point2 a, Point2 b, Point2 c)
{
    // a x b + b x c + c x a
    return sign(sum(sum(cross_exact(a, b), cross_exact(b, c)), cross_exact(c, a)));
}

/// Exact 3x3 determinant |p lift(p); q lift(q); r lift(r)| with columns
/// (x, y, x^2 + y^2), expanded along the lift column.
inline Expansion lifted_minor(Point2 p, Point2 q, Point2 r)
{
    const Expansion t0 = product(lift_exact(p), cross_exact(q, r));
    const Expansion t1 = product(lift_exact(q), cross_exact(p, r));
    const Expansion t2 = product(lift_exact(r), cross_exact(p, q));
    return sum(sum(t0, negate(t1)), t2);
}

inline int incircle_exact(Point2 a, Point2 b, Point2 c, Point2 d)
{
    // 4x4 determinant with rows (x, y, x^2 + y^2, 1), cofactor expansion
    // along the constant column.
    Expansion det = negate(lifted_minor(b, c, d));
    det = sum(det, lifted_minor(a, c, d));
    det = sum(det, negate(lifted_minor(a, b, d)));
    det = sum(det, lifted_minor(a, b, c));
    return sign(det);
}

} // namespace detail

/// Sign of the signed area of triangle abc.
inline Orientation orient2d(Point2 a, Point2 b, Point2 c)
{
    const double det_left = (a.x - c.x) * (b.y - c.y);
    const double det_right = (a.y - c.y) * (b.x - c.x);
    const double det = det_left - det_right;
    const double bound = detail::kOrientBound * (std::abs(det_left) + std::abs(det_right));
    int s;
    if(det > bound)
        s = 1;
    else if(-det > bound)
        s = -1;
    else
        s = detail::orient2d_exact(a, b, c);
    return static_cast<Orientation>(s);
}

/// Position of d relative to the circle through a, b, c, which must be CCW.
inline CirclePosition incircle(Point2 a, Point2 b, Point2 c, Point2 d)
{
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy)
                       + clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift
                             + (std::abs(cdxady) + std::abs(adxcdy)) * blift
                             + (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    const double bound = detail::kInCircleBound * permanent;
    int s;
    if(det > bound)
        s = 1;
    else if(-det > bound)
        s = -1;
    else
        s = detail::incircle_exact(a, b, c, d);
    return static_cast<CirclePosition>(s);
}

} // namespace urbanvor::geometry
