#pragma once

// Color maps for layers: the blue-to-red hue ramp, the five valence classes
// and the single-hue dark ramp used by grid heat maps.

#include "urbanvor/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace urbanvor::render {

struct Color
{
    std::uint8_t r = 0, g = 0, b = 0;

    bool operator==(const Color&) const = default;

    std::string hex() const
    {
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
        return buf;
    }
};

namespace detail {

inline std::uint8_t channel(double v)
{
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace detail

/// HSV with hue in degrees [0, 360), s and v in [0, 1].
inline Color hsv_to_rgb(double hue, double s, double v)
{
    hue = std::fmod(hue, 360.0);
    if(hue < 0)
        hue += 360.0;
    const double c = v * s;
    const double h = hue / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch(static_cast<int>(h))
    {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
    }
    const double m = v - c;
    return {detail::channel(r + m), detail::channel(g + m), detail::channel(b + m)};
}

/// HSL with hue in degrees, s and l in [0, 1].
inline Color hsl_to_rgb(double hue, double s, double l)
{
    const double c = (1.0 - std::abs(2.0 * l - 1.0)) * s;
    const double v = l + c / 2.0;
    const double sv = v > 0 ? c / v : 0.0;
    return hsv_to_rgb(hue, sv, v);
}

struct LinearColorMap
{
    static constexpr double kHueStart = 240.0;
    static constexpr double kHueEnd = 0.0;
    static constexpr double kSaturation = 0.9;
    static constexpr double kValue = 0.9;

    double vmin = 0.0;
    double vmax = 1.0;

    /// vmin > vmax or a non-finite bound is DegenerateRange. vmin == vmax is
    /// allowed and maps everything to the midpoint hue.
    static LinearColorMap make(double vmin, double vmax)
    {
        if(!std::isfinite(vmin) || !std::isfinite(vmax) || vmin > vmax)
            throw Error(Errc::DegenerateRange, "color range must satisfy vmin <= vmax");
        return {vmin, vmax};
    }

    double hue(double v) const
    {
        if(!(vmax > vmin))
            return 120.0;
        const double t = (std::clamp(v, vmin, vmax) - vmin) / (vmax - vmin);
        return kHueStart * (1.0 - t);
    }
};

inline Color map_color(double v, const LinearColorMap& cmap)
{
    return hsv_to_rgb(cmap.hue(v), LinearColorMap::kSaturation, LinearColorMap::kValue);
}

/// Valence classes 1..5, very negative to very positive.
struct ValencePalette
{
    static constexpr std::array<Color, 5> kColors = {{
        {0xFF, 0x00, 0x00}, // red
        {0xFF, 0x45, 0x00}, // orange-red
        {0xFF, 0xD7, 0x00}, // yellow
        {0x9A, 0xCD, 0x32}, // yellow-green
        {0x00, 0x80, 0x00}, // green
    }};

    static Color color(int valence_class)
    {
        if(valence_class < 1 || valence_class > 5)
            throw Error(Errc::InvalidArgument, "valence class must be 1..5");
        return kColors[static_cast<std::size_t>(valence_class - 1)];
    }
};

/// Purple ramp whose lightness falls linearly with the value.
struct SequentialDarkMap
{
    static constexpr double kHue = 270.0;
    static constexpr double kSaturation = 0.6;
    static constexpr double kLightest = 0.92;
    static constexpr double kDarkest = 0.22;

    double vmin = 0.0;
    double vmax = 1.0;

    double lightness(double v) const
    {
        const double t = vmax > vmin ? (std::clamp(v, vmin, vmax) - vmin) / (vmax - vmin) : 0.5;
        return kLightest - (kLightest - kDarkest) * t;
    }

    Color color(double v) const { return hsl_to_rgb(kHue, kSaturation, lightness(v)); }
};

/// Relative luminance (Rec. 709 weights over the 8-bit channels), used to
/// check darker-means-larger on quantized output.
inline double luminance(Color c)
{
    return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b;
}

} // namespace urbanvor::render
