#ifndef HELIX_CHAIN_STATE_HPP
#define HELIX_CHAIN_STATE_HPP

#include <helix/errors.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

namespace helix
{

struct vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend vec3 operator+(vec3 a, vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend vec3 operator-(vec3 a, vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend vec3 operator*(double s, vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    vec3& operator+=(vec3 o) { x += o.x; y += o.y; z += o.z; return *this; }
    friend bool operator==(const vec3&, const vec3&) = default;
};

inline double norm(vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

// Wrap a longitudinal coordinate into [0, box_length).
inline double wrap_x(double x, double box_length)
{
    double w = x - box_length * std::floor(x / box_length);
    if(w >= box_length) w -= box_length; // floor rounding at the upper edge
    return w;
}

// Ions on a ring of circumference box_length, periodic in x only.
struct chain_state
{
    double time = 0.0;
    double box_length = 0.0;
    std::vector<vec3> positions;
    std::vector<vec3> velocities;

    std::size_t size() const { return positions.size(); }

    bool operator==(const chain_state&) const = default;
};

// n ions equally spaced on the axis, at rest; spacing box_length / n.
inline chain_state linear_chain(std::size_t n, double box_length)
{
    chain_state s;
    s.box_length = box_length;
    s.positions.resize(n);
    s.velocities.assign(n, vec3{});
    const double a = box_length / static_cast<double>(n);
    for(std::size_t j = 0; j < n; ++j)
    {
        s.positions[j] = {a * static_cast<double>(j), 0.0, 0.0};
    }
    return s;
}

} // namespace helix

#endif // HELIX_CHAIN_STATE_HPP
