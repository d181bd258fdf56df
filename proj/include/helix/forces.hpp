#ifndef HELIX_FORCES_HPP
#define HELIX_FORCES_HPP

// Potential energy and forces of N ions on a ring: isotropic transverse
// harmonic trap plus unscreened Coulomb repulsion, periodic in x under the
// minimal-image convention. All pairs are summed directly.

#include <helix/chain_state.hpp>
#include <helix/errors.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace helix
{

struct force_field
{
    double nu_t = 1.0;       // transverse trap frequency
    double box_length = 1.0; // ring circumference C

    void validate() const
    {
        if(!(nu_t > 0.0)) throw domain_error("force_field: nu_t must be > 0");
        if(!(box_length > 0.0)) throw domain_error("force_field: box_length must be > 0");
    }
};

inline double minimal_image(double dx, double box_length)
{
    return dx - box_length * std::round(dx / box_length);
}

inline double pair_distance(vec3 ri, vec3 rj, double box_length)
{
    if(!(box_length > 0.0)) throw domain_error("pair_distance: box_length must be > 0");
    const double dx = minimal_image(rj.x - ri.x, box_length);
    const double dy = rj.y - ri.y;
    const double dz = rj.z - ri.z;
    const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
    if(d == 0.0) throw singularity_error("pair_distance: coincident ions");
    return d;
}

inline double potential_energy(const chain_state& state, const force_field& field)
{
    const auto& r = state.positions;
    const std::size_t n = r.size();
    double trap = 0.0;
    for(const auto& p : r) trap += p.y * p.y + p.z * p.z;

    double coulomb = 0.0;
    for(std::size_t i = 0; i < n; ++i)
    {
        for(std::size_t j = i + 1; j < n; ++j)
        {
            coulomb += 1.0 / pair_distance(r[i], r[j], field.box_length);
        }
    }
    return 0.5 * field.nu_t * field.nu_t * trap + coulomb;
}

// Reusable structure-of-arrays workspace for the O(N^2) force sum. Pairs are
// visited in a fixed order (row i, then j > i), so results are bitwise
// reproducible for a given input and build. Arrays are padded to whole SIMD
// blocks and every row starts on a block boundary; lanes outside j > i carry
// zero weight, so no scalar remainder loop is ever executed.
class coulomb_kernel
{
public:
    static constexpr std::size_t block = 8;

    // Writes the Coulomb part of -grad V into forces (size N); the trap term
    // is left to the caller.
    void compute(const chain_state& state, double box_length, std::span<vec3> forces)
    {
        const std::size_t n = state.positions.size();
        if(forces.size() != n) throw domain_error("coulomb_kernel: force buffer size mismatch");
        load(state);

        const double box = box_length;
        const double inv_box = 1.0 / box_length;
        const std::size_t padded = x_.size();
        fx_.assign(padded, 0.0);
        fy_.assign(padded, 0.0);
        fz_.assign(padded, 0.0);
        double min_r2 = std::numeric_limits<double>::infinity();
        for(std::size_t i = 0; i + 1 < n; ++i)
        {
            row(i, padded, box, inv_box, min_r2);
        }
        for(std::size_t j = 0; j < n; ++j)
        {
            forces[j] = {fx_[j], fy_[j], fz_[j]};
        }
        if(n > 1 && !(min_r2 > 0.0))
        {
            throw singularity_error("coulomb_kernel: coincident ions");
        }
    }

private:
    // Pairs (i, j > i): the row sum goes to ion i, the reaction to each j.
    [[gnu::noinline]] void row(std::size_t i, std::size_t padded, double box, double inv_box, double& min_r2)
    {
        const double* x = x_.data();
        const double* y = y_.data();
        const double* z = z_.data();
        const double* w = weight_.data();
        double* gx = fx_.data();
        double* gy = fy_.data();
        double* gz = fz_.data();
        const double xi = x[i];
        const double yi = y[i];
        const double zi = z[i];
        double sx = 0.0, sy = 0.0, sz = 0.0, mr = min_r2;
        const std::size_t start = (i + 1) / block * block;
#pragma omp simd reduction(+ : sx, sy, sz) reduction(min : mr)
        for(std::size_t j = start; j < padded; ++j)
        {
            const double dead = j > i ? 0.0 : 1.0;
            double dx = xi - x[j];
            dx -= box * std::nearbyint(dx * inv_box);
            const double dy = yi - y[j];
            const double dz = zi - z[j];
            const double r2 = dx * dx + dy * dy + dz * dz;
            const double r2_live = r2 + dead * 1e300;
            mr = r2_live < mr ? r2_live : mr;
            const double inv_r = 1.0 / std::sqrt(r2 + dead);
            const double inv_r3 = (1.0 - dead) * w[j] * inv_r * inv_r * inv_r;
            // An ion exactly half a box away is seen through both images;
            // their x pulls cancel.
            const double px = (2.0 * std::abs(dx) == box ? 0.0 : dx) * inv_r3;
            const double py = dy * inv_r3;
            const double pz = dz * inv_r3;
            sx += px;
            sy += py;
            sz += pz;
            gx[j] -= px;
            gy[j] -= py;
            gz[j] -= pz;
        }
        gx[i] += sx;
        gy[i] += sy;
        gz[i] += sz;
        min_r2 = mr;
    }

    // Padding ions sit far off axis with zero weight.
    void load(const chain_state& state)
    {
        const std::size_t n = state.positions.size();
        const std::size_t padded = (n + block - 1) / block * block;
        x_.assign(padded, 0.0);
        y_.assign(padded, 1e100);
        z_.assign(padded, 0.0);
        weight_.assign(padded, 0.0);
        for(std::size_t j = 0; j < n; ++j)
        {
            x_[j] = state.positions[j].x;
            y_[j] = state.positions[j].y;
            z_[j] = state.positions[j].z;
            weight_[j] = 1.0;
        }
    }

    std::vector<double> x_, y_, z_, weight_;
    std::vector<double> fx_, fy_, fz_;
};

inline void add_trap_forces(const chain_state& state, double nu_t, std::span<vec3> forces)
{
    const double nu2 = nu_t * nu_t;
    for(std::size_t j = 0; j < forces.size(); ++j)
    {
        forces[j].y -= nu2 * state.positions[j].y;
        forces[j].z -= nu2 * state.positions[j].z;
    }
}

inline std::vector<vec3> total_forces(const chain_state& state, const force_field& field)
{
    std::vector<vec3> f(state.positions.size());
    coulomb_kernel kernel;
    kernel.compute(state, field.box_length, f);
    add_trap_forces(state, field.nu_t, f);
    return f;
}

} // namespace helix

#endif // HELIX_FORCES_HPP
