#ifndef HELIX_STABILITY_HPP
#define HELIX_STABILITY_HPP

// Harmonic stability of a configuration: analytic Hessian of the potential
// and the transverse instability threshold of the equally spaced ring.

#include <helix/chain_state.hpp>
#include <helix/forces.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace helix
{

// 3N x 3N Hessian of potential_energy; coordinate 3j + c is component c of ion j.
inline Eigen::MatrixXd potential_hessian(const chain_state& state, const force_field& field)
{
    const std::size_t n = state.size();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(3 * n));
    const double nu2 = field.nu_t * field.nu_t;
    for(std::size_t j = 0; j < n; ++j)
    {
        h(static_cast<Eigen::Index>(3 * j + 1), static_cast<Eigen::Index>(3 * j + 1)) += nu2;
        h(static_cast<Eigen::Index>(3 * j + 2), static_cast<Eigen::Index>(3 * j + 2)) += nu2;
    }
    for(std::size_t i = 0; i < n; ++i)
    {
        for(std::size_t j = i + 1; j < n; ++j)
        {
            const vec3 a = state.positions[i];
            const vec3 b = state.positions[j];
            const double d[3] = {minimal_image(a.x - b.x, field.box_length), a.y - b.y, a.z - b.z};
            const double r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            const double r = std::sqrt(r2);
            const double inv_r5 = 1.0 / (r2 * r2 * r);
            // d^2 (1/r) / dd_p dd_q = (3 d_p d_q - r^2 delta_pq) / r^5
            for(int p = 0; p < 3; ++p)
            {
                for(int q = 0; q < 3; ++q)
                {
                    const double k = (3.0 * d[p] * d[q] - (p == q ? r2 : 0.0)) * inv_r5;
                    const auto ip = static_cast<Eigen::Index>(3 * i + p), iq = static_cast<Eigen::Index>(3 * i + q);
                    const auto jp = static_cast<Eigen::Index>(3 * j + p), jq = static_cast<Eigen::Index>(3 * j + q);
                    h(ip, iq) += k;
                    h(jp, jq) += k;
                    h(ip, jq) -= k;
                    h(jp, iq) -= k;
                }
            }
        }
    }
    return h;
}

// Smallest eigenvalue of the y-y block of the Hessian (equal to the z-z
// block for an on-axis chain).
inline double min_transverse_eigenvalue(const chain_state& state, const force_field& field)
{
    const auto full = potential_hessian(state, field);
    const auto n = static_cast<Eigen::Index>(state.size());
    Eigen::MatrixXd yy(n, n);
    for(Eigen::Index i = 0; i < n; ++i)
    {
        for(Eigen::Index j = 0; j < n; ++j) yy(i, j) = full(3 * i + 1, 3 * j + 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(yy, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

// Trap frequency at which the equally spaced on-axis ring of n ions loses
// transverse stability, located by bisection on [lo, hi].
inline double linear_chain_instability(std::size_t n, double lo = 1.0, double hi = 3.0, double tol = 1e-10)
{
    const chain_state chain = linear_chain(n, static_cast<double>(n));
    auto f = [&](double nu) { return min_transverse_eigenvalue(chain, force_field{nu, chain.box_length}); };
    double flo = f(lo);
    if(flo * f(hi) > 0.0) throw domain_error("linear_chain_instability: no sign change in bracket");
    while(hi - lo > tol)
    {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if((fm < 0.0) == (flo < 0.0))
        {
            lo = mid;
            flo = fm;
        }
        else
        {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace helix

#endif // HELIX_STABILITY_HPP
