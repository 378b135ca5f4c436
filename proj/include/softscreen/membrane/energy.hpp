// Total potential energy of the discretized chamber.
//
//   E = sum_seg W(l1, l2) t A0  +  sum_node bending  +  contact penalty
//       - p V  -  external work
//
// All lengths in mm, forces in N, energies in N*mm. Material moduli are
// converted from kPa to N/mm^2 at the boundary of this file.
#pragma once

#include "softscreen/core/dual.hpp"
#include "softscreen/membrane/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace softscreen::membrane {

inline constexpr double kPa_to_N_per_mm2 = 1e-3;

/// Loads and constraint penalties acting on top of pressure.
struct LoadCase {
    double pressure_kPa = 0.0;
    bool include_pressure_work = true;
    /// Total axial force on the crown ring, split evenly over crown nodes (N).
    double crown_axial_force_N = 0.0;
    /// Bilateral spring pulling every crown node's r to a target, used to
    /// impose a radial crown displacement. Empty targets disable it.
    std::vector<double> crown_radius_targets;
    double crown_spring_N_per_mm = 0.0;
};

struct EnergyOptions {
    /// Chassis contact penalty modulus (N/mm^3); contact pressure = k * gap.
    double contact_modulus_N_per_mm3 = 50.0;
    /// Scale on the wall bending energy; 0 gives a pure membrane.
    double bending_scale = 1.0;
};

/// Energy kernels, written once over the scalar type.
namespace kernel {

template <class T>
T ogden_density(const T& l1, const T& l2, double mu, double alpha) {
    const T l3 = 1.0 / (l1 * l2);
    using std::pow;
    return (2.0 * mu / (alpha * alpha)) * (pow(l1, alpha) + pow(l2, alpha) + pow(l3, alpha) - 3.0);
}

/// Membrane strain energy of one segment (full revolution).
template <class T>
T segment(const T& ra, const T& za, const T& rb, const T& zb, double rest_len, double rest_mid_r,
          double mu, double alpha, double thickness) {
    using std::sqrt;
    const T dr = rb - ra;
    const T dz = zb - za;
    const T len = sqrt(dr * dr + dz * dz);
    const T l1 = len / rest_len;
    const T l2 = 0.5 * (ra + rb) / rest_mid_r;
    const double area0 = 2.0 * std::numbers::pi * rest_mid_r * rest_len;
    return ogden_density(l1, l2, mu, alpha) * (thickness * area0);
}

/// Meridional bending at the middle node of three. The bending modulus uses
/// the current (thinned) wall thickness averaged over the two segments.
template <class T>
T bending(const T& r0, const T& z0, const T& r1, const T& z1, const T& r2, const T& z2,
          double rest_turn, double rest_len_a, double rest_len_b, double rest_mid_a,
          double rest_mid_b, double mu, double thickness) {
    using std::atan2;
    using std::sqrt;
    const T ar = r1 - r0, az = z1 - z0;
    const T br = r2 - r1, bz = z2 - z1;
    const T cross = az * br - ar * bz;
    const T dot = ar * br + az * bz;
    const T turn = atan2(cross, dot) - rest_turn;
    const T la = sqrt(ar * ar + az * az) / rest_len_a;
    const T lb = sqrt(br * br + bz * bz) / rest_len_b;
    const T l3a = 1.0 / (la * (0.5 * (r0 + r1) / rest_mid_a));
    const T l3b = 1.0 / (lb * (0.5 * (r1 + r2) / rest_mid_b));
    const T t_now = thickness * 0.5 * (l3a + l3b);
    const T modulus = mu * t_now * t_now * t_now / 3.0;
    const double mean_len = 0.5 * (rest_len_a + rest_len_b);
    return std::numbers::pi * modulus * r1 * turn * turn / mean_len;
}

/// Signed volume contribution of one segment (mm^3).
template <class T>
T volume(const T& ra, const T& za, const T& rb, const T& zb) {
    return (std::numbers::pi / 3.0) * (za - zb) * (ra * ra + ra * rb + rb * rb);
}

}  // namespace kernel

/// Precomputed rest quantities and energy evaluation for one chamber.
class MembraneEnergy {
public:
    MembraneEnergy(RestGeometry rest, const OgdenMaterial& material, EnergyOptions options = {})
        : rest_(std::move(rest)), material_(material), options_(options) {
        material_.validate();
        const std::size_t n = rest_.size();
        rest_len_.resize(n);
        rest_mid_.resize(n);
        rest_turn_.resize(n);
        trib_area_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Node& a = rest_.nodes[i];
            const Node& b = rest_.nodes[(i + 1) % n];
            rest_len_[i] = std::hypot(b.r - a.r, b.z - a.z);
            rest_mid_[i] = 0.5 * (a.r + b.r);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Node& p = rest_.nodes[(i + n - 1) % n];
            const Node& c = rest_.nodes[i];
            const Node& q = rest_.nodes[(i + 1) % n];
            const double ar = c.r - p.r, az = c.z - p.z, br = q.r - c.r, bz = q.z - c.z;
            rest_turn_[i] = std::atan2(az * br - ar * bz, ar * br + az * bz);
            trib_area_[i] = std::numbers::pi * c.r * (rest_len_[(i + n - 1) % n] + rest_len_[i]);
        }
        dof_.assign(n, -1);
        int next = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (!rest_.pinned[i]) dof_[i] = next++;
        n_dof_ = 2 * next;
        for (std::size_t i = 0; i < n; ++i)
            if (rest_.crown[i]) ++n_crown_;
    }

    const RestGeometry& rest() const { return rest_; }
    const OgdenMaterial& material() const { return material_; }
    const EnergyOptions& options() const { return options_; }
    int dof_count() const { return n_dof_; }
    int crown_count() const { return n_crown_; }
    double tributary_area(std::size_t i) const { return trib_area_[i]; }

    Eigen::VectorXd pack(const std::vector<Node>& nodes) const {
        Eigen::VectorXd x(n_dof_);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (dof_[i] < 0) continue;
            x[2 * dof_[i]] = nodes[i].r;
            x[2 * dof_[i] + 1] = nodes[i].z;
        }
        return x;
    }

    std::vector<Node> unpack(const Eigen::VectorXd& x) const {
        std::vector<Node> nodes = rest_.nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (dof_[i] < 0) continue;
            nodes[i] = {x[2 * dof_[i]], x[2 * dof_[i] + 1]};
        }
        return nodes;
    }

    double value(const std::vector<Node>& x, const LoadCase& load) const {
        double e = 0.0;
        const std::size_t n = x.size();
        const double mu = material_.mu_kPa * kPa_to_N_per_mm2;
        const double t = material_.thickness_mm;
        double vol = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Node& a = x[i];
            const Node& b = x[(i + 1) % n];
            e += kernel::segment(a.r, a.z, b.r, b.z, rest_len_[i], rest_mid_[i], mu,
                                 material_.alpha, t);
            vol += kernel::volume(a.r, a.z, b.r, b.z);
            if (options_.bending_scale > 0.0) e += bending_term(x, i);
            e += contact_term(x[i].r, i);
            e += load_term(x[i], i, load);
        }
        if (load.include_pressure_work) e -= load.pressure_kPa * kPa_to_N_per_mm2 * vol;
        return e;
    }

    /// Gradient and Hessian over the free degrees of freedom. The gradient is
    /// exact (dual numbers); the Hessian is a central difference of local
    /// gradients, assembled block by block.
    void gradient_hessian(const std::vector<Node>& x, const LoadCase& load, Eigen::VectorXd& grad,
                          Eigen::MatrixXd* hess) const {
        grad.setZero(n_dof_);
        if (hess) hess->setZero(n_dof_, n_dof_);
        const std::size_t n = x.size();
        const double p = load.include_pressure_work ? load.pressure_kPa * kPa_to_N_per_mm2 : 0.0;

        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = (i + 1) % n;
            auto seg = [&](const auto& v) {
                auto e = kernel::segment(v[0], v[1], v[2], v[3], rest_len_[i], rest_mid_[i], mu(),
                                         material_.alpha, material_.thickness_mm);
                e = e - p * kernel::volume(v[0], v[1], v[2], v[3]);
                return e;
            };
            accumulate<4>(seg, {i, j}, x, grad, hess);
            if (options_.bending_scale > 0.0) {
                const std::size_t h = (i + n - 1) % n;
                auto bend = [&](const auto& v) { return bending_kernel(v, i); };
                accumulate<6>(bend, {h, i, j}, x, grad, hess);
            }
            // Node-local terms are C1 (penalty) or linear; handled in closed form.
            const int d = dof_[i];
            if (d < 0) continue;
            const double gap = rest_.chassis_radius_mm - x[i].r;
            if (gap > 0.0) {
                const double k = options_.contact_modulus_N_per_mm3 * trib_area_[i];
                grad[2 * d] -= k * gap;
                if (hess) (*hess)(2 * d, 2 * d) += k;
            }
            if (rest_.crown[i]) {
                if (load.crown_axial_force_N != 0.0)
                    grad[2 * d + 1] -= load.crown_axial_force_N / n_crown_;
                if (!load.crown_radius_targets.empty()) {
                    grad[2 * d] += load.crown_spring_N_per_mm * (x[i].r - load.crown_radius_targets[i]);
                    if (hess) (*hess)(2 * d, 2 * d) += load.crown_spring_N_per_mm;
                }
            }
        }
    }

    /// Contact force the chassis exerts on node i (N, >= 0).
    double contact_force(const std::vector<Node>& x, std::size_t i) const {
        const double gap = rest_.chassis_radius_mm - x[i].r;
        return gap > 0.0 ? options_.contact_modulus_N_per_mm3 * trib_area_[i] * gap : 0.0;
    }

    double contact_pressure_kPa(const std::vector<Node>& x, std::size_t i) const {
        const double gap = rest_.chassis_radius_mm - x[i].r;
        return gap > 0.0 ? options_.contact_modulus_N_per_mm3 * gap / kPa_to_N_per_mm2 : 0.0;
    }

    /// Principal stretches (meridional, circumferential) of segment i.
    std::array<double, 2> stretches(const std::vector<Node>& x, std::size_t i) const {
        const Node& a = x[i];
        const Node& b = x[(i + 1) % x.size()];
        return {std::hypot(b.r - a.r, b.z - a.z) / rest_len_[i], 0.5 * (a.r + b.r) / rest_mid_[i]};
    }

    /// Largest in-plane Cauchy stress of segment i (kPa), plane stress.
    double principal_stress_kPa(const std::vector<Node>& x, std::size_t i) const {
        const auto [l1, l2] = stretches(x, i);
        const double l3 = 1.0 / (l1 * l2);
        const double a = material_.alpha;
        const double c = 2.0 * material_.mu_kPa / a;
        return std::max(c * (std::pow(l1, a) - std::pow(l3, a)), c * (std::pow(l2, a) - std::pow(l3, a)));
    }

private:
    double mu() const { return material_.mu_kPa * kPa_to_N_per_mm2; }

    template <class V>
    auto bending_kernel(const V& v, std::size_t i) const {
        const std::size_t n = rest_.size();
        const std::size_t h = (i + n - 1) % n;
        return options_.bending_scale *
               kernel::bending(v[0], v[1], v[2], v[3], v[4], v[5], rest_turn_[i], rest_len_[h],
                               rest_len_[i], rest_mid_[h], rest_mid_[i], mu(), material_.thickness_mm);
    }

    double bending_term(const std::vector<Node>& x, std::size_t i) const {
        const std::size_t n = x.size();
        const Node& p = x[(i + n - 1) % n];
        const Node& c = x[i];
        const Node& q = x[(i + 1) % n];
        const std::array<double, 6> v{p.r, p.z, c.r, c.z, q.r, q.z};
        return bending_kernel(v, i);
    }

    double contact_term(double r, std::size_t i) const {
        const double gap = rest_.chassis_radius_mm - r;
        return gap > 0.0 ? 0.5 * options_.contact_modulus_N_per_mm3 * trib_area_[i] * gap * gap : 0.0;
    }

    double load_term(const Node& node, std::size_t i, const LoadCase& load) const {
        if (!rest_.crown[i]) return 0.0;
        double e = -load.crown_axial_force_N / n_crown_ * node.z;
        if (!load.crown_radius_targets.empty()) {
            const double d = node.r - load.crown_radius_targets[i];
            e += 0.5 * load.crown_spring_N_per_mm * d * d;
        }
        return e;
    }

    // Adds the gradient (and FD Hessian) of a K-coordinate local kernel.
    template <std::size_t K, class F, std::size_t M = K / 2>
    void accumulate(F&& f, const std::array<std::size_t, M>& nodes, const std::vector<Node>& x,
                    Eigen::VectorXd& grad, Eigen::MatrixXd* hess) const {
        std::array<double, K> base{};
        std::array<int, K> map{};
        bool any_free = false;
        for (std::size_t m = 0; m < M; ++m) {
            base[2 * m] = x[nodes[m]].r;
            base[2 * m + 1] = x[nodes[m]].z;
            const int d = dof_[nodes[m]];
            map[2 * m] = d < 0 ? -1 : 2 * d;
            map[2 * m + 1] = d < 0 ? -1 : 2 * d + 1;
            any_free = any_free || d >= 0;
        }
        if (!any_free) return;
        auto local_grad = [&](const std::array<double, K>& at) {
            std::array<Dual<K>, K> v;
            for (std::size_t k = 0; k < K; ++k) v[k] = Dual<K>::variable(at[k], k);
            return f(v).d;
        };
        const auto g = local_grad(base);
        for (std::size_t a = 0; a < K; ++a)
            if (map[a] >= 0) grad[map[a]] += g[a];
        if (!hess) return;
        constexpr double h = 1e-6;
        for (std::size_t b = 0; b < K; ++b) {
            if (map[b] < 0) continue;
            auto plus = base, minus = base;
            plus[b] += h;
            minus[b] -= h;
            const auto gp = local_grad(plus);
            const auto gm = local_grad(minus);
            for (std::size_t a = 0; a < K; ++a)
                if (map[a] >= 0) (*hess)(map[a], map[b]) += (gp[a] - gm[a]) / (2.0 * h);
        }
    }

    RestGeometry rest_;
    OgdenMaterial material_;
    EnergyOptions options_;
    std::vector<double> rest_len_, rest_mid_, rest_turn_, trib_area_;
    std::vector<int> dof_;
    int n_dof_ = 0;
    int n_crown_ = 0;
};

}  // namespace softscreen::membrane
