#pragma once

/// @file materials.hpp
/// @brief Solid constitutive laws: strain energy, stress and its linearization.

#include <cmath>
#include <string>

#include "fsi/error.hpp"
#include "fsi/ref_element.hpp"

namespace fsi {

enum class MaterialKind { LinearElastic, SaintVenantKirchhoff };

inline std::string to_string(MaterialKind k) {
    return k == MaterialKind::LinearElastic ? "linear" : "svk";
}

inline MaterialKind parse_material_kind(const std::string& s) {
    if (s == "linear" || s == "LinearElastic") return MaterialKind::LinearElastic;
    if (s == "svk" || s == "SaintVenantKirchhoff") return MaterialKind::SaintVenantKirchhoff;
    throw InputError("unknown material kind '" + s + "'");
}

inline double ddot(const Mat2& a, const Mat2& b) { return (a.array() * b.array()).sum(); }

/// Green-Lagrange strain E = (F^T F - I)/2.
inline Mat2 green_strain(const Mat2& F) {
    return 0.5 * (F.transpose() * F - Mat2::Identity());
}

class MaterialModel {
public:
    MaterialModel(MaterialKind kind, double mu, double lambda, double rho)
        : kind_(kind), mu_(mu), lambda_(lambda), rho_(rho) {
        if (!(mu > 0.0)) throw InputError("material: mu_s must be positive");
        if (!(lambda >= 0.0)) throw InputError("material: lambda_s must be non-negative");
        if (!(rho > 0.0)) throw InputError("material: rho_s must be positive");
    }

    MaterialKind kind() const { return kind_; }
    double mu() const { return mu_; }
    double lambda() const { return lambda_; }
    double rho() const { return rho_; }
    bool convex() const { return kind_ == MaterialKind::LinearElastic; }

    double strain_energy(const Mat2& F) const {
        const Mat2 E = strain(F);
        const double tr = E.trace();
        return mu_ * ddot(E, E) + 0.5 * lambda_ * tr * tr;
    }

    Mat2 stress(const Mat2& F) const {
        if (kind_ == MaterialKind::LinearElastic) {
            const Mat2 H = F - Mat2::Identity();
            return mu_ * (H + H.transpose()) + lambda_ * H.trace() * Mat2::Identity();
        }
        const Mat2 E = green_strain(F);
        return 2.0 * mu_ * F * E + lambda_ * E.trace() * F;
    }

    /// d/de <stress(F + e G), H> at e = 0; symmetric in (G, H).
    double linearization(const Mat2& F, const Mat2& G, const Mat2& H) const {
        if (kind_ == MaterialKind::LinearElastic)
            return 0.5 * mu_ * ddot(G + G.transpose(), H + H.transpose()) +
                   lambda_ * G.trace() * H.trace();
        const Mat2 E = green_strain(F);
        const Mat2 dEg = 0.5 * (G.transpose() * F + F.transpose() * G);
        const Mat2 dEh = 0.5 * (H.transpose() * F + F.transpose() * H);
        return lambda_ * E.trace() * ddot(H, G) + lambda_ * dEg.trace() * dEh.trace() +
               2.0 * mu_ * ddot(G * E, H) + 2.0 * mu_ * ddot(dEg, dEh);
    }

private:
    Mat2 strain(const Mat2& F) const {
        if (kind_ == MaterialKind::LinearElastic)
            return 0.5 * (F + F.transpose()) - Mat2::Identity();
        return green_strain(F);
    }

    MaterialKind kind_;
    double mu_;
    double lambda_;
    double rho_;
};

inline double strain_energy(const MaterialModel& m, const Mat2& F) { return m.strain_energy(F); }
inline Mat2 stress(const MaterialModel& m, const Mat2& F) { return m.stress(F); }
inline double linearization_As(const MaterialModel& m, const Mat2& F, const Mat2& G,
                               const Mat2& H) {
    return m.linearization(F, G, H);
}

}  // namespace fsi
