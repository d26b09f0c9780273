#pragma once

// Curvature algebra shared by the jet path (S = Jet) and the grid integrator (S = double).
// Conventions:
//   Gamma^k_ij                 index (k*n + i)*n + j
//   R^r_{s m v} = d_m G^r_{v s} - d_v G^r_{m s} + G^r_{m l} G^l_{v s} - G^r_{v l} G^l_{m s}
//   R_{a s m v} = g_{a r} R^r_{s m v}, index ((a*n + s)*n + m)*n + v
//   Ric_{s v}   = R^r_{s r v}
// With these signs the round sphere has R_{0101} > 0 and positive Ricci curvature.

#include <cmath>
#include <vector>

#include "geoflow/errors.hpp"
#include "geoflow/jet.hpp"

namespace geoflow {

/// g_ij with first and second coordinate derivatives.
/// dg[k*n*n + i*n + j] = d_k g_ij, d2g[(k*n + l)*n*n + i*n + j] = d_k d_l g_ij.
template <class S>
struct MetricDerivatives {
    int n = 0;
    std::vector<S> g, dg, d2g;
};

template <class S>
struct CurvatureTensors {
    int n = 0;
    std::vector<S> ginv;
    std::vector<S> christoffel;
    std::vector<S> riemann;
    std::vector<S> ricci;
    std::vector<S> ricci_operator;  // Q^i_j, index i*n + j
    S scalar{};
};

inline double inverse_of(double v) { return 1.0 / v; }
inline Jet inverse_of(const Jet& v) { return reciprocal(v); }

/// Gauss-Jordan inverse with partial pivoting on the leading values.
template <class S>
std::vector<S> invert_matrix(std::vector<S> a, int n) {
    const auto N = static_cast<std::size_t>(n);
    const S zero = constant_like(a[0], 0.0);
    std::vector<S> inv(N * N, zero);
    for (std::size_t i = 0; i < N; ++i) inv[i * N + i] = constant_like(a[0], 1.0);
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < N; ++r)
            if (std::abs(value_of(a[r * N + c])) > std::abs(value_of(a[p * N + c]))) p = r;
        if (value_of(a[p * N + c]) == 0.0) throw GeometryError("degenerate metric: singular matrix");
        if (p != c) {
            for (std::size_t k = 0; k < N; ++k) {
                std::swap(a[c * N + k], a[p * N + k]);
                std::swap(inv[c * N + k], inv[p * N + k]);
            }
        }
        const S rp = inverse_of(a[c * N + c]);
        for (std::size_t k = 0; k < N; ++k) {
            a[c * N + k] = a[c * N + k] * rp;
            inv[c * N + k] = inv[c * N + k] * rp;
        }
        for (std::size_t r = 0; r < N; ++r) {
            if (r == c) continue;
            const S f = a[r * N + c];
            for (std::size_t k = 0; k < N; ++k) {
                a[r * N + k] -= f * a[c * N + k];
                inv[r * N + k] -= f * inv[c * N + k];
            }
        }
    }
    return inv;
}

template <class S>
std::vector<S> christoffel_from(const std::vector<S>& ginv, const std::vector<S>& dg, int n) {
    const auto N = static_cast<std::size_t>(n);
    auto D = [&](std::size_t k, std::size_t i, std::size_t j) -> const S& { return dg[k * N * N + i * N + j]; };
    const S zero = constant_like(dg[0], 0.0);
    // first kind Gamma_{l i j}
    std::vector<S> first(N * N * N, zero);
    for (std::size_t l = 0; l < N; ++l)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i; j < N; ++j) {
                S v = 0.5 * (D(i, j, l) + D(j, i, l) - D(l, i, j));
                first[(l * N + i) * N + j] = v;
                first[(l * N + j) * N + i] = v;
            }
    std::vector<S> gam(N * N * N, zero);
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i; j < N; ++j) {
                S s = zero;
                for (std::size_t l = 0; l < N; ++l) s += ginv[k * N + l] * first[(l * N + i) * N + j];
                gam[(k * N + i) * N + j] = s;
                gam[(k * N + j) * N + i] = s;
            }
    return gam;
}

template <class S>
CurvatureTensors<S> curvature_from(const MetricDerivatives<S>& m) {
    const int n = m.n;
    const auto N = static_cast<std::size_t>(n);
    CurvatureTensors<S> out;
    out.n = n;
    out.ginv = invert_matrix(m.g, n);
    out.christoffel = christoffel_from(out.ginv, m.dg, n);
    const S zero = constant_like(m.d2g[0], 0.0);
    const auto& gi = out.ginv;
    const auto& G = out.christoffel;
    auto D = [&](std::size_t k, std::size_t i, std::size_t j) -> const S& { return m.dg[k * N * N + i * N + j]; };
    auto DD = [&](std::size_t k, std::size_t l, std::size_t i, std::size_t j) -> const S& {
        return m.d2g[(k * N + l) * N * N + i * N + j];
    };

    // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
    std::vector<S> dginv(N * N * N, zero);
    for (std::size_t q = 0; q < N; ++q) {
        std::vector<S> t(N * N, zero);  // (d_q g) g^{-1}
        for (std::size_t a = 0; a < N; ++a)
            for (std::size_t l = 0; l < N; ++l) {
                S s = zero;
                for (std::size_t b = 0; b < N; ++b) s += D(q, a, b) * gi[b * N + l];
                t[a * N + l] = s;
            }
        for (std::size_t k = 0; k < N; ++k)
            for (std::size_t l = 0; l < N; ++l) {
                S s = zero;
                for (std::size_t a = 0; a < N; ++a) s += gi[k * N + a] * t[a * N + l];
                dginv[q * N * N + k * N + l] = -s;
            }
    }

    // first-kind symbols and their derivatives, then d_q Gamma^k_ij
    std::vector<S> first(N * N * N, zero);
    for (std::size_t l = 0; l < N; ++l)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) first[(l * N + i) * N + j] = 0.5 * (D(i, j, l) + D(j, i, l) - D(l, i, j));
    std::vector<S> dG(N * N * N * N, zero);  // [q][k][i][j]
    for (std::size_t q = 0; q < N; ++q)
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i; j < N; ++j) {
                std::vector<S> dfirst(N, zero);
                for (std::size_t l = 0; l < N; ++l) dfirst[l] = 0.5 * (DD(q, i, j, l) + DD(q, j, i, l) - DD(q, l, i, j));
                for (std::size_t k = 0; k < N; ++k) {
                    S s = zero;
                    for (std::size_t l = 0; l < N; ++l) {
                        s += dginv[q * N * N + k * N + l] * first[(l * N + i) * N + j];
                        s += gi[k * N + l] * dfirst[l];
                    }
                    dG[((q * N + k) * N + i) * N + j] = s;
                    dG[((q * N + k) * N + j) * N + i] = s;
                }
            }

    auto Gm = [&](std::size_t k, std::size_t i, std::size_t j) -> const S& { return G[(k * N + i) * N + j]; };
    auto dGm = [&](std::size_t q, std::size_t k, std::size_t i, std::size_t j) -> const S& {
        return dG[((q * N + k) * N + i) * N + j];
    };

    // mixed R^r_{s m v}, antisymmetric in (m, v)
    std::vector<S> mixed(N * N * N * N, zero);
    for (std::size_t r = 0; r < N; ++r)
        for (std::size_t s = 0; s < N; ++s)
            for (std::size_t mu = 0; mu < N; ++mu)
                for (std::size_t nu = mu + 1; nu < N; ++nu) {
                    S v = dGm(mu, r, nu, s) - dGm(nu, r, mu, s);
                    for (std::size_t l = 0; l < N; ++l) v += Gm(r, mu, l) * Gm(l, nu, s) - Gm(r, nu, l) * Gm(l, mu, s);
                    mixed[((r * N + s) * N + mu) * N + nu] = v;
                    mixed[((r * N + s) * N + nu) * N + mu] = -v;
                }

    out.riemann.assign(N * N * N * N, zero);
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t s = 0; s < N; ++s)
            for (std::size_t mu = 0; mu < N; ++mu)
                for (std::size_t nu = mu + 1; nu < N; ++nu) {
                    S v = zero;
                    for (std::size_t r = 0; r < N; ++r) v += m.g[a * N + r] * mixed[((r * N + s) * N + mu) * N + nu];
                    out.riemann[((a * N + s) * N + mu) * N + nu] = v;
                    out.riemann[((a * N + s) * N + nu) * N + mu] = -v;
                }

    out.ricci.assign(N * N, zero);
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t v = 0; v < N; ++v) {
            S acc = zero;
            for (std::size_t r = 0; r < N; ++r) acc += mixed[((r * N + s) * N + r) * N + v];
            out.ricci[s * N + v] = acc;
        }

    out.ricci_operator.assign(N * N, zero);
    out.scalar = zero;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            S acc = zero;
            for (std::size_t k = 0; k < N; ++k) acc += gi[i * N + k] * out.ricci[k * N + j];
            out.ricci_operator[i * N + j] = acc;
        }
    for (std::size_t i = 0; i < N; ++i) out.scalar += out.ricci_operator[i * N + i];
    return out;
}

}  // namespace geoflow
