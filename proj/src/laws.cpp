#include "solidfv/laws.hpp"

#include <cmath>

#include "solidfv/errors.hpp"

namespace solidfv {

Kinematics kinematics(const Mat3& grad_u) {
    Kinematics k;
    k.grad_u = grad_u;
    k.F = Mat3::identity() + transpose(grad_u);
    k.J = det(k.F);
    if (!(k.J > 0.0)) throw InvertedElement(-1, "kinematics: det F <= 0");
    k.E = 0.5 * (grad_u + transpose(grad_u) + grad_u * transpose(grad_u));
    k.b_bar = std::pow(k.J, -2.0 / 3.0) * (k.F * transpose(k.F));
    return k;
}

Mat3 hooke_stress(const Mat3& grad_u, double mu, double lambda) {
    Mat3 s = mu * (grad_u + transpose(grad_u));
    const double t = lambda * trace(grad_u);
    s(0, 0) += t;
    s(1, 1) += t;
    s(2, 2) += t;
    return s;
}

Mat3 stvk_stress(const Mat3& grad_u, double mu, double lambda) {
    const Kinematics k = kinematics(grad_u);
    Mat3 S = 2.0 * mu * k.E;
    const double t = lambda * trace(k.E);
    S(0, 0) += t;
    S(1, 1) += t;
    S(2, 2) += t;
    return (1.0 / k.J) * (k.F * S * transpose(k.F));
}

Mat3 neo_hookean_stress(const Mat3& grad_u, double mu, double kappa) {
    const Kinematics k = kinematics(grad_u);
    Mat3 s = (mu / k.J) * dev(k.b_bar);
    const double p = 0.5 * kappa * (k.J * k.J - 1.0) / k.J;
    s(0, 0) += p;
    s(1, 1) += p;
    s(2, 2) += p;
    return s;
}

double guccione_Q(const Mat3& E, const GuccioneParams& p) {
    const Mat3 ff = outer(p.f0, p.f0);
    const double i1 = trace(E);
    const double i2 = 0.5 * (i1 * i1 - trace(E * E));
    const double i4 = ddot(E, ff);
    const double i5 = ddot(E * E, ff);
    return p.c_t * i1 * i1 - 2.0 * p.c_t * i2 + (p.c_f - 2.0 * p.c_fs + p.c_t) * i4 * i4 +
           2.0 * (p.c_fs - p.c_t) * i5;
}

Mat3 guccione_dQ_dE(const Mat3& E, const GuccioneParams& p) {
    const Mat3 ff = outer(p.f0, p.f0);
    const double i4 = ddot(E, ff);
    return 2.0 * p.c_t * E + 2.0 * (p.c_f - 2.0 * p.c_fs + p.c_t) * i4 * ff +
           2.0 * (p.c_fs - p.c_t) * (E * ff + ff * E);
}

Mat3 guccione_stress(const Mat3& grad_u, const GuccioneParams& p) {
    const Kinematics k = kinematics(grad_u);
    const double Q = guccione_Q(k.E, p);
    if (Q > 500.0 || !std::isfinite(Q))
        throw LawOverflow(-1, "guccione_stress: exponent overflow, Q = " + std::to_string(Q));
    Mat3 S = (0.5 * p.C * std::exp(Q)) * guccione_dQ_dE(k.E, p);
    const double pen = 0.5 * p.kappa * (k.J * k.J - 1.0) / k.J;
    S(0, 0) += pen;
    S(1, 1) += pen;
    S(2, 2) += pen;
    return (1.0 / k.J) * (k.F * S * transpose(k.F));
}

double HardeningCurve::value(double eps_p) const {
    if (!table.empty()) {
        if (eps_p <= table.front().first) return table.front().second;
        for (std::size_t i = 1; i < table.size(); ++i)
            if (eps_p <= table[i].first) {
                const auto& [e0, s0] = table[i - 1];
                const auto& [e1, s1] = table[i];
                return s0 + (s1 - s0) * (eps_p - e0) / (e1 - e0);
            }
        return table.back().second;
    }
    return a + b * eps_p + (c - a) * (1.0 - std::exp(-d * eps_p));
}

double HardeningCurve::slope(double eps_p) const {
    if (!table.empty()) {
        if (eps_p <= table.front().first || eps_p >= table.back().first) return 0.0;
        for (std::size_t i = 1; i < table.size(); ++i)
            if (eps_p <= table[i].first)
                return (table[i].second - table[i - 1].second) /
                       (table[i].first - table[i - 1].first);
        return 0.0;
    }
    return b + (c - a) * d * std::exp(-d * eps_p);
}

J2Result j2_radial_return(const Mat3& grad_u_new, const PlasticCell& committed, double mu,
                          double kappa, const HardeningCurve& curve) {
    const Mat3 F_new = Mat3::identity() + transpose(grad_u_new);
    const double J = det(F_new);
    if (!(J > 0.0)) throw InvertedElement(-1, "j2_radial_return: det F <= 0");

    // Relative deformation gradient carries the committed elastic state forward.
    const Mat3 f_rel = F_new * inverse(committed.F);
    const double det_f = det(f_rel);
    if (!(det_f > 0.0)) throw InvertedElement(-1, "j2_radial_return: inverted increment");
    const Mat3 f_bar = std::pow(det_f, -1.0 / 3.0) * f_rel;
    const Mat3 b_trial = sym(f_bar * committed.b_bar * transpose(f_bar));

    // Trial Cauchy deviator; the consistency condition is enforced on the Cauchy
    // stress so sqrt(3/2) |dev sigma| = sigma_y exactly after the return.
    const Mat3 s_trial = (mu / J) * dev(b_trial);
    const double s_norm = frobenius_norm(s_trial);
    const double sq23 = std::sqrt(2.0 / 3.0);

    J2Result r;
    r.state.F = F_new;
    const double f_yield = s_norm - sq23 * curve.value(committed.eps_p);

    Mat3 s = s_trial;
    if (f_yield <= 0.0) {
        r.state.b_bar = b_trial;
        r.state.eps_p = committed.eps_p;
    } else {
        const double mu_bar = mu * trace(b_trial) / (3.0 * J);
        double dg = 0.0;
        bool done = false;
        const double tol = 1e-12 * std::max(s_norm, curve.value(0.0));
        for (int it = 0; it < 50; ++it) {
            const double eps = committed.eps_p + sq23 * dg;
            const double g = s_norm - 2.0 * mu_bar * dg - sq23 * curve.value(eps);
            if (std::abs(g) <= tol) {
                done = true;
                break;
            }
            const double gp = -2.0 * mu_bar - (2.0 / 3.0) * curve.slope(eps);
            const double next = dg - g / gp;
            dg = next > 0.0 ? next : 0.5 * dg;
        }
        if (!done) throw ReturnMapFailure(-1, "j2_radial_return: hardening Newton did not converge");
        const Mat3 n_dir = (1.0 / s_norm) * s_trial;
        s = s_trial - (2.0 * mu_bar * dg) * n_dir;
        r.dgamma = dg;
        r.state.eps_p = committed.eps_p + sq23 * dg;
        // Rebuild the elastic state from the returned Kirchhoff deviator J*s.
        Mat3 b = (J / mu) * s;
        const double iso = trace(b_trial) / 3.0;
        b(0, 0) += iso;
        b(1, 1) += iso;
        b(2, 2) += iso;
        r.state.b_bar = b;
    }

    r.sigma = s;
    const double p = 0.5 * kappa * (J * J - 1.0) / J;
    r.sigma(0, 0) += p;
    r.sigma(1, 1) += p;
    r.sigma(2, 2) += p;
    return r;
}

Mat3 StVenantKirchhoffLaw::stress(int cell, const Mat3& grad_u) {
    try {
        return stvk_stress(grad_u, mu_, lambda_);
    } catch (const InvertedElement& e) {
        throw InvertedElement(cell, e.what());
    }
}

Mat3 NeoHookeanLaw::stress(int cell, const Mat3& grad_u) {
    try {
        return neo_hookean_stress(grad_u, mu_, kappa_);
    } catch (const InvertedElement& e) {
        throw InvertedElement(cell, e.what());
    }
}

Mat3 GuccioneLaw::stress(int cell, const Mat3& grad_u) {
    try {
        return guccione_stress(grad_u, p_);
    } catch (const InvertedElement& e) {
        throw InvertedElement(cell, e.what());
    } catch (const LawOverflow& e) {
        throw LawOverflow(cell, e.what());
    }
}

void J2PlasticLaw::resize(int n_cells) {
    committed_.assign(n_cells, PlasticCell{});
    trial_.assign(n_cells, PlasticCell{});
}

Mat3 J2PlasticLaw::stress(int cell, const Mat3& grad_u) {
    try {
        J2Result r = j2_radial_return(grad_u, committed_[cell], mu_, kappa_, curve_);
        trial_[cell] = r.state;
        return r.sigma;
    } catch (const InvertedElement& e) {
        throw InvertedElement(cell, e.what());
    } catch (const ReturnMapFailure& e) {
        throw ReturnMapFailure(cell, e.what());
    }
}

void J2PlasticLaw::commit() { committed_ = trial_; }

}  // namespace solidfv
