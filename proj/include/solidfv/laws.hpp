#pragma once

// Constitutive laws mapping a displacement gradient (and, for plasticity, committed
// internal state) to the true stress. Finite-strain laws work from F = I + (grad u)^T.

#include <memory>
#include <vector>

#include "solidfv/types.hpp"

namespace solidfv {

// Elastic constant conversions.
inline double mu_from(double E, double nu) { return E / (2.0 * (1.0 + nu)); }
inline double lambda_from(double E, double nu) { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
inline double kappa_from(double E, double nu) { return E / (3.0 * (1.0 - 2.0 * nu)); }

struct Kinematics {
    Mat3 grad_u;
    Mat3 F;      // I + (grad u)^T
    double J;    // det F
    Mat3 E;      // Green strain 1/2 (grad u + grad u^T + grad u . grad u^T)
    Mat3 b_bar;  // J^(-2/3) F F^T
};

// Throws InvertedElement (cell = -1) when det F <= 0.
Kinematics kinematics(const Mat3& grad_u);

// Engineering stress, linear in grad u.
Mat3 hooke_stress(const Mat3& grad_u, double mu, double lambda);

// St. Venant-Kirchhoff: S = 2 mu E + lambda tr(E) I pushed forward to true stress.
Mat3 stvk_stress(const Mat3& grad_u, double mu, double lambda);

// Nearly incompressible neo-Hookean: (mu/J) dev(b_bar) + (kappa/2)(J^2-1)/J I.
Mat3 neo_hookean_stress(const Mat3& grad_u, double mu, double kappa);

struct GuccioneParams {
    double C;  // Pa
    double c_f, c_t, c_fs;
    double kappa;  // Pa, volumetric penalty
    Vec3 f0;       // unit fibre direction in the reference configuration
};

// Transversely isotropic exponential law; volumetric penalty carried inside S.
Mat3 guccione_stress(const Mat3& grad_u, const GuccioneParams& p);
double guccione_Q(const Mat3& E, const GuccioneParams& p);       // exposed for the FD oracle
Mat3 guccione_dQ_dE(const Mat3& E, const GuccioneParams& p);

// Yield stress as a function of equivalent plastic strain: either the saturation form
// a + b*e + (c - a)(1 - exp(-d*e)) or a piecewise-linear table.
struct HardeningCurve {
    // saturation form coefficients (used when table empty)
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    std::vector<std::pair<double, double>> table;  // (eps_p, sigma_y), strictly increasing eps_p

    static HardeningCurve saturation(double a, double b, double c, double d) {
        return {a, b, c, d, {}};
    }
    static HardeningCurve perfect(double sigma_y) { return {sigma_y, 0.0, sigma_y, 1.0, {}}; }

    double value(double eps_p) const;
    double slope(double eps_p) const;
};

struct PlasticCell {
    Mat3 b_bar = Mat3::identity();  // elastic left Cauchy-Green, unimodular part
    double eps_p = 0.0;
    Mat3 F = Mat3::identity();  // total deformation gradient at commit time
};

struct J2Result {
    Mat3 sigma;
    PlasticCell state;  // trial state to be committed once the step converges
    double dgamma = 0.0;
};

// Radial return on the Cauchy deviator with neo-Hookean elasticity; never touches
// the committed state. Hardening Newton capped at 50 iterations.
J2Result j2_radial_return(const Mat3& grad_u_new, const PlasticCell& committed, double mu,
                          double kappa, const HardeningCurve& curve);

// Per-cell law interface used by the residual assembly. stress() may update a trial
// state; commit() promotes trial to committed at the end of a converged step.
class MechanicalLaw {
public:
    virtual ~MechanicalLaw() = default;
    virtual Mat3 stress(int cell, const Mat3& grad_u) = 0;
    virtual void resize(int n_cells) { (void)n_cells; }
    virtual void commit() {}
    virtual bool finite_strain() const = 0;
    virtual double stabilisation_modulus() const = 0;  // K-bar scale, 2 mu + lambda equivalent
};

class HookeLaw : public MechanicalLaw {
public:
    HookeLaw(double mu, double lambda) : mu_(mu), lambda_(lambda) {}
    Mat3 stress(int, const Mat3& grad_u) override { return hooke_stress(grad_u, mu_, lambda_); }
    bool finite_strain() const override { return false; }
    double stabilisation_modulus() const override { return 2.0 * mu_ + lambda_; }

private:
    double mu_, lambda_;
};

class StVenantKirchhoffLaw : public MechanicalLaw {
public:
    StVenantKirchhoffLaw(double mu, double lambda) : mu_(mu), lambda_(lambda) {}
    Mat3 stress(int cell, const Mat3& grad_u) override;
    bool finite_strain() const override { return true; }
    double stabilisation_modulus() const override { return 2.0 * mu_ + lambda_; }

private:
    double mu_, lambda_;
};

class NeoHookeanLaw : public MechanicalLaw {
public:
    NeoHookeanLaw(double mu, double kappa) : mu_(mu), kappa_(kappa) {}
    Mat3 stress(int cell, const Mat3& grad_u) override;
    bool finite_strain() const override { return true; }
    double stabilisation_modulus() const override { return 4.0 / 3.0 * mu_ + kappa_; }

private:
    double mu_, kappa_;
};

class GuccioneLaw : public MechanicalLaw {
public:
    explicit GuccioneLaw(const GuccioneParams& p) : p_(p) {}
    Mat3 stress(int cell, const Mat3& grad_u) override;
    bool finite_strain() const override { return true; }
    double stabilisation_modulus() const override { return 4.0 / 3.0 * (p_.C * p_.c_t) + p_.kappa; }

private:
    GuccioneParams p_;
};

class J2PlasticLaw : public MechanicalLaw {
public:
    J2PlasticLaw(double mu, double kappa, HardeningCurve curve)
        : mu_(mu), kappa_(kappa), curve_(std::move(curve)) {}
    void resize(int n_cells) override;
    Mat3 stress(int cell, const Mat3& grad_u) override;
    void commit() override;
    bool finite_strain() const override { return true; }
    double stabilisation_modulus() const override { return 4.0 / 3.0 * mu_ + kappa_; }

    const PlasticCell& committed(int cell) const { return committed_[cell]; }
    const PlasticCell& trial(int cell) const { return trial_[cell]; }

private:
    double mu_, kappa_;
    HardeningCurve curve_;
    std::vector<PlasticCell> committed_, trial_;
};

}  // namespace solidfv
