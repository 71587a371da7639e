#pragma once

// Renormalization of torus vector fields (the R_n = U_n I_n L_n chain):
// parameter map Phi_n, linear rescale with the transfer matrices, analyticity
// cutoff bookkeeping, far-from-resonance elimination, and assembly of the
// conjugacy h and the parameter curve p^s.

#include "mcf/cfrun.hpp"
#include "mcf/elim_vf.hpp"
#include "mcf/gridfit.hpp"

namespace mcf::vf {

// double-precision view of one CF step, as consumed by the renormalization
struct StepData {
    int d = 2;
    std::array<double, kMaxD> omega{};
    double gamma = 1;
    std::array<std::array<double, kMaxD>, kMaxD> M{};
    double norm_M = 1, norm_M_inv = 1, norm_T = 1, norm_T_inv = 1;
    double eta = 1, lambda = 1;
    double t = 0, dt = 0;
    double sigma = 0.1;
    double A = -1;  // resonance-cone contraction (measured, uses T^(n+1))
    Mat<big_int> T, Tinv, P, Pinv;
};

std::vector<StepData> extract_step_data(const CFRun& run);

// The analyticity cutoff factor phi_n is a free choice (any phi_n >= 1 obeys
// the cutoff lemma).  theta_formula reproduces the convergence proof's choice
// 2|eta||T|(1+2pi/delta) Theta_{n-1}/Theta_n; unit applies no cutoff and
// leaves the whole contracted strip available.
enum class CutoffMode { unit, theta_formula };

struct VfRenormConfig {
    int K = 24;
    int D = 3;
    double prune_rel = 1e-26;
    double rho0 = 4.0;      // strip after the step-0 margins
    double nu = 0.1;        // elimination strip margin
    double delta = 0.05;    // rescale strip margin
    double lambda = 0.5;    // Theta decay knob, in (0,1)
    double b0 = 0.1;        // initial parameter-disc height, < 1/2
    int n_max = 5;
    ElimOptions elim;
    bool strict_smallness = false;  // enforce the epsilon_n gate
    CutoffMode cutoff = CutoffMode::unit;
};

struct VfStepState {
    int n = 0;
    VectorField X;   // post-elimination, supported on I+_n
    double rho = 0, a = 0, b = 0;
    double Theta = 0;
    double cutoff_factor = 1;
    double perturbation_norm = 0;  // |X_n - X0_n|_{rho_n, r_n}
    double elim_residual = 0;
    double u_norm_primed = 0;
    double bound_42 = 0;
    bool used_homotopy = false;
    std::vector<double> newton_defects;
    SeriesV u;                  // eliminated shift
    std::vector<SeriesC> Phi;   // parameter map components (empty at n = 0)
    double rescale_norm_bound = 0;   // |eta| |T| (1 + 2 pi / delta) |f_prev|
    double rescale_norm_actual = 0;  // |L~ f|'
    double trunc_loss = 0;
};

struct ConjugacyResult {
    int grid_m = 6;
    std::array<double, ser::kMaxD> p0{};  // constant vector at s = 0 (chart-adjusted)
    std::vector<double> s_samples;
    std::vector<std::array<double, ser::kMaxD>> p_samples;
    std::vector<std::array<double, ser::kMaxD>> h_values;  // h(x) on the grid (x-part)
    std::vector<grid::PeriodicFit> h_fit;                  // periodic part per component
    double isotopy_sup = 0;   // sup |h - id|, must stay < 1/2
    double reality_defect = 0;
    double residual_max = -1, residual_mean = -1;  // filled by conjugacy_residual
};

struct VfRenormResult {
    std::vector<VfStepState> states;
    ConjugacyResult conjugacy;
    double input_norm = 0;      // c = |X - X0|_{rho0+nu, r0}
    double cK = 0;              // calibrated c K product for the b_n update
    double K_envelope = 0;      // max_n perturbation_norm / (Theta_n c)
    double B_script = 0;        // partial sum of the B(omega) series
};

// v_field: the full field v as a (real) x-series; omega is taken from the run.
VfRenormResult renorm_run(const SeriesV& v_field, const CFRun& cf, const VfRenormConfig& cfg,
                          int grid_m = 6, const std::vector<double>& s_samples = {0.0});

struct ResidualStats {
    double max = 0, mean = 0;
    std::vector<double> per_point;
    int singular_jacobian_samples = 0;
};

// max/mean over the grid of |Dh(x) (1+s) omega - (v + p)(h(x))|
ResidualStats conjugacy_residual(const SeriesV& v_field, const ConjugacyResult& conj,
                                 const std::array<double, ser::kMaxD>& p,
                                 const std::array<double, ser::kMaxD>& omega, double s,
                                 int grid_m);

}  // namespace mcf::vf
