#include "mcf/renorm_vf.hpp"

#include <cmath>

#include "mcf/kernels.hpp"

namespace mcf::vf {

namespace {

CVec matvec_cvec(const std::array<std::array<double, kMaxD>, kMaxD>& M, const CVec& c, int d) {
    CVec r;
    for (int i = 0; i < d; i++) {
        cplx s(0, 0);
        for (int j = 0; j < d; j++) s += M[static_cast<size_t>(i)][static_cast<size_t>(j)] * c[j];
        r[i] = s;
    }
    return r;
}

std::array<std::array<double, kMaxD>, kMaxD> to_arr(const Mat<double>& M) {
    std::array<std::array<double, kMaxD>, kMaxD> A{};
    for (int i = 0; i < M.n; i++)
        for (int j = 0; j < M.m; j++) A[static_cast<size_t>(i)][static_cast<size_t>(j)] = M(i, j);
    return A;
}

// corner points of the split polydisc (head 1-norm = a on each axis, |y_d| = b)
std::vector<std::array<cplx, kMaxD>> window_corners(int d, double a, double b) {
    std::vector<std::array<cplx, kMaxD>> pts;
    for (int i = 0; i < d - 1; i++)
        for (int si : {-1, 1})
            for (int sd : {-1, 1}) {
                std::array<cplx, kMaxD> y{};
                y[static_cast<size_t>(i)] = si * a;
                y[static_cast<size_t>(d - 1)] = sd * b;
                pts.push_back(y);
            }
    return pts;
}

}  // namespace

std::vector<StepData> extract_step_data(const CFRun& run) {
    std::vector<StepData> out;
    int d = run.alpha0.dim();
    if (d > ser::kMaxD)
        throw McfError(ErrorCode::invalid_argument, "renormalization supports d <= 4");
    for (const auto& st : run.steps) {
        StepData s;
        s.d = d;
        for (int i = 0; i < d; i++) s.omega[static_cast<size_t>(i)] = static_cast<double>(st.alpha_n.omega[i]);
        s.gamma = static_cast<double>(st.gamma_n);
        s.M = to_arr(to_double(st.M_red.entries));
        s.norm_M = static_cast<double>(st.norm_M);
        s.norm_M_inv = static_cast<double>(st.norm_M_inv);
        s.norm_T = static_cast<double>(st.norm_T);
        s.norm_T_inv = static_cast<double>(st.norm_T_inv);
        s.eta = static_cast<double>(st.eta_n);
        s.lambda = static_cast<double>(st.lambda_n);
        s.t = static_cast<double>(st.t);
        s.dt = static_cast<double>(st.dt);
        s.sigma = st.sigma_n;
        s.A = st.A_measured;
        s.T = st.T.entries;
        s.Tinv = st.T.inverse().entries;
        s.P = st.P.entries;
        s.Pinv = st.P.inverse().entries;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

struct Sequences {
    std::vector<double> Theta, phi_cut, B, rho, a;
};

// Theta_n, cutoff factors, B_n = prod A_i and the rho_n budget.  The heights
// b_n are driven step-by-step by the measured zero modes (Eq. control on r).
Sequences build_sequences(const std::vector<StepData>& sd, const VfRenormConfig& cfg) {
    int n_max = cfg.n_max;
    int d = sd[0].d;
    Sequences q;
    q.Theta.resize(static_cast<size_t>(n_max) + 1);
    q.phi_cut.assign(static_cast<size_t>(n_max) + 1, 1.0);
    q.B.resize(static_cast<size_t>(n_max) + 1);
    q.rho.resize(static_cast<size_t>(n_max) + 1);
    q.a.resize(static_cast<size_t>(n_max) + 1);

    double prodTinv2 = 1;
    for (int n = 0; n <= n_max; n++) {
        const StepData& s = sd[static_cast<size_t>(n)];
        const StepData& s1 = sd[static_cast<size_t>(n) + 1];
        if (n >= 1) prodTinv2 *= s.norm_T_inv * s.norm_T_inv;
        double wn = 0;
        for (int i = 0; i < d; i++) wn += s.omega[static_cast<size_t>(i)] * s.omega[static_cast<size_t>(i)];
        wn = std::sqrt(wn);
        double eps_n = s.sigma / 42.0 * std::min(cfg.nu / (4 * M_PI), s.sigma / (72.0 * wn));
        double lam_n = std::pow(cfg.lambda, n);
        double term2 = lam_n * s.sigma * s.sigma / prodTinv2;
        double bracket = s.sigma * std::abs(s.gamma) / s.norm_M -
                         s1.sigma * std::abs(s1.gamma) / (std::exp(d * s1.dt) * s1.norm_M);
        if (bracket <= 0)
            throw McfError(ErrorCode::schedule_error,
                           "Theta bracket is not positive at step " + std::to_string(n) +
                               "; increase xi or c in the schedule");
        double term3 = lam_n * bracket / (1 + std::abs(s.gamma) * s.norm_M_inv);
        q.Theta[static_cast<size_t>(n)] = std::min(eps_n, std::min(term2, term3));
        q.a[static_cast<size_t>(n)] = s.sigma * (0.5 - cfg.b0) * std::abs(s.gamma) / s.norm_M;
    }
    if (cfg.cutoff == CutoffMode::theta_formula)
        for (int n = 1; n <= n_max; n++) {
            const StepData& s = sd[static_cast<size_t>(n)];
            q.phi_cut[static_cast<size_t>(n)] =
                std::max(1.0, 2 * std::abs(s.eta) * s.norm_T * (1 + 2 * M_PI / cfg.delta) *
                                  q.Theta[static_cast<size_t>(n) - 1] /
                                  q.Theta[static_cast<size_t>(n)]);
        }
    // B_n = prod_{i<=n} A_i with the measured cone contractions
    double prod = 1;
    for (int n = 0; n <= n_max; n++) {
        double A = sd[static_cast<size_t>(n)].A;
        if (A <= 0)
            throw McfError(ErrorCode::invalid_argument,
                           "cone contraction A_n missing; run compute_diagnostics first");
        prod *= A;
        q.B[static_cast<size_t>(n)] = prod;
    }
    q.rho[0] = cfg.rho0;
    double acc = 0, accB = 0;
    for (int n = 1; n <= n_max; n++) {
        acc += q.B[static_cast<size_t>(n) - 1] * std::log(q.phi_cut[static_cast<size_t>(n)]);
        accB += q.B[static_cast<size_t>(n) - 1];
        q.rho[static_cast<size_t>(n)] =
            (cfg.rho0 - acc - (cfg.delta + cfg.nu) * accB) / q.B[static_cast<size_t>(n) - 1];
        if (q.rho[static_cast<size_t>(n)] <= 0)
            throw McfError(ErrorCode::analyticity_exhausted,
                           "analyticity budget exhausted at step " + std::to_string(n));
    }
    return q;
}

BaseField base_of(const StepData& s) {
    BaseField b;
    b.d = s.d;
    b.omega = s.omega;
    for (int i = 0; i < s.d; i++)
        for (int j = 0; j < s.d; j++)
            b.A[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                s.M[static_cast<size_t>(i)][static_cast<size_t>(j)] / s.gamma;
    return b;
}

// Phi_n = (id + gamma M^{-1} f0)^{-1} o diag(e^{-d dt},...,e^{-d dt}, 1)
std::vector<SeriesC> parameter_map(const VectorField& X_prev, const StepData& prev,
                                   const StepData& cur, double mu_bound, bool strict,
                                   TruncationLog* log) {
    int d = X_prev.f.spec.d;
    SeriesV f0 = zero_mode(X_prev.f);
    double f0n = weighted_norm(f0, X_prev.window, false);
    if (f0n >= mu_bound && strict)
        throw McfError(ErrorCode::mu_condition,
                       "zero mode exceeds the mu margin of the parameter map");

    // g-series: gamma_{prev} M_prev^{-1} f0
    Mat<double> Mp(d, d);
    for (int i = 0; i < d; i++)
        for (int j = 0; j < d; j++) Mp(i, j) = prev.M[static_cast<size_t>(i)][static_cast<size_t>(j)];
    Mat<double> Mpi = inverse(Mp);
    auto arrMpi = to_arr(Mpi);
    SeriesV g = f0;
    for (auto& [k, c] : g.terms) c = matvec_cvec(arrMpi, c, d) * cplx(prev.gamma, 0);

    // S y components
    double scal = std::exp(-d * cur.dt);
    std::vector<SeriesC> Phi(static_cast<size_t>(d));
    auto S_comp = [&](int j) {
        Mode m;
        m.nu[static_cast<size_t>(j)] = 1;
        SeriesC s;
        s.spec = X_prev.f.spec;
        s.terms.emplace_back(pack(m, d), cplx(j == d - 1 ? 1.0 : scal, 0));
        return s;
    };
    for (int j = 0; j < d; j++) Phi[static_cast<size_t>(j)] = S_comp(j);
    if (g.empty()) return Phi;

    // fixed point Phi <- S y - g o Phi
    auto id_kmap = [](const Mode& m) -> std::optional<Mode> { return m; };
    double prev_change = 1e300;
    for (int it = 0; it < 64; it++) {
        SeriesV gPhi = pullback<CVec>(g, id_kmap, &Phi, log, &X_prev.window);
        std::vector<SeriesC> next(static_cast<size_t>(d));
        double change = 0;
        for (int j = 0; j < d; j++) {
            next[static_cast<size_t>(j)] = sub(S_comp(j), component(gPhi, j));
            change += weighted_norm(sub(next[static_cast<size_t>(j)], Phi[static_cast<size_t>(j)]),
                                    X_prev.window, false);
        }
        Phi = std::move(next);
        if (change < 1e-16) return Phi;
        if (it > 8 && change > prev_change)
            throw McfError(ErrorCode::mu_condition,
                           "parameter-map inversion does not contract (mu condition violated)");
        prev_change = change;
    }
    return Phi;
}

}  // namespace

VfRenormResult renorm_run(const SeriesV& v_field, const CFRun& cf, const VfRenormConfig& cfg,
                          int grid_m, const std::vector<double>& s_samples) {
    if (static_cast<int>(cf.steps.size()) < cfg.n_max + 2)
        throw McfError(ErrorCode::invalid_argument,
                       "continued-fraction run too short for n_max (need n_max + 2 steps)");
    auto sd = extract_step_data(cf);
    int d = sd[0].d;
    TruncSpec spec{d, cfg.K, cfg.D, cfg.prune_rel};
    if (!(v_field.spec == spec))
        throw McfError(ErrorCode::invalid_argument, "input field truncation spec mismatch");

    VfRenormResult out;

    // step 0: X = X0_0 + (v - omega); R_0 = U_0
    VectorField X;
    X.base = base_of(sd[0]);
    {
        Builder<CVec> b(spec);
        for (const auto& [k, c] : v_field.terms) b.add_key(k, c);
        CVec mo;
        for (int i = 0; i < d; i++) mo[i] = -sd[0].omega[static_cast<size_t>(i)];
        b.add(Mode{}, mo);
        X.f = b.finish();
    }
    double a0 = sd[0].sigma * (0.5 - cfg.b0) * std::abs(sd[0].gamma) / sd[0].norm_M;
    X.window = Window::vf(cfg.rho0, a0, cfg.b0);
    out.input_norm = weighted_norm(X.f, X.window, false);

    ElimOptions elim_opt = cfg.elim;
    elim_opt.permissive = !cfg.strict_smallness;

    auto run_elimination = [&](const VectorField& Xin, const StepData& s) {
        ResonanceCone cone{d, s.omega, s.sigma, -1};
        return eliminate(Xin, cone, elim_opt);
    };

    {
        ElimResult e0 = run_elimination(X, sd[0]);
        VfStepState st;
        st.n = 0;
        st.X = e0.X_plus;
        st.rho = cfg.rho0;
        st.a = a0;
        st.b = cfg.b0;
        st.perturbation_norm = weighted_norm(e0.X_plus.f, X.window, false);
        st.elim_residual = e0.residual;
        st.u_norm_primed = e0.u_norm_primed;
        st.bound_42 = e0.bound_42;
        st.used_homotopy = e0.used_homotopy;
        st.newton_defects = e0.defects;
        st.u = e0.u;
        st.trunc_loss = e0.trunc.loss;
        out.states.push_back(std::move(st));
    }

    Sequences seq = build_sequences(sd, cfg);
    out.cK = out.states[0].perturbation_norm / seq.Theta[0];
    out.states[0].Theta = seq.Theta[0];
    out.states[0].cutoff_factor = 1;

    for (int n = 1; n <= cfg.n_max; n++) {
        const StepData& prev = sd[static_cast<size_t>(n) - 1];
        const StepData& cur = sd[static_cast<size_t>(n)];
        const VfStepState& last = out.states.back();

        VfStepState st;
        st.n = n;
        st.rho = seq.rho[static_cast<size_t>(n)];
        st.Theta = seq.Theta[static_cast<size_t>(n)];
        st.cutoff_factor = seq.phi_cut[static_cast<size_t>(n)];

        // window update per Eq. (control on r), with the measured zero mode
        {
            SeriesV f0_prev = zero_mode(last.X.f);
            double mu_meas = weighted_norm(f0_prev, last.X.window, false);
            double C_prev = 1 + std::abs(prev.gamma) * prev.norm_M_inv;
            st.b = last.b - C_prev * mu_meas;
            if (st.b <= 0.01)
                throw McfError(ErrorCode::schedule_error,
                               "parameter disc height b_n collapsed; perturbation too "
                               "large for this schedule");
            double a_budget = std::exp(d * cur.dt) * (last.a - C_prev * mu_meas);
            st.a = std::min(seq.a[static_cast<size_t>(n)], a_budget);
            if (st.a <= 0)
                throw McfError(ErrorCode::domain_shrink,
                               "parameter disc radius a_n exhausted by the zero mode");
        }

        // rho' budget check (Lemma margin): rho'_n <= rho_{n-1} / A_{n-1} - delta
        double rho_pp = st.rho + cfg.nu;  // after cutoff
        double rho_p = rho_pp + std::log(st.cutoff_factor);
        if (rho_p > last.rho / prev.A - cfg.delta + 1e-9)
            throw McfError(ErrorCode::analyticity_exhausted,
                           "rho' exceeds the contraction budget at step " + std::to_string(n));

        TruncationLog log;
        double mu_bound = out.cK * seq.Theta[static_cast<size_t>(n) - 1];
        st.Phi = parameter_map(last.X, prev, cur, mu_bound, false, &log);

        // verify Phi maps the new polydisc into the previous one (corners)
        for (const auto& y : window_corners(d, st.a, st.b)) {
            std::array<double, kMaxD> x0{};
            double head = 0;
            cplx tail(0, 0);
            for (int j = 0; j < d; j++) {
                cplx img = eval(st.Phi[static_cast<size_t>(j)], x0, y);
                if (j < d - 1)
                    head += std::abs(img);
                else
                    tail = img;
            }
            if (head > last.a * (1 + 1e-9) || std::abs(tail) > last.b * (1 + 1e-9))
                throw McfError(ErrorCode::domain_shrink,
                               "parameter map image escapes the previous polydisc");
        }

        // rescale: modes k -> T^{-t} k, coefficients -> eta T c, y -> Phi(y)
        VectorField Xn;
        Xn.base = base_of(cur);
        Xn.window = Window::vf(st.rho, st.a, st.b);
        {
            SeriesV fm = nonzero_modes(last.X.f);
            double fm_norm = weighted_norm(fm, last.X.window, false);
            auto Tarr = to_arr(to_double(cur.T));
            for (auto& [k, c] : fm.terms) c = matvec_cvec(Tarr, c, d) * cplx(cur.eta, 0);
            const Mat<big_int>& Ti = cur.Tinv;
            auto kmap = [&](const Mode& m) -> std::optional<Mode> {
                Mode r = m;
                for (int i = 0; i < d; i++) {
                    big_int acc(0);
                    for (int j = 0; j < d; j++)
                        acc += Ti(j, i) * m.k[static_cast<size_t>(j)];  // (T^{-1})^t k
                    if (acc < -2000 || acc > 2000) return std::nullopt;
                    r.k[static_cast<size_t>(i)] = static_cast<int>(acc);
                }
                return r;
            };
            Xn.f = pullback<CVec>(fm, kmap, &st.Phi, &log, &Xn.window);
            st.rescale_norm_bound =
                std::abs(cur.eta) * cur.norm_T * (1 + 2 * M_PI / cfg.delta) * fm_norm;
            st.rescale_norm_actual = weighted_norm(Xn.f, Window::vf(rho_p, st.a, st.b), true);
            if (st.rescale_norm_actual > st.rescale_norm_bound * (1 + 1e-9) + log.loss)
                throw McfError(ErrorCode::schedule_error,
                               "rescale norm bound violated at step " + std::to_string(n));
        }

        // eliminate the far-from-resonance modes of the new cone
        ElimResult en = run_elimination(Xn, cur);
        st.X = en.X_plus;
        st.perturbation_norm = weighted_norm(en.X_plus.f, Xn.window, false);
        st.elim_residual = en.residual;
        st.u_norm_primed = en.u_norm_primed;
        st.bound_42 = en.bound_42;
        st.used_homotopy = en.used_homotopy;
        st.newton_defects = en.defects;
        st.u = en.u;
        st.trunc_loss = log.loss + en.trunc.loss;
        out.states.push_back(std::move(st));
    }

    // envelope constant K: perturbation_norm <= K Theta_n * input_norm
    out.K_envelope = 0;
    for (const auto& st : out.states)
        if (out.input_norm > 0)
            out.K_envelope = std::max(out.K_envelope,
                                      st.perturbation_norm / (st.Theta * out.input_norm));
    for (int n = 1; n <= cfg.n_max; n++)
        out.B_script += seq.B[static_cast<size_t>(n) - 1] *
                            std::log(seq.phi_cut[static_cast<size_t>(n)]) +
                        (cfg.delta + cfg.nu) * seq.B[static_cast<size_t>(n) - 1];

    // ---- conjugacy assembly -----------------------------------------------

    ConjugacyResult& conj = out.conjugacy;
    conj.grid_m = grid_m;
    conj.s_samples = s_samples;
    int n_max = cfg.n_max;

    auto p_telescope = [&](double s) {
        // p_k for k = 1..n_max+1 (p_{n_max+1} = y_s)
        std::vector<std::array<cplx, kMaxD>> p(static_cast<size_t>(n_max) + 2);
        std::array<cplx, kMaxD> ys{};
        ys[static_cast<size_t>(d - 1)] = s;
        p[static_cast<size_t>(n_max) + 1] = ys;
        std::array<double, kMaxD> x0{};
        for (int k = n_max; k >= 1; k--) {
            const auto& Phi = out.states[static_cast<size_t>(k)].Phi;
            std::array<cplx, kMaxD> img{};
            for (int j = 0; j < d; j++)
                img[static_cast<size_t>(j)] =
                    eval(Phi[static_cast<size_t>(j)], x0, p[static_cast<size_t>(k) + 1]);
            p[static_cast<size_t>(k)] = img;
        }
        return p;
    };

    for (double s : s_samples) {
        auto p = p_telescope(s);
        // chart adjustment: the input couples y through gamma0^{-1} M0 y
        std::array<double, kMaxD> pt{};
        for (int i = 0; i < d; i++) {
            cplx acc(0, 0);
            for (int j = 0; j < d; j++)
                acc += sd[0].M[static_cast<size_t>(i)][static_cast<size_t>(j)] / sd[0].gamma *
                       p[1][static_cast<size_t>(j)];
            pt[static_cast<size_t>(i)] = acc.real();
            conj.reality_defect = std::max(conj.reality_defect, std::abs(acc.imag()));
        }
        conj.p_samples.push_back(pt);
        if (s == 0.0) conj.p0 = pt;
    }

    // h at s = 0 on the grid
    {
        auto p = p_telescope(0.0);
        int N = 1 << grid_m;
        std::size_t total = grid::grid_size(d, N);
        conj.h_values.assign(total, {});
        std::vector<double> imag_defect(total, 0.0);
        kernels::grid_map(total, [&](std::size_t idx) {
            auto xg = grid::grid_point(d, N, idx);
            std::array<cplx, kMaxD> z{};
            for (int i = 0; i < d; i++) z[static_cast<size_t>(i)] = xg[static_cast<size_t>(i)];
            for (int k = n_max; k >= 0; k--) {
                const auto& stk = out.states[static_cast<size_t>(k)];
                const Mat<big_int>& P = sd[static_cast<size_t>(k)].P;
                const Mat<big_int>& Pi = sd[static_cast<size_t>(k)].Pinv;
                // xk = P z (mod 1 is safe: u is periodic)
                std::array<double, kMaxD> xk{};
                double imag_here = 0;
                for (int i = 0; i < d; i++) {
                    cplx acc(0, 0);
                    for (int j = 0; j < d; j++)
                        acc += static_cast<double>(P(i, j)) * z[static_cast<size_t>(j)];
                    xk[static_cast<size_t>(i)] = acc.real();
                    imag_here = std::max(imag_here, std::abs(acc.imag()));
                }
                CVec uval = eval(stk.u, xk, p[static_cast<size_t>(k) + 1]);
                for (int i = 0; i < d; i++) {
                    cplx acc(0, 0);
                    for (int j = 0; j < d; j++)
                        acc += static_cast<double>(Pi(i, j)) * uval[j];
                    z[static_cast<size_t>(i)] += acc;
                }
                imag_defect[idx] = std::max(imag_defect[idx], imag_here);
            }
            for (int i = 0; i < d; i++) {
                conj.h_values[idx][static_cast<size_t>(i)] = z[static_cast<size_t>(i)].real();
                imag_defect[idx] = std::max(imag_defect[idx], std::abs(z[static_cast<size_t>(i)].imag()));
            }
        });
        for (double v : imag_defect) conj.reality_defect = std::max(conj.reality_defect, v);

        // fit the periodic part per component
        conj.h_fit.clear();
        for (int i = 0; i < d; i++) {
            std::vector<cplx> vals(total);
            for (std::size_t idx = 0; idx < total; idx++) {
                auto xg = grid::grid_point(d, N, idx);
                double per = conj.h_values[idx][static_cast<size_t>(i)] - xg[static_cast<size_t>(i)];
                vals[idx] = per;
                conj.isotopy_sup = std::max(conj.isotopy_sup, std::abs(per));
            }
            conj.h_fit.push_back(grid::fit_periodic(d, N, vals));
        }
    }

    auto stats = conjugacy_residual(v_field, conj, conj.p0, sd[0].omega, 0.0, grid_m);
    conj.residual_max = stats.max;
    conj.residual_mean = stats.mean;
    return out;
}

ResidualStats conjugacy_residual(const SeriesV& v_field, const ConjugacyResult& conj,
                                 const std::array<double, ser::kMaxD>& p,
                                 const std::array<double, ser::kMaxD>& omega, double s,
                                 int grid_m) {
    int d = v_field.spec.d;
    int N = 1 << grid_m;
    std::size_t total = grid::grid_size(d, N);
    if (conj.h_values.size() != total)
        throw McfError(ErrorCode::invalid_argument, "conjugacy grid does not match grid_m");
    ResidualStats stats;
    stats.per_point.assign(total, 0.0);
    std::vector<int> singular(total, 0);
    kernels::grid_map(total, [&](std::size_t idx) {
        auto xg = grid::grid_point(d, N, idx);
        // Dh(x) w = w + sum fit-derivs; jacobian determinant check
        std::array<double, ser::kMaxD> w{};
        for (int i = 0; i < d; i++) w[static_cast<size_t>(i)] = (1 + s) * omega[static_cast<size_t>(i)];
        std::array<double, ser::kMaxD> lhs{};
        for (int i = 0; i < d; i++) {
            cplx dv = conj.h_fit[static_cast<size_t>(i)].eval_deriv(xg, w);
            lhs[static_cast<size_t>(i)] = w[static_cast<size_t>(i)] + dv.real();
        }
        // jacobian singularity diagnostic (diagonal dominance proxy): det of
        // I + D(periodic part)
        {
            Mat<double> J(d, d);
            for (int i = 0; i < d; i++)
                for (int j = 0; j < d; j++) {
                    std::array<double, ser::kMaxD> ej{};
                    ej[static_cast<size_t>(j)] = 1;
                    J(i, j) = (i == j ? 1.0 : 0.0) +
                              conj.h_fit[static_cast<size_t>(i)].eval_deriv(xg, ej).real();
                }
            if (std::abs(determinant(J)) < 1e-8) singular[idx] = 1;
        }
        // rhs: (v + p)(h(x))
        std::array<double, ser::kMaxD> hx{};
        for (int i = 0; i < d; i++) hx[static_cast<size_t>(i)] = conj.h_values[idx][static_cast<size_t>(i)];
        std::array<cplx, ser::kMaxD> y0{};
        CVec vv = eval(v_field, hx, y0);
        double r2 = 0;
        for (int i = 0; i < d; i++) {
            double diff = lhs[static_cast<size_t>(i)] -
                          (vv[i].real() + p[static_cast<size_t>(i)]);
            r2 += diff * diff;
        }
        stats.per_point[idx] = std::sqrt(r2);
    });
    for (int v : singular) stats.singular_jacobian_samples += v;
    for (double v : stats.per_point) stats.max = std::max(stats.max, v);
    stats.mean = kernels::sum_pairwise(stats.per_point) / static_cast<double>(total);
    return stats;
}

}  // namespace mcf::vf
