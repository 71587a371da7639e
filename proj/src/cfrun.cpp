#include "mcf/cfrun.hpp"

#include <cmath>

#include "mcf/cone.hpp"

namespace mcf {

namespace {

big_float rel_diff(const big_float& a, const big_float& b) {
    big_float scale = abs(a) > abs(b) ? abs(a) : abs(b);
    if (scale == 0) return big_float(0);
    return abs(a - b) / scale;
}

void fill_norms(CFStep& st) {
    st.norm_M = norm_frobenius(st.M_red.entries);
    st.norm_M_inv = norm_frobenius(inverse(st.M_red.entries));
    st.norm_P = norm_frobenius(st.P.to_float());
    st.norm_P_inv = norm_frobenius(st.P.inverse().to_float());
    st.norm_T = norm_frobenius(st.T.to_float());
    st.norm_T_inv = norm_frobenius(st.T.inverse().to_float());
}

// builds the step at time t given the previous one; returns nullopt if the
// reduction did not move (merged gap)
std::optional<CFStep> build_step(const LatticeMatrix& M0, const FlowParams& flow,
                                 const CFStep& prev, const big_float& t, double sigma,
                                 const CFOptions& opt) {
    int d = M0.dim();
    LatticeMatrix N = geodesic_flow(M0, t, flow);
    ReductionResult red = reduce_to_fundamental(N, opt.reduction);

    // rational frequencies collapse delta along the orbit whether or not the
    // reduction moves, so test it before merging
    LatticeMinResult dm = lattice_min(red.M_red, opt.enumeration_bound);
    if (dm.value < big_float(opt.rational_delta_floor))
        throw McfError(ErrorCode::rational_frequency,
                       "delta(M) collapsed to " + dm.value.str(3) +
                           ": frequency is rational or nearly so");

    if (red.P == prev.P) return std::nullopt;

    CFStep st;
    st.t = t;
    st.dt = t - prev.t;
    st.P = red.P;
    st.T = red.P * prev.P.inverse();
    st.M_red = red.M_red;
    st.sigma_n = sigma;

    // exact cocycle by construction: P^{(n)} = T^{(n)} P^{(n-1)}
    const LatticeDecomposition& dec = *st.M_red.decomposition;
    st.alpha_n = FrequencyVector(dec.alpha);
    st.gamma_n = dec.gamma;

    big_float rd = flow.r[d - 1];
    big_float gamma0 = M0.decomposition ? M0.decomposition->gamma : big_float(1);

    // reduction soundness: M_red = P M0 E^t, relative to the magnitudes that
    // enter the product (P entries grow like e^{O(t)})
    {
        Mat<big_float> lhs = st.P.to_float() * N.entries;
        big_float err(0);
        for (size_t i = 0; i < lhs.a.size(); i++) {
            big_float e = abs(lhs.a[i] - st.M_red.entries.a[i]);
            if (e > err) err = e;
        }
        big_float scale = norm_frobenius(st.P.to_float()) * norm_frobenius(N.entries);
        if (scale < 1) scale = 1;
        big_float tol = pow(big_float(10), -static_cast<int>(precision_decimal_digits() / 2));
        if (err > tol * scale)
            throw McfError(ErrorCode::precision_exhausted,
                           "reduction identity lost " + err.str(3) + "; raise precision_bits");
    }

    // gamma^{(n)} three ways: chart, Eq. (gamman), Eq. (gamman2)
    {
        Vec<big_int> p21 = st.P.row21();
        big_float den = big_float(st.P.scalar22());
        const Vec<big_float>& alpha0 = M0.decomposition->alpha;
        for (int j = 0; j < d - 1; j++) den += big_float(p21[j]) * alpha0[j];
        big_float gamma_P = den * exp(rd * t) * gamma0;

        Vec<big_int> t21 = st.T.row21();
        big_float den2 = big_float(st.T.scalar22());
        for (int j = 0; j < d - 1; j++) den2 += big_float(t21[j]) * prev.alpha_n.alpha[j];
        big_float gamma_T = den2 * exp(rd * st.dt) * prev.gamma_n;

        big_float tol(opt.identity_tol);
        if (rel_diff(st.gamma_n, gamma_P) > tol || rel_diff(st.gamma_n, gamma_T) > tol)
            throw McfError(ErrorCode::precision_exhausted,
                           "gamma recursion mismatch; raise precision_bits");
    }

    st.lambda_n = (gamma0 / st.gamma_n) * exp(rd * t);
    st.eta_n = st.lambda_n / prev.lambda_n;

    // the three expressions for omega^{(n)} (Eq. eq def omega n)
    {
        Vec<big_float> w1(d);
        for (int i = 0; i < d; i++) w1[i] = st.M_red.entries(i, d - 1) / st.gamma_n;
        Vec<big_float> omega0(d);
        for (int i = 0; i < d - 1; i++) omega0[i] = M0.decomposition->alpha[i];
        omega0[d - 1] = 1;
        Vec<big_float> w2 = st.P.to_float() * omega0;
        for (int i = 0; i < d; i++) w2[i] *= st.lambda_n;
        Vec<big_float> w3 = st.T.to_float() * prev.alpha_n.omega;
        for (int i = 0; i < d; i++) w3[i] *= st.eta_n;
        big_float tol(opt.identity_tol);
        for (int i = 0; i < d; i++)
            if (rel_diff(w1[i], w2[i]) > tol || rel_diff(w1[i], w3[i]) > tol)
                throw McfError(ErrorCode::precision_exhausted,
                               "omega expressions disagree; raise precision_bits");
    }

    st.delta_M = dm.value;
    st.delta_certified = dm.certified;

    fill_norms(st);
    st.omega_perp_contraction = omega_perp_contraction(st.T, prev.alpha_n);
    return st;
}

}  // namespace

CFRun continued_fraction_run(const FrequencyVector& alpha, const Schedule& schedule_in,
                             const CFOptions& opt) {
    int d = alpha.dim();
    CFRun run;
    run.alpha0 = alpha;
    run.flow = FlowParams::standard(d);
    run.flow.validate();
    run.schedule = schedule_in;
    run.schedule.d = d;
    if (run.schedule.times.empty()) run.schedule.validate_and_build();

    LatticeMatrix M0 = embed_frequency(alpha);

    CFStep st0;
    st0.n = 0;
    st0.t = 0;
    st0.dt = 0;
    st0.P = UnimodularMatrix::identity(d);
    st0.T = UnimodularMatrix::identity(d);
    st0.M_red = M0;
    st0.alpha_n = alpha;
    st0.gamma_n = 1;
    st0.lambda_n = 1;
    st0.eta_n = 1;
    st0.sigma_n = run.schedule.sigmas.empty() ? run.schedule.sigma0 : run.schedule.sigmas[0];
    LatticeMinResult dm0 = lattice_min(M0, opt.enumeration_bound);
    st0.delta_M = dm0.value;
    st0.delta_certified = dm0.certified;
    fill_norms(st0);
    st0.omega_perp_contraction = 0;
    run.steps.push_back(st0);

    if (run.schedule.mode == ScheduleMode::adaptive) {
        // grow each gap until the reduction moves and the measured cone
        // contraction meets the target, then bisect to the smallest such gap
        big_float t = 0;
        run.schedule.times.assign(1, big_float(0));
        run.schedule.sigmas.assign(1, run.schedule.sigma0);
        for (int n = 1; n <= run.schedule.n_max; n++) {
            const CFStep& prev = run.steps.back();
            std::optional<CFStep> accepted;
            double sigma_prev = prev.sigma_n;
            auto attempt = [&](double dt_try) -> std::optional<CFStep> {
                double sig = std::exp(-run.schedule.c * dt_try);
                auto cand = build_step(M0, run.flow, prev, t + big_float(dt_try), sig, opt);
                if (!cand) return std::nullopt;
                auto cc = resonance_contraction(cand->T, prev.alpha_n, sigma_prev,
                                                opt.cone_samples, opt.cone_integer_radius,
                                                opt.rng_seed + static_cast<unsigned>(n));
                if (cc.A_measured > run.schedule.a_target) return std::nullopt;
                return cand;
            };
            // A(dt) is not monotone (hyperbolic contraction vs cone-boundary
            // growth), so walk a grid upward to the first feasible gap, then
            // bisect down to the smallest one.  Gaps are floored so that
            // sigma_n = e^{-c dt} never widens the cone, else the next step
            // starts from an infeasible width.
            double step = run.schedule.phi / 2;
            double dt_floor = run.schedule.c > 0 ? std::log(1.0 / sigma_prev) / run.schedule.c : 0;
            double lo = dt_floor, hi = 0;
            for (int grid = 1; grid <= 64; grid++) {
                double dt_try = dt_floor + step * grid;
                accepted = attempt(dt_try);
                if (accepted) { hi = dt_try; lo = dt_try - step; break; }
            }
            if (!accepted)
                throw McfError(ErrorCode::schedule_error,
                               "adaptive schedule could not reach the contraction target");
            for (int it = 0; it < 10 && hi - lo > 1e-3; it++) {
                double mid = (lo + hi) / 2;
                auto cand = attempt(mid);
                if (cand) { hi = mid; accepted = cand; } else { lo = mid; }
            }
            CFStep st = *accepted;
            st.n = n;
            t = st.t;
            run.schedule.times.push_back(st.t);
            run.schedule.sigmas.push_back(st.sigma_n);
            st.hyp_exponent = run.schedule.hyp_exponent(n);
            run.steps.push_back(st);
        }
    } else {
        int emitted = 0;
        int merged = 0;
        for (size_t j = 1; j < run.schedule.times.size(); j++) {
            const CFStep& prev = run.steps.back();
            auto st = build_step(M0, run.flow, prev, run.schedule.times[j],
                                 run.schedule.sigmas[j], opt);
            if (!st) { merged++; continue; }
            st->n = ++emitted;
            st->merged_gaps = merged;
            merged = 0;
            double tprev = static_cast<double>(prev.t);
            double dtn = static_cast<double>(st->dt);
            st->hyp_exponent = (1 - run.schedule.theta) * dtn - d * run.schedule.theta * tprev;
            run.steps.push_back(*st);
        }
    }
    return run;
}

void compute_diagnostics(CFRun& run, const CFOptions& opt) {
    CFDiagnostics& dg = run.diag;
    int d = run.alpha0.dim();
    double theta = run.schedule.theta;
    size_t N = run.steps.size();
    if (N < 2) return;

    auto envelope_max = [&](auto value_of, double rate_of_t, double rate_of_dt) {
        double best = 0;
        for (size_t n = 1; n < N; n++) {
            const CFStep& st = run.steps[n];
            double t = static_cast<double>(st.t), dtn = static_cast<double>(st.dt);
            double v = static_cast<double>(value_of(st)) *
                       std::exp(-(rate_of_t * t + rate_of_dt * dtn));
            if (v > best) best = v;
        }
        return best;
    };

    dg.c1 = envelope_max([](const CFStep& s) { return s.norm_M; }, (d - 1) * theta, 0);
    dg.c2 = envelope_max([](const CFStep& s) { return s.norm_M_inv; }, theta, 0);
    dg.c3 = envelope_max([](const CFStep& s) { return s.norm_P; }, d * theta + 1 - theta, 0);
    dg.c4 = envelope_max([](const CFStep& s) { return s.norm_P_inv; }, d - 1 + theta, 0);
    dg.c5 = envelope_max([](const CFStep& s) { return s.norm_T; }, d * theta, 1 - theta);
    dg.c6 = envelope_max([](const CFStep& s) { return s.norm_T_inv; }, d * theta,
                         (d - 1) * (1 - theta));

    double c7 = -1, Cp = -1, dfloor = -1, Lam = 0;
    for (size_t n = 1; n < N; n++) {
        const CFStep& st = run.steps[n];
        double t = static_cast<double>(st.t);
        double g = std::abs(static_cast<double>(st.gamma_n)) *
                   std::exp(theta * (d * static_cast<double>(d) / (1 - theta) - (d - 1)) * t);
        if (c7 < 0 || g < c7) c7 = g;
        double dl = static_cast<double>(st.delta_M) * std::exp(theta * t);
        if (Cp < 0 || dl < Cp) Cp = dl;
        double dv = static_cast<double>(st.delta_M);
        if (dfloor < 0 || dv < dfloor) dfloor = dv;
        double lam_n = 2 * static_cast<double>(st.omega_perp_contraction) *
                       std::exp(st.hyp_exponent);
        if (lam_n > Lam) Lam = lam_n;
    }
    dg.c7 = c7;
    dg.C_prime = Cp;
    dg.delta_floor = dfloor;
    dg.Lambda = Lam;

    // stability: constants re-fit on the first half must not be blown up by
    // the second half (factor 2 slack); otherwise the schedule is flagged
    auto half_check = [&](const char* name, auto value_of, double rate_of_t, double rate_of_dt) {
        double first = 0, full = 0;
        size_t half = 1 + (N - 1) / 2;
        for (size_t n = 1; n < N; n++) {
            const CFStep& st = run.steps[n];
            double t = static_cast<double>(st.t), dtn = static_cast<double>(st.dt);
            double v = static_cast<double>(value_of(st)) *
                       std::exp(-(rate_of_t * t + rate_of_dt * dtn));
            if (n < half && v > first) first = v;
            if (v > full) full = v;
        }
        if (first > 0 && full > 2 * first) {
            dg.envelopes_ok = false;
            dg.violations.push_back(std::string(name) + " envelope grows along the run");
        }
    };
    half_check("M", [](const CFStep& s) { return s.norm_M; }, (d - 1) * theta, 0);
    half_check("M_inv", [](const CFStep& s) { return s.norm_M_inv; }, theta, 0);
    half_check("P", [](const CFStep& s) { return s.norm_P; }, d * theta + 1 - theta, 0);
    half_check("P_inv", [](const CFStep& s) { return s.norm_P_inv; }, d - 1 + theta, 0);
    half_check("T", [](const CFStep& s) { return s.norm_T; }, d * theta, 1 - theta);
    half_check("T_inv", [](const CFStep& s) { return s.norm_T_inv; }, d * theta,
               (d - 1) * (1 - theta));

    // per-step resonance contraction with the analytic bound
    for (size_t n = 0; n + 1 < N; n++) {
        CFStep& st = run.steps[n];
        const CFStep& nxt = run.steps[n + 1];
        HypData hyp;
        hyp.Lambda = dg.Lambda;
        hyp.c6 = dg.c6;
        hyp.theta = theta;
        hyp.dt = static_cast<double>(nxt.dt);
        hyp.t_prev = static_cast<double>(st.t);
        hyp.d = d;
        auto cc = resonance_contraction(nxt.T, st.alpha_n, st.sigma_n, opt.cone_samples,
                                        opt.cone_integer_radius,
                                        opt.rng_seed + 1000 + static_cast<unsigned>(n), &hyp);
        st.A_measured = cc.A_measured;
        st.A_bound = cc.A_bound;
        if (cc.A_bound > 0 && cc.A_measured > cc.A_bound * (1 + 1e-6)) {
            dg.envelopes_ok = false;
            dg.violations.push_back("A_" + std::to_string(n) + " exceeds its analytic bound");
        }
    }
}

}  // namespace mcf
