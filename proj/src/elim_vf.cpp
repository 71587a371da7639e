#include "mcf/elim_vf.hpp"

#include <cmath>

namespace mcf::vf {

namespace {

std::vector<SeriesC> components_of(const SeriesV& u, int d) {
    std::vector<SeriesC> comps(static_cast<size_t>(d));
    for (int j = 0; j < d; j++) comps[static_cast<size_t>(j)] = component(u, j);
    return comps;
}

// sum_j (d u / d x_j) * v_j
SeriesV jacobian_apply(const SeriesV& u, const SeriesV& v, TruncationLog* log, const Window& w) {
    int d = u.spec.d;
    SeriesV acc;
    acc.spec = u.spec;
    for (int j = 0; j < d; j++) {
        SeriesC vj = component(v, j);
        if (vj.empty()) continue;
        acc = add(acc, mul(vj, dx(u, j), log, &w));
    }
    return acc;
}

// solve (I + D_x u) out = rhs by the Neumann series out = sum (-D_x u)^m rhs,
// stopping once the layer norm falls below rel_tol * |rhs|
SeriesV inv_jacobian_apply(const SeriesV& u, const SeriesV& rhs, TruncationLog* log,
                           const Window& w, int iters, double rel_tol) {
    SeriesV out = rhs;
    SeriesV layer = rhs;
    double rhs_norm = weighted_norm(rhs, w, false);
    for (int m = 0; m < iters; m++) {
        layer = scale(jacobian_apply(u, layer, log, w), ser::cplx(-1, 0));
        if (layer.empty()) break;
        out = add(out, layer);
        if (weighted_norm(layer, w, false) < rel_tol * rhs_norm) break;
    }
    return out;
}

struct Operator {
    const VectorField& X;
    const ResonanceCone& cone;
    const ElimOptions& opt;
    TruncationLog* log;
    SeriesV x0_series;
    std::vector<SeriesC> fdx;  // d f / d x_j, cached

    Operator(const VectorField& Xin, const ResonanceCone& c, const ElimOptions& o,
             TruncationLog* l)
        : X(Xin), cone(c), opt(o), log(l) {
        x0_series = X.base.as_series(X.f.spec);
    }

    SeriesV project_minus(const SeriesV& g) const {
        auto [plus, minus] = project_resonant(g, cone);
        (void)plus;
        return minus;
    }

    // f o U by Taylor layers in u
    SeriesV f_of_U(const SeriesV& u) const {
        auto comps = components_of(u, X.f.spec.d);
        return compose_shift(X.f, &comps, nullptr, opt.exp_tol, log, &X.window);
    }

    SeriesV inv_jac(const SeriesV& u, const SeriesV& rhs) const {
        return inv_jacobian_apply(u, rhs, log, X.window, 24);
    }

    // full transformed field (I + D_x u)^{-1} (X0 + f o U)
    SeriesV transformed(const SeriesV& u) const {
        SeriesV W = add(x0_series, f_of_U(u));
        return inv_jacobian_apply(u, W, log, X.window, 24);
    }

    SeriesV F(const SeriesV& u) const { return project_minus(transformed(u)); }

    // (D_x f) o U applied to h, via the chain rule
    // (D_x f)(U) h = D_x (f o U) [(I + D_x u)^{-1} h]
    SeriesV dfU_apply(const SeriesV& u, const SeriesV& fU, const SeriesV& h) const {
        int d = X.f.spec.d;
        SeriesV hh = inv_jacobian_apply(u, h, log, X.window, 24);
        SeriesV acc;
        acc.spec = X.f.spec;
        for (int j = 0; j < d; j++) {
            SeriesC hj = component(hh, j);
            if (hj.empty()) continue;
            acc = add(acc, mul(hj, dx(fU, j), log, &X.window));
        }
        return acc;
    }

    // DF(u) h = I^- (I+Dxu)^{-1} [(D_x f) o U h - Dx h (I+Dxu)^{-1}(X0 + f o U)]
    SeriesV DF(const SeriesV& u, const SeriesV& h, const SeriesV& W_u,
               const SeriesV& fU) const {
        SeriesV term1 = dfU_apply(u, fU, h);
        SeriesV term2 = jacobian_apply(h, W_u, log, X.window);
        SeriesV diff = sub(term1, term2);
        return project_minus(inv_jacobian_apply(u, diff, log, X.window, 24));
    }

    // frozen preconditioner DF(0)^{-1} g = -D_omega^{-1} (I - I^- fhat D_omega^{-1})^{-1} g
    SeriesV precondition(const SeriesV& g) const {
        auto dw_inv = [&](const SeriesV& s) {
            return small_divisor_inverse(s, X.base.divisor(), cone.sigma, opt.divisor_depth,
                                         opt.divisor_tol, log, &X.window);
        };
        auto fhat = [&](const SeriesV& h) {
            // fhat h = Dxf h - Dxh f
            int d = X.f.spec.d;
            SeriesV t1;
            t1.spec = X.f.spec;
            for (int j = 0; j < d; j++) {
                SeriesC hj = component(h, j);
                if (hj.empty()) continue;
                t1 = add(t1, mul(hj, dx(X.f, j), log, &X.window));
            }
            SeriesV t2 = jacobian_apply(h, X.f, log, X.window);
            return sub(t1, t2);
        };
        SeriesV w = g;
        for (int m = 0; m < 32; m++) {
            SeriesV nw = add(g, project_minus(fhat(dw_inv(w))));
            double change = weighted_norm(sub(nw, w), X.window, false);
            w = nw;
            if (change < 1e-20 * std::max(1.0, weighted_norm(g, X.window, false))) break;
        }
        return scale(dw_inv(w), cplx(-1, 0));
    }
};

}  // namespace

SeriesV BaseField::as_series(const TruncSpec& spec) const {
    Builder<CVec> b(spec);
    CVec c0;
    for (int i = 0; i < d; i++) c0[i] = omega[static_cast<size_t>(i)];
    b.add(Mode{}, c0);
    for (int j = 0; j < d; j++) {
        Mode m;
        m.nu[static_cast<size_t>(j)] = 1;
        CVec cj;
        for (int i = 0; i < d; i++) cj[i] = A[static_cast<size_t>(i)][static_cast<size_t>(j)];
        b.add(m, cj);
    }
    return b.finish();
}

VectorField pullback_shift(const VectorField& X, const SeriesV& u, const ElimOptions& opt,
                           TruncationLog* log) {
    Operator op(X, ResonanceCone{X.base.d, X.base.omega, 1e300, -1}, opt, log);
    SeriesV W = op.transformed(u);
    VectorField out = X;
    out.f = sub(W, op.x0_series);
    return out;
}

ElimResult eliminate(const VectorField& X_in, const ResonanceCone& cone, const ElimOptions& opt) {
    ElimResult res;
    VectorField X = X_in;
    X.f.spec.prune_rel = std::max(X.f.spec.prune_rel, opt.prune_rel);
    int d = X.base.d;

    double omega_norm = 0;
    for (int i = 0; i < d; i++)
        omega_norm += X.base.omega[static_cast<size_t>(i)] * X.base.omega[static_cast<size_t>(i)];
    omega_norm = std::sqrt(omega_norm);
    if (!(cone.sigma < omega_norm))
        throw McfError(ErrorCode::invalid_argument, "sigma must be below |omega|");

    Operator op(X, cone, opt, &res.trunc);

    double fnorm_primed = weighted_norm(X.f, X.window, true);
    auto [fplus, fminus] = project_resonant(X.f, cone);
    double fminus_norm = weighted_norm(fminus, X.window, false);
    res.bound_42 = 42.0 / cone.sigma * fminus_norm;

    // smallness gate of the elimination theorem (nu margin taken as sigma/2pi
    // scale-free surrogate when the caller tracks no explicit nu)
    double nu_margin = cone.sigma;
    res.epsilon_n = cone.sigma / 42.0 *
                    std::min(nu_margin / (4 * M_PI), cone.sigma / (72.0 * omega_norm));
    res.epsilon_gate_ok = fnorm_primed < res.epsilon_n;
    if (!res.epsilon_gate_ok && !opt.permissive)
        throw McfError(ErrorCode::elimination_failure,
                       "perturbation exceeds the smallness gate (strict mode)");

    double floor = std::max(fminus_norm, 1e-30);

    SeriesV u;
    u.spec = X.f.spec;
    bool converged = false;

    if (!fminus.empty()) {
        // Newton with frozen preconditioner as inner solver
        for (int it = 0; it < opt.max_iter; it++) {
            SeriesV fU = op.f_of_U(u);
            SeriesV W_u = op.inv_jac(u, add(op.x0_series, fU));
            SeriesV Fu = op.project_minus(W_u);
            double defect = weighted_norm(Fu, X.window, false);
            res.defects.push_back(defect);
            if (defect <= opt.tol * floor) {
                converged = true;
                break;
            }
            SeriesV delta = scale(op.precondition(Fu), cplx(-1, 0));
            for (int in = 0; in < opt.inner_iter; in++) {
                SeriesV r = add(op.DF(u, delta, W_u, fU), Fu);
                double rn = weighted_norm(r, X.window, false);
                if (rn <= 0.01 * opt.tol * floor || rn <= 1e-4 * defect * defect / floor) break;
                delta = sub(delta, op.precondition(r));
            }
            u = add(u, delta);
            if (it > 4 && defect > 0.9 * res.defects[res.defects.size() - 2])
                break;  // stalled; try homotopy
        }

        if (!converged) {
            // homotopy ODE du/dt = -DF(u)^{-1} F(0), RK4 on [0,1]
            res.used_homotopy = true;
            SeriesV F0 = op.F(SeriesV{X.f.spec, {}});
            auto rhs = [&](const SeriesV& ut) {
                SeriesV fU = op.f_of_U(ut);
                SeriesV W_u = op.inv_jac(ut, add(op.x0_series, fU));
                // solve DF(ut) v = F0
                SeriesV v = op.precondition(F0);
                for (int in = 0; in < opt.inner_iter; in++) {
                    SeriesV r = sub(op.DF(ut, v, W_u, fU), F0);
                    if (weighted_norm(r, X.window, false) <= 1e-3 * weighted_norm(F0, X.window, false))
                        break;
                    v = sub(v, op.precondition(r));
                }
                return scale(v, cplx(-1, 0));
            };
            u = SeriesV{X.f.spec, {}};
            double h = 1.0 / opt.homotopy_steps;
            for (int s = 0; s < opt.homotopy_steps; s++) {
                SeriesV k1 = rhs(u);
                SeriesV k2 = rhs(add(u, scale(k1, cplx(h / 2, 0))));
                SeriesV k3 = rhs(add(u, scale(k2, cplx(h / 2, 0))));
                SeriesV k4 = rhs(add(u, scale(k3, cplx(h, 0))));
                SeriesV incr = add(add(k1, scale(add(k2, k3), cplx(2, 0))), k4);
                u = add(u, scale(incr, cplx(h / 6, 0)));
            }
            // polish with Newton steps
            for (int it = 0; it < opt.max_iter; it++) {
                SeriesV Fu = op.F(u);
                double defect = weighted_norm(Fu, X.window, false);
                res.defects.push_back(defect);
                if (defect <= opt.tol * floor) {
                    converged = true;
                    break;
                }
                u = sub(u, op.precondition(Fu));
            }
            if (!converged)
                throw McfError(ErrorCode::elimination_failure,
                               "Newton and homotopy both failed to reach tolerance");
        }
    } else {
        converged = true;
        res.defects.push_back(0);
    }

    SeriesV W = op.transformed(u);
    auto [Wplus, Wminus] = project_resonant(W, cone);
    res.residual = weighted_norm(Wminus, X.window, false);
    res.u = u;
    res.u_norm_primed = weighted_norm(u, X.window, true);
    res.X_plus = X;
    res.X_plus.f = sub(Wplus, op.x0_series);
    // X0 itself lives in I+ (k = 0 modes), so the subtraction is support-safe
    return res;
}

}  // namespace mcf::vf
