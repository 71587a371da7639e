#include "mcf/series_ops.hpp"

#include <omp.h>

namespace mcf::ser {

namespace {

// packed-key shift of the Fourier part; returns false when the image leaves
// the packable range or the truncation box
bool shift_key(uint64_t key, const std::array<int, kMaxD>& k, int d, const TruncSpec& spec,
               uint64_t& out) {
    Mode m = unpack(key, d);
    for (int i = 0; i < d; i++) m.k[static_cast<size_t>(i)] += k[static_cast<size_t>(i)];
    if (!spec.admits(m)) return false;
    out = pack(m, d);
    return true;
}

template <class C>
std::vector<double> weighted_values(const Series<C>& f, const Window& w, bool primed) {
    std::vector<double> vals(f.terms.size());
    int d = f.spec.d;
    for (std::size_t i = 0; i < f.terms.size(); i++) {
        Mode m = unpack(f.terms[i].first, d);
        double kn = m.k_norm2(d);
        double wt = coef_norm(f.terms[i].second) * w.nu_weight(m, d) * std::exp(w.rho * kn);
        if (primed) wt *= 1 + 2 * M_PI * kn;
        vals[i] = wt;
    }
    return vals;
}

// Dense accumulation workspace over the truncation box.  The slot index is
// monotone in the packed key, so a slot sweep emits sorted terms directly.
struct DenseIndex {
    int d, K, D;
    int kside;        // 2K+1
    std::size_t nu_radix, slots;

    explicit DenseIndex(const TruncSpec& spec)
        : d(spec.d), K(spec.K), D(spec.D), kside(2 * spec.K + 1) {
        nu_radix = static_cast<std::size_t>(D + 1);
        slots = 1;
        for (int i = 0; i < d; i++) slots *= static_cast<std::size_t>(kside);
        for (int i = 0; i < d; i++) slots *= nu_radix;
    }
    std::size_t slot(const Mode& m) const {
        std::size_t s = 0;
        for (int i = 0; i < d; i++)
            s = s * static_cast<size_t>(kside) + static_cast<size_t>(m.k[static_cast<size_t>(i)] + K);
        for (int i = 0; i < d; i++)
            s = s * nu_radix + static_cast<size_t>(m.nu[static_cast<size_t>(i)]);
        return s;
    }
    Mode mode_of(std::size_t s) const {
        Mode m;
        for (int i = d - 1; i >= 0; i--) {
            m.nu[static_cast<size_t>(i)] = static_cast<int>(s % nu_radix);
            s /= nu_radix;
        }
        for (int i = d - 1; i >= 0; i--) {
            m.k[static_cast<size_t>(i)] = static_cast<int>(s % static_cast<size_t>(kside)) - K;
            s /= static_cast<size_t>(kside);
        }
        return m;
    }
};

template <class Ca, class Cb>
auto mul_impl(const Series<Ca>& a, const Series<Cb>& b, TruncationLog* log, const Window* w) {
    using Cr = Cb;
    if (!(a.spec == b.spec))
        throw McfError(ErrorCode::invalid_argument, "series truncation specs differ");
    const std::size_t na = a.size(), nb = b.size();
    int d = a.spec.d;
    Window fallback = Window::ham(0.0, 1.0);
    const Window& win = w ? *w : fallback;

    Series<Cr> r;
    r.spec = a.spec;
    if (na == 0 || nb == 0) return r;

    // magnitude-sorted pair cutoff: pairs below prune_rel * max_a * max_b are
    // below the working floor of the result and are skipped unaccounted
    double max_a = a.max_coef_norm(), max_b = b.max_coef_norm();
    double pair_floor = a.spec.prune_rel > 0 ? a.spec.prune_rel * max_a * max_b : 0.0;
    std::vector<std::size_t> border(nb);
    for (std::size_t j = 0; j < nb; j++) border[j] = j;
    std::vector<double> bmag(nb);
    for (std::size_t j = 0; j < nb; j++) bmag[j] = coef_norm(b.terms[j].second);
    std::stable_sort(border.begin(), border.end(),
                     [&](std::size_t x, std::size_t y) { return bmag[x] > bmag[y]; });
    // per-term weighted magnitudes: |c| r^{nu} e^{rho |k|}; the product bounds
    // the weight of a dropped pair (triangle inequality on |k|)
    std::vector<double> awht(na), bwht(nb);
    if (log) {
        for (std::size_t i = 0; i < na; i++) {
            Mode m = unpack(a.terms[i].first, d);
            awht[i] = std::abs(a.terms[i].second) * win.nu_weight(m, d) *
                      std::exp(win.rho * m.k_norm2(d));
        }
        for (std::size_t j = 0; j < nb; j++) {
            Mode m = unpack(b.terms[j].first, d);
            bwht[j] = coef_norm(b.terms[j].second) * win.nu_weight(m, d) *
                      std::exp(win.rho * m.k_norm2(d));
        }
    }

    DenseIndex di(a.spec);
    bool use_dense = di.slots <= (std::size_t(1) << 22) &&
                     di.slots * sizeof(Cr) <= (std::size_t(1) << 26) &&
                     na * nb > (std::size_t(1) << 14);
    double loss = 0;

    if (use_dense) {
        // Fixed a-chunks accumulated into per-chunk dense scratch, then a
        // serial dense merge in chunk order: the per-slot summation order is
        // (a within chunk, then ascending chunk), independent of threads.
        constexpr std::size_t kChunkA = 256;
        std::size_t nchunks = (na + kChunkA - 1) / kChunkA;
        std::vector<std::vector<std::pair<uint32_t, Cr>>> parts(nchunks);
        std::vector<double> losses(nchunks, 0.0);
        int nt = kernels::parallel_enabled() ? kernels::thread_count() : 1;
        std::size_t per_thread = di.slots * (sizeof(Cr) + sizeof(uint32_t));
        while (nt > 1 && per_thread * static_cast<std::size_t>(nt) > (std::size_t(1) << 29)) nt--;

        // precomputed per-term data (b in descending-magnitude order)
        struct TermInfo {
            int32_t k[kMaxD];
            int32_t nu[kMaxD];
            int32_t k1;
            std::size_t slot;  // slot for a-terms, slot delta for b-terms
        };
        std::vector<TermInfo> ai(na), bi(nb);
        for (std::size_t i = 0; i < na; i++) {
            Mode m = unpack(a.terms[i].first, d);
            for (int c = 0; c < d; c++) {
                ai[i].k[c] = m.k[static_cast<size_t>(c)];
                ai[i].nu[c] = m.nu[static_cast<size_t>(c)];
            }
            ai[i].k1 = m.k_norm1(d);
            ai[i].slot = di.slot(m);
        }
        std::size_t zero_slot = di.slot(Mode{});
        for (std::size_t jj = 0; jj < nb; jj++) {
            Mode m = unpack(b.terms[border[jj]].first, d);
            for (int c = 0; c < d; c++) {
                bi[jj].k[c] = m.k[static_cast<size_t>(c)];
                bi[jj].nu[c] = m.nu[static_cast<size_t>(c)];
            }
            bi[jj].k1 = m.k_norm1(d);
            bi[jj].slot = di.slot(m) - zero_slot;  // signed delta via wraparound
        }

        #pragma omp parallel num_threads(nt)
        {
            std::vector<Cr> dense(di.slots, Cr{});
            std::vector<uint32_t> stamp(di.slots, 0);
            std::vector<uint32_t> touched;
            #pragma omp for schedule(dynamic)
            for (long c = 0; c < static_cast<long>(nchunks); c++) {
                uint32_t mark = static_cast<uint32_t>(c) + 1;
                std::size_t lo = static_cast<std::size_t>(c) * kChunkA;
                std::size_t hi = std::min(lo + kChunkA, na);
                touched.clear();
                double lloss = 0;
                for (std::size_t i = lo; i < hi; i++) {
                    const TermInfo& ta = ai[i];
                    const cplx& ca = a.terms[i].second;
                    double can = std::abs(ca);
                    for (std::size_t jj = 0; jj < nb; jj++) {
                        if (pair_floor > 0 && can * bmag[border[jj]] < pair_floor) break;
                        const TermInfo& tb = bi[jj];
                        bool ok = true;
                        int k1 = 0;
                        for (int cc = 0; cc < d; cc++) {
                            int ks = ta.k[cc] + tb.k[cc];
                            if (ks < -di.K || ks > di.K) { ok = false; break; }
                            k1 += ks < 0 ? -ks : ks;
                            if (ta.nu[cc] + tb.nu[cc] > di.D) { ok = false; break; }
                        }
                        // the per-axis checks guarantee the slot arithmetic
                        // cannot carry between lanes
                        if (ok && k1 <= di.K) {
                            std::size_t s = ta.slot + tb.slot;
                            if (stamp[s] != mark) {
                                stamp[s] = mark;
                                dense[s] = coef_scale(b.terms[border[jj]].second, ca);
                                touched.push_back(static_cast<uint32_t>(s));
                            } else {
                                dense[s] += coef_scale(b.terms[border[jj]].second, ca);
                            }
                        } else if (log) {
                            lloss += awht[i] * bwht[border[jj]];
                        }
                    }
                }
                std::sort(touched.begin(), touched.end());
                auto& out = parts[static_cast<size_t>(c)];
                out.reserve(touched.size());
                for (uint32_t s : touched) out.emplace_back(s, dense[s]);
                losses[static_cast<size_t>(c)] = lloss;
            }
        }
        for (double l : losses) loss += l;
        // serial dense merge in chunk order, then an ordered slot sweep
        {
            std::vector<Cr> total(di.slots, Cr{});
            std::vector<uint32_t> seen;
            std::vector<char> mark(di.slots, 0);
            for (auto& p : parts)
                for (auto& [s, v] : p) {
                    if (!mark[s]) {
                        mark[s] = 1;
                        seen.push_back(s);
                        total[s] = v;
                    } else {
                        total[s] += v;
                    }
                }
            std::sort(seen.begin(), seen.end());
            r.terms.reserve(seen.size());
            for (uint32_t s : seen) {
                if (total[s] == Cr{}) continue;
                Mode m = di.mode_of(s);
                r.terms.emplace_back(pack(m, d), total[s]);
            }
        }
    } else {
        std::vector<std::pair<uint64_t, Cr>> buf;
        auto emit_range = [&](std::size_t lo, std::size_t hi,
                              std::vector<std::pair<uint64_t, Cr>>& out, double& lloss) {
            for (std::size_t i = lo; i < hi; i++) {
                Mode ma = unpack(a.terms[i].first, d);
                const cplx& ca = a.terms[i].second;
                double can = std::abs(ca);
                for (std::size_t jj = 0; jj < nb; jj++) {
                    std::size_t j = border[jj];
                    if (pair_floor > 0 && can * bmag[j] < pair_floor) break;
                    Mode mb = unpack(b.terms[j].first, d);
                    Mode mr;
                    for (int c = 0; c < d; c++) {
                        mr.k[static_cast<size_t>(c)] =
                            ma.k[static_cast<size_t>(c)] + mb.k[static_cast<size_t>(c)];
                        mr.nu[static_cast<size_t>(c)] =
                            ma.nu[static_cast<size_t>(c)] + mb.nu[static_cast<size_t>(c)];
                    }
                    if (a.spec.admits(mr))
                        out.emplace_back(pack(mr, d), coef_scale(b.terms[j].second, ca));
                    else if (log)
                        lloss += awht[i] * bwht[j];
                }
            }
        };
        if (kernels::parallel_enabled() && na * nb > (1u << 16)) {
            constexpr std::size_t kChunk = 64;
            std::size_t nchunks = (na + kChunk - 1) / kChunk;
            std::vector<std::vector<std::pair<uint64_t, Cr>>> parts(nchunks);
            std::vector<double> losses(nchunks, 0.0);
            #pragma omp parallel for schedule(dynamic)
            for (long c = 0; c < static_cast<long>(nchunks); c++) {
                std::size_t lo = static_cast<std::size_t>(c) * kChunk;
                emit_range(lo, std::min(lo + kChunk, na), parts[static_cast<size_t>(c)],
                           losses[static_cast<size_t>(c)]);
            }
            std::size_t total = 0;
            for (const auto& p : parts) total += p.size();
            buf.reserve(total);
            for (auto& p : parts) buf.insert(buf.end(), p.begin(), p.end());
            for (double l : losses) loss += l;
        } else {
            buf.reserve(na * nb);
            emit_range(0, na, buf, loss);
        }
        kernels::combine_terms(buf);
        r.terms = std::move(buf);
    }
    if (log) log->loss += loss;
    if (r.spec.prune_rel > 0) {
        double floor = r.max_coef_norm() * r.spec.prune_rel;
        std::size_t wr = 0;
        for (std::size_t i = 0; i < r.terms.size(); i++)
            if (coef_norm(r.terms[i].second) >= floor) r.terms[wr++] = r.terms[i];
        r.terms.resize(wr);
    }
    return r;
}

}  // namespace

template <class C>
Series<C> axpy(const cplx& alpha, const Series<C>& x, const Series<C>& y) {
    if (!(x.spec == y.spec))
        throw McfError(ErrorCode::invalid_argument, "series truncation specs differ");
    Series<C> r;
    r.spec = x.spec;
    r.terms.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() || j < y.size()) {
        if (j >= y.size() || (i < x.size() && x.terms[i].first < y.terms[j].first)) {
            C v = coef_scale(x.terms[i].second, alpha);
            if (!(v == C{})) r.terms.emplace_back(x.terms[i].first, v);
            i++;
        } else if (i >= x.size() || y.terms[j].first < x.terms[i].first) {
            r.terms.push_back(y.terms[j]);
            j++;
        } else {
            C v = coef_scale(x.terms[i].second, alpha);
            v += y.terms[j].second;
            if (!(v == C{})) r.terms.emplace_back(x.terms[i].first, v);
            i++;
            j++;
        }
    }
    return r;
}

template <class C>
Series<C> scale(const Series<C>& a, const cplx& s) {
    Series<C> r;
    r.spec = a.spec;
    if (s == cplx(0, 0)) return r;
    r.terms.reserve(a.size());
    for (const auto& [k, c] : a.terms) r.terms.emplace_back(k, coef_scale(c, s));
    return r;
}

SeriesC mul(const SeriesC& a, const SeriesC& b, TruncationLog* log, const Window* w) {
    return mul_impl(a, b, log, w);
}
SeriesV mul(const SeriesC& a, const SeriesV& b, TruncationLog* log, const Window* w) {
    return mul_impl(a, b, log, w);
}

SeriesC component(const SeriesV& f, int j) {
    SeriesC r;
    r.spec = f.spec;
    r.terms.reserve(f.size());
    for (const auto& [k, c] : f.terms)
        if (c[j] != cplx(0, 0)) r.terms.emplace_back(k, c[j]);
    return r;
}

SeriesV from_components(const std::vector<SeriesC>& comps) {
    if (comps.empty()) throw McfError(ErrorCode::invalid_argument, "no components");
    std::vector<std::pair<uint64_t, CVec>> buf;
    for (std::size_t j = 0; j < comps.size(); j++) {
        if (!(comps[j].spec == comps[0].spec))
            throw McfError(ErrorCode::invalid_argument, "component specs differ");
        for (const auto& [k, c] : comps[j].terms) {
            CVec v;
            v[static_cast<int>(j)] = c;
            buf.emplace_back(k, v);
        }
    }
    kernels::combine_terms(buf);
    SeriesV r;
    r.spec = comps[0].spec;
    r.terms = std::move(buf);
    return r;
}

template <class C>
Series<C> zero_mode(const Series<C>& f) {
    Series<C> r;
    r.spec = f.spec;
    int d = f.spec.d;
    for (const auto& [k, c] : f.terms)
        if (unpack(k, d).k_zero(d)) r.terms.emplace_back(k, c);
    return r;
}

template <class C>
Series<C> nonzero_modes(const Series<C>& f) {
    Series<C> r;
    r.spec = f.spec;
    int d = f.spec.d;
    for (const auto& [k, c] : f.terms)
        if (!unpack(k, d).k_zero(d)) r.terms.emplace_back(k, c);
    return r;
}

template <class C>
std::pair<Series<C>, Series<C>> split(const Series<C>& f,
                                      const std::function<bool(const Mode&)>& pred) {
    Series<C> yes, no;
    yes.spec = no.spec = f.spec;
    int d = f.spec.d;
    for (const auto& [k, c] : f.terms) {
        if (pred(unpack(k, d)))
            yes.terms.emplace_back(k, c);
        else
            no.terms.emplace_back(k, c);
    }
    return {yes, no};
}

template <class C>
Series<C> dx(const Series<C>& f, int j) {
    Series<C> r;
    r.spec = f.spec;
    int d = f.spec.d;
    r.terms.reserve(f.size());
    for (const auto& [k, c] : f.terms) {
        Mode m = unpack(k, d);
        if (m.k[static_cast<size_t>(j)] == 0) continue;
        cplx factor(0, 2 * M_PI * m.k[static_cast<size_t>(j)]);
        r.terms.emplace_back(k, coef_scale(c, factor));
    }
    return r;
}

template <class C>
Series<C> dy(const Series<C>& f, int j) {
    Series<C> r;
    r.spec = f.spec;
    int d = f.spec.d;
    std::vector<std::pair<uint64_t, C>> buf;
    buf.reserve(f.size());
    for (const auto& [k, c] : f.terms) {
        Mode m = unpack(k, d);
        int nj = m.nu[static_cast<size_t>(j)];
        if (nj == 0) continue;
        m.nu[static_cast<size_t>(j)] = nj - 1;
        buf.emplace_back(pack(m, d), coef_scale(c, cplx(nj, 0)));
    }
    kernels::combine_terms(buf);  // already sorted in fact; keeps invariant
    r.terms = std::move(buf);
    return r;
}

template <class C>
double weighted_norm(const Series<C>& f, const Window& w, bool primed) {
    auto vals = weighted_values(f, w, primed);
    return kernels::sum_pairwise(vals);
}

template <class C>
double reality_defect(const Series<C>& f) {
    int d = f.spec.d;
    double worst = 0;
    for (const auto& [k, c] : f.terms) {
        Mode m = unpack(k, d);
        for (int i = 0; i < d; i++) m.k[static_cast<size_t>(i)] = -m.k[static_cast<size_t>(i)];
        const C* other = f.find(m);
        C expect = coef_conj(c);
        if (other) {
            C diff = expect;
            diff += coef_scale(*other, cplx(-1, 0));
            worst = std::max(worst, coef_norm(diff));
        } else {
            worst = std::max(worst, coef_norm(expect));
        }
    }
    return worst;
}

cplx eval(const SeriesC& f, const std::array<double, kMaxD>& x,
          const std::array<cplx, kMaxD>& y) {
    int d = f.spec.d;
    cplx acc(0, 0);
    for (const auto& [k, c] : f.terms) {
        Mode m = unpack(k, d);
        double phase = 0;
        for (int i = 0; i < d; i++) phase += m.k[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        cplx term = c * std::polar(1.0, 2 * M_PI * phase);
        for (int i = 0; i < d; i++)
            for (int p = 0; p < m.nu[static_cast<size_t>(i)]; p++) term *= y[static_cast<size_t>(i)];
        acc += term;
    }
    return acc;
}

CVec eval(const SeriesV& f, const std::array<double, kMaxD>& x,
          const std::array<cplx, kMaxD>& y) {
    int d = f.spec.d;
    CVec acc;
    for (const auto& [k, c] : f.terms) {
        Mode m = unpack(k, d);
        double phase = 0;
        for (int i = 0; i < d; i++) phase += m.k[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
        cplx term = std::polar(1.0, 2 * M_PI * phase);
        for (int i = 0; i < d; i++)
            for (int p = 0; p < m.nu[static_cast<size_t>(i)]; p++) term *= y[static_cast<size_t>(i)];
        for (int i = 0; i < d; i++) acc[i] += c[i] * term;
    }
    return acc;
}

SeriesC constant(const TruncSpec& spec, const cplx& c) {
    SeriesC r;
    r.spec = spec;
    if (c != cplx(0, 0)) r.terms.emplace_back(pack(Mode{}, spec.d), c);
    return r;
}

SeriesV constant_vec(const TruncSpec& spec, const CVec& c) {
    SeriesV r;
    r.spec = spec;
    if (!(c == CVec{})) r.terms.emplace_back(pack(Mode{}, spec.d), c);
    return r;
}

SeriesC exp_series(const SeriesC& s, const Window& w, double tol, TruncationLog* log) {
    SeriesC acc = constant(s.spec, cplx(1, 0));
    SeriesC term = acc;
    for (int m = 1; m <= 64; m++) {
        term = mul(term, s, log, &w);
        term = scale(term, cplx(1.0 / m, 0));
        if (term.empty()) break;
        acc = add(acc, term);
        if (weighted_norm(term, w, false) < tol) break;
    }
    return acc;
}

// ---- MonomialTable -------------------------------------------------------------

MonomialTable::MonomialTable(const std::vector<SeriesC>& v, const TruncSpec& spec,
                             TruncationLog* log, const Window* w)
    : spec_(spec) {
    if (static_cast<int>(v.size()) != spec.d)
        throw McfError(ErrorCode::invalid_argument, "y-map needs d components");
    // enumerate |nu|_1 <= D lexicographically
    std::array<int, kMaxD> nu{};
    int d = spec.d;
    std::function<void(int, int)> emit = [&](int pos, int left) {
        if (pos == d) {
            nus_.push_back(nu);
            return;
        }
        for (int v2 = 0; v2 <= left; v2++) {
            nu[static_cast<size_t>(pos)] = v2;
            emit(pos + 1, left - v2);
        }
        nu[static_cast<size_t>(pos)] = 0;
    };
    emit(0, spec.D);
    table_.resize(nus_.size());
    for (std::size_t t = 0; t < nus_.size(); t++) {
        const auto& m = nus_[t];
        int total = 0;
        for (int i = 0; i < d; i++) total += m[static_cast<size_t>(i)];
        if (total == 0) {
            table_[t] = constant(spec, cplx(1, 0));
            continue;
        }
        // find largest coordinate with m_j > 0 and reuse the predecessor
        int j = d - 1;
        while (m[static_cast<size_t>(j)] == 0) j--;
        auto prev = m;
        prev[static_cast<size_t>(j)]--;
        table_[t] = mul(table_[static_cast<size_t>(index_of(prev))], v[static_cast<size_t>(j)],
                        log, w);
    }
}

int MonomialTable::index_of(const std::array<int, kMaxD>& nu) const {
    for (std::size_t t = 0; t < nus_.size(); t++)
        if (nus_[t] == nu) return static_cast<int>(t);
    throw McfError(ErrorCode::invalid_argument, "monomial index out of table");
}

const SeriesC& MonomialTable::get(const std::array<int, kMaxD>& nu) const {
    return table_[static_cast<size_t>(index_of(nu))];
}

// ---- compose / pullback -----------------------------------------------------------

namespace {

// iterate the k-groups of a sorted term vector
template <class C, class Fn>
void for_each_k_group(const Series<C>& f, Fn&& fn) {
    int d = f.spec.d;
    std::size_t i = 0;
    while (i < f.size()) {
        std::size_t j = i + 1;
        uint64_t prefix = k_prefix(f.terms[i].first, d);
        while (j < f.size() && k_prefix(f.terms[j].first, d) == prefix) j++;
        fn(i, j, unpack(f.terms[i].first, d));
        i = j;
    }
}

// P_k(v) = sum_nu c_{k,nu} T[nu] as a series with C coefficients
template <class C>
Series<C> group_poly(const Series<C>& f, std::size_t lo, std::size_t hi,
                     const MonomialTable& table) {
    int d = f.spec.d;
    std::vector<std::pair<uint64_t, C>> buf;
    for (std::size_t t = lo; t < hi; t++) {
        Mode m = unpack(f.terms[t].first, d);
        const SeriesC& mono = table.get(m.nu);
        for (const auto& [mk, mc] : mono.terms)
            buf.emplace_back(mk, coef_scale(f.terms[t].second, mc));
    }
    kernels::combine_terms(buf);
    Series<C> r;
    r.spec = f.spec;
    r.terms = std::move(buf);
    return r;
}

// group as a pure y-polynomial re-keyed to k = 0
template <class C>
Series<C> group_as_ypoly(const Series<C>& f, std::size_t lo, std::size_t hi) {
    int d = f.spec.d;
    Series<C> r;
    r.spec = f.spec;
    for (std::size_t t = lo; t < hi; t++) {
        Mode m = unpack(f.terms[t].first, d);
        m.k = {};
        r.terms.emplace_back(pack(m, d), f.terms[t].second);
    }
    return r;
}

template <class C>
void emit_shifted(const Series<C>& s, const std::array<int, kMaxD>& k,
                  std::vector<std::pair<uint64_t, C>>& buf, TruncationLog* log,
                  const Window& w) {
    int d = s.spec.d;
    for (const auto& [key, c] : s.terms) {
        uint64_t out;
        if (shift_key(key, k, d, s.spec, out))
            buf.emplace_back(out, c);
        else if (log) {
            Mode m = unpack(key, d);
            for (int i = 0; i < d; i++) m.k[static_cast<size_t>(i)] += k[static_cast<size_t>(i)];
            log->add(coef_norm(c), m, d, w);
        }
    }
}

std::vector<SeriesC> identity_ymap(const TruncSpec& spec) {
    std::vector<SeriesC> v(static_cast<size_t>(spec.d));
    for (int j = 0; j < spec.d; j++) {
        Mode m;
        m.nu[static_cast<size_t>(j)] = 1;
        SeriesC s;
        s.spec = spec;
        s.terms.emplace_back(pack(m, spec.d), cplx(1, 0));
        v[static_cast<size_t>(j)] = s;
    }
    return v;
}

}  // namespace

template <class C>
Series<C> compose_shift(const Series<C>& f, const std::vector<SeriesC>* p,
                        const std::vector<SeriesC>* q, double tol, TruncationLog* log,
                        const Window* w) {
    Window fallback = Window::ham(0.0, 1.0);
    const Window& win = w ? *w : fallback;
    int d = f.spec.d;
    if (p && static_cast<int>(p->size()) != d)
        throw McfError(ErrorCode::invalid_argument, "x-shift needs d components");
    if (q && static_cast<int>(q->size()) != d)
        throw McfError(ErrorCode::invalid_argument, "y-shift needs d components");
    double fnorm = weighted_norm(f, win, false);
    Series<C> acc = f;
    Series<C> layer = f;
    double prev_norm = -1;
    for (int m = 1; m <= 64; m++) {
        // layer <- (1/m)(p . D_x + q . D_y) layer
        Series<C> next;
        next.spec = f.spec;
        for (int j = 0; j < d; j++) {
            if (p && !(*p)[static_cast<size_t>(j)].empty())
                next = add(next, mul_impl((*p)[static_cast<size_t>(j)], dx(layer, j), log, w));
            if (q && !(*q)[static_cast<size_t>(j)].empty())
                next = add(next, mul_impl((*q)[static_cast<size_t>(j)], dy(layer, j), log, w));
        }
        layer = scale(next, cplx(1.0 / m, 0));
        if (layer.empty()) break;
        acc = add(acc, layer);
        double ln = weighted_norm(layer, win, false);
        if (ln <= tol * std::max(fnorm, 1e-300)) break;
        if (m >= 6 && prev_norm > 0 && ln > prev_norm)
            throw McfError(ErrorCode::domain_shrink,
                           "composition shift too large: Taylor layers do not contract");
        prev_norm = ln;
        if (m == 64)
            throw McfError(ErrorCode::domain_shrink, "composition did not converge in 64 layers");
    }
    return acc;
}

template <class C>
Series<C> pullback(const Series<C>& f,
                   const std::function<std::optional<Mode>(const Mode&)>& kmap,
                   const std::vector<SeriesC>* v, TruncationLog* log, const Window* w) {
    Window fallback = Window::ham(0.0, 1.0);
    const Window& win = w ? *w : fallback;
    std::vector<SeriesC> idmap;
    std::optional<MonomialTable> table;
    if (v)
        table.emplace(*v, f.spec, log, w);
    else {
        idmap = identity_ymap(f.spec);
        table.emplace(idmap, f.spec, log, w);
    }

    std::vector<std::pair<uint64_t, C>> buf;
    for_each_k_group(f, [&](std::size_t lo, std::size_t hi, const Mode& head) {
        std::optional<Mode> mapped = kmap(head);
        Series<C> pk = group_poly(f, lo, hi, *table);
        if (!mapped) {
            if (log)
                for (const auto& [key, c] : pk.terms)
                    log->add(coef_norm(c), unpack(key, f.spec.d), f.spec.d, win);
            return;
        }
        emit_shifted(pk, mapped->k, buf, log, win);
    });
    kernels::combine_terms(buf);
    Series<C> r;
    r.spec = f.spec;
    r.terms = std::move(buf);
    return r;
}

template <class C>
Series<C> small_divisor_inverse(const Series<C>& g, const DivisorBase& base, double sigma,
                                int max_depth, double series_tol, TruncationLog* log,
                                const Window* w) {
    int d = g.spec.d;
    Window fallback = Window::ham(0.0, 1.0);
    const Window& win = w ? *w : fallback;
    std::vector<std::pair<uint64_t, C>> buf;
    for_each_k_group(g, [&](std::size_t lo, std::size_t hi, const Mode& head) {
        double kw = 0, kn2 = 0;
        std::array<double, kMaxD> lin{};
        for (int i = 0; i < d; i++) {
            double ki = head.k[static_cast<size_t>(i)];
            kw += ki * base.omega[static_cast<size_t>(i)];
            kn2 += ki * ki;
            for (int j = 0; j < d; j++)
                lin[static_cast<size_t>(j)] += ki * base.A[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
        double kn = std::sqrt(kn2);
        if (std::abs(kw) <= sigma * kn) {
            std::string ks = "(";
            for (int i = 0; i < d; i++)
                ks += std::to_string(head.k[static_cast<size_t>(i)]) + (i + 1 < d ? "," : ")");
            throw McfError(ErrorCode::small_divisor,
                           "mode k = " + ks + " violates the far-from-resonance condition");
        }
        // inv = 1/(2 pi i kw) sum_m (-ell)^m, ell = (k . A y)/kw
        SeriesC ell;
        ell.spec = g.spec;
        {
            std::vector<std::pair<uint64_t, cplx>> lb;
            for (int j = 0; j < d; j++) {
                if (lin[static_cast<size_t>(j)] == 0) continue;
                Mode m;
                m.nu[static_cast<size_t>(j)] = 1;
                lb.emplace_back(pack(m, d), cplx(lin[static_cast<size_t>(j)] / kw, 0));
            }
            kernels::combine_terms(lb);
            ell.terms = std::move(lb);
        }
        SeriesC inv = constant(g.spec, cplx(1, 0));
        SeriesC term = inv;
        for (int m = 1; m <= max_depth; m++) {
            term = mul(term, ell, log, w);
            term = scale(term, cplx(-1, 0));
            if (term.empty()) break;
            inv = add(inv, term);
            if (weighted_norm(term, win, false) < series_tol) break;
        }
        inv = scale(inv, cplx(1, 0) / (cplx(0, 2 * M_PI) * kw));
        Series<C> pk = group_as_ypoly(g, lo, hi);
        Series<C> hk = mul_impl(inv, pk, log, w);
        emit_shifted(hk, head.k, buf, log, win);
    });
    kernels::combine_terms(buf);
    Series<C> r;
    r.spec = g.spec;
    r.terms = std::move(buf);
    return r;
}

// ---- explicit instantiations -------------------------------------------------------

#define MCF_INSTANTIATE(C)                                                            \
    template Series<C> axpy<C>(const cplx&, const Series<C>&, const Series<C>&);      \
    template Series<C> scale<C>(const Series<C>&, const cplx&);                       \
    template Series<C> zero_mode<C>(const Series<C>&);                                \
    template Series<C> nonzero_modes<C>(const Series<C>&);                            \
    template std::pair<Series<C>, Series<C>> split<C>(                                \
        const Series<C>&, const std::function<bool(const Mode&)>&);                   \
    template Series<C> dx<C>(const Series<C>&, int);                                  \
    template Series<C> dy<C>(const Series<C>&, int);                                  \
    template double weighted_norm<C>(const Series<C>&, const Window&, bool);          \
    template double reality_defect<C>(const Series<C>&);                              \
    template Series<C> compose_shift<C>(const Series<C>&, const std::vector<SeriesC>*,\
                                        const std::vector<SeriesC>*, double,          \
                                        TruncationLog*, const Window*);               \
    template Series<C> pullback<C>(const Series<C>&,                                  \
                                   const std::function<std::optional<Mode>(const Mode&)>&, \
                                   const std::vector<SeriesC>*, TruncationLog*,       \
                                   const Window*);                                    \
    template Series<C> small_divisor_inverse<C>(const Series<C>&, const DivisorBase&, \
                                                double, int, double, TruncationLog*,  \
                                                const Window*);

MCF_INSTANTIATE(cplx)
MCF_INSTANTIATE(CVec)

}  // namespace mcf::ser
