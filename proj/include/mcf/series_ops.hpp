#pragma once

// Operations on truncated Fourier-Taylor series: algebra, weighted norms,
// resonance projections, compositions and the small-divisor inverse.

#include <functional>
#include <optional>

#include "mcf/series.hpp"

namespace mcf::ser {

// ---- algebra ----------------------------------------------------------------

template <class C>
Series<C> axpy(const cplx& alpha, const Series<C>& x, const Series<C>& y);

template <class C>
Series<C> add(const Series<C>& a, const Series<C>& b) { return axpy(cplx(1, 0), a, b); }

template <class C>
Series<C> sub(const Series<C>& a, const Series<C>& b) { return axpy(cplx(-1, 0), b, a); }

template <class C>
Series<C> scale(const Series<C>& a, const cplx& s);

// scalar x scalar and scalar x vector convolution products
SeriesC mul(const SeriesC& a, const SeriesC& b, TruncationLog* log = nullptr,
            const Window* w = nullptr);
SeriesV mul(const SeriesC& a, const SeriesV& b, TruncationLog* log = nullptr,
            const Window* w = nullptr);

// ---- structure ---------------------------------------------------------------

SeriesC component(const SeriesV& f, int j);
SeriesV from_components(const std::vector<SeriesC>& comps);

template <class C>
Series<C> zero_mode(const Series<C>& f);  // E f: the k = 0 part

template <class C>
Series<C> nonzero_modes(const Series<C>& f);  // (I - E) f

template <class C>
std::pair<Series<C>, Series<C>> split(const Series<C>& f,
                                      const std::function<bool(const Mode&)>& pred);

// ---- calculus ------------------------------------------------------------------

template <class C>
Series<C> dx(const Series<C>& f, int j);  // 2 pi i k_j f

template <class C>
Series<C> dy(const Series<C>& f, int j);

// ---- norms, reality, evaluation ------------------------------------------------

template <class C>
double weighted_norm(const Series<C>& f, const Window& w, bool primed);

// max over stored modes of |conj c(k,nu) - c(-k,nu)|
template <class C>
double reality_defect(const Series<C>& f);

cplx eval(const SeriesC& f, const std::array<double, kMaxD>& x,
          const std::array<cplx, kMaxD>& y);
CVec eval(const SeriesV& f, const std::array<double, kMaxD>& x,
          const std::array<cplx, kMaxD>& y);

// constant series
SeriesC constant(const TruncSpec& spec, const cplx& c);
SeriesV constant_vec(const TruncSpec& spec, const CVec& c);

// exp of a scalar series, truncated when the weighted term norm drops below tol
SeriesC exp_series(const SeriesC& s, const Window& w, double tol,
                   TruncationLog* log = nullptr);

// ---- composition ----------------------------------------------------------------

// v^nu monomial table over |nu|_1 <= D for the y-substitution maps
class MonomialTable {
  public:
    MonomialTable(const std::vector<SeriesC>& v, const TruncSpec& spec, TruncationLog* log,
                  const Window* w);
    const SeriesC& get(const std::array<int, kMaxD>& nu) const;

  private:
    int index_of(const std::array<int, kMaxD>& nu) const;
    TruncSpec spec_;
    std::vector<SeriesC> table_;
    std::vector<std::array<int, kMaxD>> nus_;
};

// Near-identity composition f(x + p(x,y), y + q(x,y)) by the Taylor layers
// g_m = (1/m) (p . D_x + q . D_y) g_{m-1}; stops once the weighted layer norm
// falls below tol * |f| or layers stop contracting (domain-shrink error).
// Pass nullptr for an untouched slot.
template <class C>
Series<C> compose_shift(const Series<C>& f, const std::vector<SeriesC>* p,
                        const std::vector<SeriesC>* q, double tol, TruncationLog* log,
                        const Window* w);

// Fourier index remap k -> kmap(k) (exact, injective) combined with an
// optional (not necessarily near-identity) polynomial y-map; out-of-truncation
// images are dropped into the log.
template <class C>
Series<C> pullback(const Series<C>& f,
                   const std::function<std::optional<Mode>(const Mode&)>& kmap,
                   const std::vector<SeriesC>* v, TruncationLog* log, const Window* w);

// ---- small divisors ---------------------------------------------------------------

struct DivisorBase {
    int d = 2;
    std::array<double, kMaxD> omega{};          // X0 frequency part
    std::array<std::array<double, kMaxD>, kMaxD> A{};  // linear y coupling
};

// h with (2 pi i k . X0(y)) h_k = g_k for every stored mode; the divisor is
// expanded as a geometric series in the linear form k.Ay / k.omega, truncated
// at depth max_depth or once the relative term drops below series_tol.
template <class C>
Series<C> small_divisor_inverse(const Series<C>& g, const DivisorBase& base, double sigma,
                                int max_depth, double series_tol, TruncationLog* log,
                                const Window* w);

}  // namespace mcf::ser
