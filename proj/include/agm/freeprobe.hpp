#pragma once

#include <cstdint>
#include <vector>

#include "agm/random.hpp"
#include "agm/types.hpp"

namespace agm::freeprobe {

/// |tau(u_j)| accepted by the rejection sampler.
inline constexpr double kUnitaryTraceTol = 1e-3;
/// Total redraws allowed across all u_j of one family before giving up.
inline constexpr long kMaxRedraws = 5'000'000;

struct InvariantReport {
  double hermitian = 0.0;   // max |a - a*|
  double trace = 0.0;       // |tau(a)|
  double second = 0.0;      // |tau(a^2) - 1|
  double unitary = 0.0;     // max_j max |u_j* u_j - I|
  double max_unitary_trace = 0.0;  // max_j |tau(u_j)|
  bool ok() const noexcept {
    return hermitian <= 1e-10 && trace <= 1e-12 && second <= 1e-12 && unitary <= 1e-12;
  }
};

/// Hermitian a together with unitaries u_1..u_n and the products a_j = a u_j.
///
/// The constructor only checks shapes, Hermitian a and unitary u_j; the
/// moment conditions tau(a) = 0, tau(a^2) = 1 are reported by
/// check_invariants() so that degenerate inputs (dim 1, a = 1) can still be
/// evaluated.
class FreeFamily {
 public:
  FreeFamily(Matrix a, std::vector<Matrix> us);

  int dim() const noexcept { return static_cast<int>(a_.rows()); }
  int n() const noexcept { return static_cast<int>(us_.size()); }
  const Matrix& a() const noexcept { return a_; }
  const std::vector<Matrix>& us() const noexcept { return us_; }
  const std::vector<Matrix>& ajs() const noexcept { return ajs_; }

  InvariantReport check_invariants() const;

  /// Spectrum parameter t used by make_free_family (0 when built by hand).
  double t = 0.0;
  /// a^2 = I up to 1e-12.
  bool degenerate = false;
  /// Spectra rejected while enforcing |tau(u_j)| <= kUnitaryTraceTol.
  long redraws = 0;

 private:
  Matrix a_;
  std::vector<Matrix> us_;
  std::vector<Matrix> ajs_;
};

/// a = V diag(t, -t, s, -s, ...) V* with V Haar; u_j independent Haar
/// unitaries conditioned on |tau(u_j)| <= 1e-3 by rejection on the spectrum. Needs dim % 4 == 0,
/// n >= 2 and 0 < t <= sqrt(2). Throws InfeasibleError if the redraw budget
/// runs out (tiny dim makes the acceptance region small).
FreeFamily make_free_family(int dim, int n, double t, Rng& rng);

/// (1/(n(n-1)(n-2))) sum over distinct j1, j2, j3 of
/// a_{j1} a_{j2} a_{j3} a_{j3}* a_{j2}* a_{j1}*. Needs n >= 3.
Matrix ewo3(const FreeFamily& fam);
/// n^{-3} times the same sum over all triples.
Matrix ewr3(const FreeFamily& fam);

/// [1/n^2 - 1/(n(n-1))] sum_{j,k} a_j a_k (1 - a^2) a_k* a_j*
///   + 1/(n(n-1)) sum_j a_j a_j (1 - a^2) a_j* a_j*.
Matrix difference_rhs(const FreeFamily& fam);

/// ||(ewo3 - ewr3) - difference_rhs||.
double difference_identity_residual(const FreeFamily& fam);

/// lambda_min(ewr3 - ewo3); negative means ewo3 <= ewr3 fails.
double order_violation(const FreeFamily& fam);

/// |tau(ewr3) - tau(ewo3)|.
double trace_gap(const FreeFamily& fam);

/// Distance of low-order mixed moments from their free values:
/// max over j of |tau(a u_j a u_j*) - tau(a)^2| and over j != k of |tau(u_j u_k*)|.
double free_moment_residual(const FreeFamily& fam);

struct CounterexampleRow {
  std::uint64_t seed_index = 0;
  double identity_residual = 0.0;
  double lambda_min = 0.0;
  double trace_gap = 0.0;
  double tau_wo = 0.0;
  double tau_wr = 0.0;
  long redraws = 0;
};

/// One row per seed index s in [0, seeds), family drawn from substream(seed, s).
std::vector<CounterexampleRow> counterexample_sweep(int dim, int n, double t, int seeds,
                                                    std::uint64_t seed, unsigned workers = 1);

}  // namespace agm::freeprobe
