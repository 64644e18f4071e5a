#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agm/partitions.hpp"
#include "agm/random.hpp"
#include "agm/types.hpp"

namespace agm::symsum {

/// Which normalisation a family is measured against.
///
/// left:  (1/n) sum A_j* A_j = I, and sums are sandwiched as A* ... A* A ... A.
/// right: (1/n) sum A_j A_j* = I, and sums are sandwiched as A ... A A* ... A*.
/// Every right-side quantity equals the left-side quantity of the adjoint family.
enum class Side { left, right };

const char* to_string(Side side) noexcept;

/// Certificate tolerance for ||(1/n) sum A*A - I||.
inline constexpr double kNormalizationTol = 1e-10;
/// Exhaustive enumeration guards for e_wo / e_wr.
inline constexpr int kMaxEnumerationN = 12;
inline constexpr int kMaxEnumerationD = 6;

/// n square matrices of a common dimension m. Derived quantities (the sup
/// norm C and both normalisation residuals) are computed once on construction.
class OperatorFamily {
 public:
  explicit OperatorFamily(std::vector<Matrix> ops);

  int n() const noexcept { return static_cast<int>(ops_.size()); }
  int m() const noexcept { return m_; }
  const std::vector<Matrix>& ops() const noexcept { return ops_; }
  const Matrix& operator[](int j) const { return ops_.at(static_cast<std::size_t>(j)); }

  /// C = sup_k ||A_k* A_k||.
  double sup_norm_sq() const noexcept { return sup_norm_sq_; }
  /// ||(1/n) sum A*A - I|| (left) or ||(1/n) sum A A* - I|| (right).
  double normalization_residual(Side side) const noexcept {
    return side == Side::left ? left_residual_ : right_residual_;
  }
  bool normalized(Side side = Side::left) const noexcept {
    return normalization_residual(side) <= kNormalizationTol;
  }

  OperatorFamily adjoint() const;

 private:
  std::vector<Matrix> ops_;
  int m_ = 0;
  double sup_norm_sq_ = 0.0;
  double left_residual_ = 0.0;
  double right_residual_ = 0.0;
};

/// Rescales ops so the family is normalised on `side`: B_j = A_j M^{-1/2}
/// with M = (1/n) sum A*A (left), or B_j = M^{-1/2} A_j with M = (1/n) sum A A*.
/// Throws DomainError naming the smallest eigenvalue when M is singular.
OperatorFamily normalize_family(std::vector<Matrix> ops, Side side = Side::left);

/// Normalised family obtained from n complex Ginibre m x m matrices.
OperatorFamily random_normalized_family(int n, int m, Rng& rng, Side side = Side::left);
/// n independent Haar unitaries of size m (normalised on both sides).
OperatorFamily unitary_family(int n, int m, Rng& rng);

/// Without-replacement mean
///   ((n-d)!/n!) sum_{distinct j_1..j_d} A_{j1}* ... A_{jd}* A_{jd} ... A_{j1},
/// accumulated in lexicographic tuple order. Needs 1 <= d <= n and the
/// enumeration guards n <= 12, d <= 6.
Matrix e_wo(const OperatorFamily& fam, int d, Side side = Side::left);

/// With-replacement mean n^{-d} sum_{all j_1..j_d} (same sandwich).
Matrix e_wr(const OperatorFamily& fam, int d, Side side = Side::left);

/// e_wo computed without enumerating tuples: the inner sum over distinct
/// indices only depends on the set of indices already used, so it is
/// tabulated per subset (n <= 63). Cost ~ C(n, d-1) * n matrix products.
Matrix e_wo_by_subsets(const OperatorFamily& fam, int d, Side side = Side::left);

/// e_wr as d-fold application of X -> (1/n) sum_j A_j* X A_j to I.
Matrix e_wr_by_nesting(const OperatorFamily& fam, int d, Side side = Side::left);

/// [sigma]: sum over tuples with kernel exactly sigma of
///   A_{i_d}* ... A_{i_1}* A_{i_1} ... A_{i_d}.
/// Zero matrix when nu(sigma) > n.
Matrix partition_sum(const OperatorFamily& fam, const partitions::Partition& sigma,
                     Side side = Side::left);

/// n^{nu(sigma)} * C^{|sigma| - nu(sigma)}. Requires a normalised family.
double bound_partition_sum(const OperatorFamily& fam, const partitions::Partition& sigma,
                           Side side = Side::left);

/// The alternative single-block estimate C^{|sigma|}. Reported beside the
/// bound above for one-block partitions; it is not a valid bound in general
/// (a unitary family has [1-dot] = n I while C = 1).
double single_block_alt_bound(const OperatorFamily& fam, const partitions::Partition& sigma);

struct FoldedSum {
  Matrix value;       // direct sum with the (I - A* A) insertion
  Matrix telescoped;  // [gamma] - [sigma]
  double residual = 0.0;
};

/// [[sigma]] = sum over kernel-sigma tuples of
///   A_{i_d}* ... A_{i_2}* (I - A_{i_1}* A_{i_1}) A_{i_2} ... A_{i_d},
/// cross-checked against [gamma] - [sigma] where gamma drops position 1.
/// Position 1 must not be a singleton of sigma.
FoldedSum folded_sum(const OperatorFamily& fam, const partitions::Partition& sigma,
                     Side side = Side::left);

/// n^nu * C^{|sigma| - nu} * (1 + 1/C).
double folded_sum_bound(const OperatorFamily& fam, const partitions::Partition& sigma,
                        Side side = Side::left);

/// || (I - A_d*...A_1* A_1...A_d) - sum_j A_d*...A_{j+1}* (I - A_j* A_j) A_{j+1}...A_d ||
/// for ops = (A_1, ..., A_d).
double folding_residual(std::span<const Matrix> ops);

struct PartitionBreakdown {
  partitions::Partition sigma;
  double measured = 0.0;     // ||[sigma]||
  double lemma_bound = 0.0;  // n^nu C^{|sigma| - nu}
  std::optional<double> single_block_alt;  // C^{|sigma|}, one-block partitions only
};

struct SymReport {
  int d = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double epsilon = 0.0;
  bool passed = false;
  std::vector<PartitionBreakdown> detail;
};

/// lhs <= rhs up to 1e-9 * max(1, rhs).
bool within_slack(double lhs, double rhs) noexcept;

/// epsilon = (1 + C)/n * d(d-1)/2.
double sandwich_epsilon(const OperatorFamily& fam, int d);

/// lhs = ||I - e_wo(fam, d)||, rhs = (1 + C) d(d-1) / (2n). Requires a family
/// normalised on `side`. The breakdown lists every partition of d positions
/// with its measured norm and bound.
SymReport check_theorem_bound(const OperatorFamily& fam, int d, Side side = Side::left,
                              bool with_detail = true);

/// Order check (1 - eps) I <= e_wo <= (1 + eps) I via the smallest eigenvalues
/// of e_wo - (1 - eps) I and (1 + eps) I - e_wo, both allowed down to
/// -1e-9 * max(1, eps). lhs is the largest eigenvalue deviation from 1.
SymReport check_sandwich(const OperatorFamily& fam, int d, Side side = Side::left);

/// Draws i.i.d. m x m operators with E(A* A) = I.
struct FamilySampler {
  std::string name;
  int m = 0;
  std::function<Matrix(Rng&)> draw;
};

/// Always the same cyclic permutation matrix (A* A = I exactly).
FamilySampler deterministic_sampler(int m);
/// U (I + delta G) / sqrt(1 + delta^2) with U Haar and G Ginibre of
/// entry variance 1/m.
FamilySampler perturbed_isometry_sampler(int m, double delta);
/// Ginibre matrix with entry variance 1/m.
FamilySampler ginibre_sampler(int m);

struct DeviationReport {
  std::string sampler;
  int n = 0, d = 0, p = 0, m = 0, trials = 0;
  double epsilon_hat = 0.0, epsilon_hat_se = 0.0;  // (E||sum A*A - nI||^p)^{1/p} / n
  double delta_wo = 0.0, delta_wo_se = 0.0;        // (E||E_wo,d - I||^p)^{1/p}
  double delta_wr = 0.0, delta_wr_se = 0.0;        // (E||E_wr,d - I||^p)^{1/p}
  double norm_wo = 0.0, norm_wr = 0.0;             // (E||E_*,d||^p)^{1/p}
  double ratio = 0.0, ratio_se = 0.0;              // norm_wo / norm_wr
  double predicted_deviation = 0.0;                // d * epsilon_hat
  double predicted_ratio = 0.0;                    // 1 + d * epsilon_hat
};

/// Monte Carlo p-th moment estimates over `trials` independent families of n
/// operators. Trial t draws from substream(seed, t), so the report does not
/// depend on `workers`. The mean E(E_wo,d) = I follows from independence and
/// E(A*A) = I and is used as the centring. Needs d <= n/4, p in {1, 2, 4},
/// trials >= 30.
DeviationReport deviation_experiment(const FamilySampler& sampler, int n, int d, int p, int trials,
                                     std::uint64_t seed, unsigned workers = 1);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
};

/// Least-squares fit of log y = log c + exponent * log x. All values must be > 0.
PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys);

}  // namespace agm::symsum
