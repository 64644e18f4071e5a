#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "agm/types.hpp"

namespace agm::partitions {

/// Ground sets larger than this are rejected by exhaustive enumeration.
inline constexpr int kMaxGroundSet = 8;
/// Alphabet size cap {1..n} for exhaustive tuple enumeration.
inline constexpr int kMaxAlphabet = 12;

/// A set partition of the positions {0, ..., d-1}.
///
/// Stored as a restricted growth string: labels()[p] is the index of the
/// block holding position p, and blocks are numbered in order of their
/// smallest element. That labelling is unique, so equality and ordering are
/// structural. Positions are 0-based in code; to_string() prints them 1-based.
class Partition {
 public:
  /// Canonicalises an arbitrary labelling (equal labels = same block).
  static Partition from_labels(std::span<const int> labels);
  static Partition from_labels(std::initializer_list<int> labels) {
    return from_labels(std::span<const int>(labels.begin(), labels.size()));
  }
  /// Blocks of 0-based positions; must be disjoint, nonempty and cover {0..d-1}.
  static Partition from_blocks(int d, const std::vector<std::vector<int>>& blocks);
  /// All singletons (0-dot).
  static Partition finest(int d);
  /// One block (1-dot).
  static Partition coarsest(int d);

  int size() const noexcept { return static_cast<int>(labels_.size()); }
  /// nu(sigma), the number of blocks.
  int block_count() const noexcept { return blocks_; }
  std::span<const int> labels() const noexcept { return labels_; }
  int label(int position) const { return labels_.at(static_cast<std::size_t>(position)); }
  std::vector<std::vector<int>> blocks() const;
  bool is_singleton(int position) const;
  /// The partition of the remaining d-1 positions after deleting `position`.
  Partition without_position(int position) const;
  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition&, const Partition&) = default;

 private:
  Partition(std::vector<int> labels, int blocks) : labels_(std::move(labels)), blocks_(blocks) {}
  std::vector<int> labels_;
  int blocks_ = 0;
};

/// Bell number B(d) for 0 <= d <= 20.
std::uint64_t bell_number(int d);

/// n (n-1) ... (n-k+1); zero when k > n.
std::uint64_t falling_factorial(int n, int k);

/// Every set partition of {0..d-1}, in lexicographic order of labels.
/// Requires 1 <= d <= kMaxGroundSet.
std::vector<Partition> enumerate_partitions(int d);

/// Positions p, q share a block iff tuple[p] == tuple[q].
Partition kernel_of_tuple(std::span<const int> tuple);

/// Order on partitions: sigma <= pi iff every block of pi is contained in a
/// block of sigma, i.e. pi refines sigma. Hence coarsest(d) <= pi for every
/// pi, and finest(d) <= coarsest(d) fails once d >= 2.
bool refinement_leq(const Partition& sigma, const Partition& pi);

/// The tuples in {0..n-1}^d whose kernel is exactly sigma, in lexicographic
/// order. There are n (n-1) ... (n - nu + 1) of them; none when n < nu.
///
/// Equivalent to injective assignments of values to blocks, which is how the
/// range walks them. Ranges are cheap to copy and independently restartable.
class KernelTuples {
 public:
  KernelTuples(int n, Partition sigma);

  class iterator {
   public:
    using value_type = std::vector<int>;
    using difference_type = std::ptrdiff_t;
    using reference = const std::vector<int>&;
    using pointer = const std::vector<int>*;
    using iterator_category = std::input_iterator_tag;

    iterator() = default;
    reference operator*() const { return tuple_; }
    pointer operator->() const { return &tuple_; }
    iterator& operator++();
    void operator++(int) { ++*this; }
    friend bool operator==(const iterator& it, std::default_sentinel_t) { return it.done_; }

   private:
    friend class KernelTuples;
    iterator(const KernelTuples* range, bool done);
    void refresh();
    bool advance_from(int slot);

    const KernelTuples* range_ = nullptr;
    std::vector<int> values_;  // value assigned to each block
    std::vector<char> used_;
    std::vector<int> tuple_;
    bool done_ = true;
  };

  iterator begin() const { return iterator(this, n_ < sigma_.block_count()); }
  std::default_sentinel_t end() const { return {}; }

  std::uint64_t count() const { return falling_factorial(n_, sigma_.block_count()); }
  const Partition& sigma() const noexcept { return sigma_; }
  int alphabet() const noexcept { return n_; }

 private:
  int n_;
  Partition sigma_;
};

inline KernelTuples tuples_with_kernel(int n, const Partition& sigma) { return {n, sigma}; }

}  // namespace agm::partitions
