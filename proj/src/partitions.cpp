#include "agm/partitions.hpp"

#include <algorithm>
#include <sstream>

namespace agm::partitions {

Partition Partition::from_labels(std::span<const int> labels) {
  if (labels.empty()) throw DomainError("Partition: ground set must be nonempty");
  std::vector<int> canon(labels.size());
  std::vector<int> seen;  // original label of block b
  for (std::size_t p = 0; p < labels.size(); ++p) {
    auto it = std::find(seen.begin(), seen.end(), labels[p]);
    if (it == seen.end()) {
      canon[p] = static_cast<int>(seen.size());
      seen.push_back(labels[p]);
    } else {
      canon[p] = static_cast<int>(it - seen.begin());
    }
  }
  return Partition(std::move(canon), static_cast<int>(seen.size()));
}

Partition Partition::from_blocks(int d, const std::vector<std::vector<int>>& blocks) {
  if (d < 1) throw DomainError("Partition: ground set must be nonempty");
  std::vector<int> labels(static_cast<std::size_t>(d), -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw DomainError("Partition: empty block");
    for (int p : blocks[b]) {
      if (p < 0 || p >= d) throw DomainError("Partition: position out of range");
      if (labels[static_cast<std::size_t>(p)] != -1)
        throw DomainError("Partition: blocks are not disjoint");
      labels[static_cast<std::size_t>(p)] = static_cast<int>(b);
    }
  }
  if (std::find(labels.begin(), labels.end(), -1) != labels.end())
    throw DomainError("Partition: blocks do not cover the ground set");
  return from_labels(labels);
}

Partition Partition::finest(int d) {
  if (d < 1) throw DomainError("Partition: ground set must be nonempty");
  std::vector<int> labels(static_cast<std::size_t>(d));
  for (int p = 0; p < d; ++p) labels[static_cast<std::size_t>(p)] = p;
  return Partition(std::move(labels), d);
}

Partition Partition::coarsest(int d) {
  if (d < 1) throw DomainError("Partition: ground set must be nonempty");
  return Partition(std::vector<int>(static_cast<std::size_t>(d), 0), 1);
}

std::vector<std::vector<int>> Partition::blocks() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(blocks_));
  for (int p = 0; p < size(); ++p) out[static_cast<std::size_t>(labels_[p])].push_back(p);
  return out;
}

bool Partition::is_singleton(int position) const {
  const int b = label(position);
  return std::count(labels_.begin(), labels_.end(), b) == 1;
}

Partition Partition::without_position(int position) const {
  if (size() < 2) throw DomainError("Partition::without_position: nothing would remain");
  std::vector<int> rest;
  rest.reserve(labels_.size() - 1);
  for (int p = 0; p < size(); ++p)
    if (p != position) rest.push_back(labels_[static_cast<std::size_t>(p)]);
  return from_labels(rest);
}

std::string Partition::to_string() const {
  std::ostringstream out;
  for (const auto& block : blocks()) {
    out << '{';
    for (std::size_t i = 0; i < block.size(); ++i) out << (i ? "," : "") << block[i] + 1;
    out << '}';
  }
  return out.str();
}

std::uint64_t bell_number(int d) {
  if (d < 0 || d > 20) throw DomainError("bell_number: d out of range");
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < d; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

std::uint64_t falling_factorial(int n, int k) {
  if (k < 0) throw DomainError("falling_factorial: k must be nonnegative");
  if (k > n) return 0;
  std::uint64_t out = 1;
  for (int i = 0; i < k; ++i) out *= static_cast<std::uint64_t>(n - i);
  return out;
}

std::vector<Partition> enumerate_partitions(int d) {
  if (d < 1 || d > kMaxGroundSet)
    throw InfeasibleError("enumerate_partitions: need 1 <= d <= " + std::to_string(kMaxGroundSet));
  std::vector<Partition> out;
  std::vector<int> rgs(static_cast<std::size_t>(d), 0);
  // Restricted growth strings in lexicographic order: rgs[p] <= 1 + max(rgs[0..p-1]).
  while (true) {
    out.push_back(Partition::from_labels(rgs));
    int p = d - 1;
    for (; p > 0; --p) {
      const int prefix_max = *std::max_element(rgs.begin(), rgs.begin() + p);
      if (rgs[static_cast<std::size_t>(p)] <= prefix_max) break;
    }
    if (p == 0) break;
    ++rgs[static_cast<std::size_t>(p)];
    std::fill(rgs.begin() + p + 1, rgs.end(), 0);
  }
  return out;
}

Partition kernel_of_tuple(std::span<const int> tuple) {
  if (tuple.empty()) throw DomainError("kernel_of_tuple: tuple must be nonempty");
  return Partition::from_labels(tuple);
}

bool refinement_leq(const Partition& sigma, const Partition& pi) {
  if (sigma.size() != pi.size())
    throw DomainError("refinement_leq: partitions of different ground sets");
  const auto ls = sigma.labels();
  const auto lp = pi.labels();
  // pi's block of p must sit inside sigma's block of p, for every p.
  std::vector<int> target(static_cast<std::size_t>(pi.block_count()), -1);
  for (std::size_t p = 0; p < lp.size(); ++p) {
    int& t = target[static_cast<std::size_t>(lp[p])];
    if (t == -1) t = ls[p];
    else if (t != ls[p]) return false;
  }
  return true;
}

KernelTuples::KernelTuples(int n, Partition sigma) : n_(n), sigma_(std::move(sigma)) {
  if (n < 1) throw DomainError("tuples_with_kernel: n must be >= 1");
}

KernelTuples::iterator::iterator(const KernelTuples* range, bool done)
    : range_(range), done_(done) {
  if (done_) return;
  const int nu = range_->sigma_.block_count();
  values_.assign(static_cast<std::size_t>(nu), -1);
  used_.assign(static_cast<std::size_t>(range_->n_), 0);
  tuple_.resize(static_cast<std::size_t>(range_->sigma_.size()));
  done_ = !advance_from(0);
  if (!done_) refresh();
}

// Fill slots [slot, nu) with the lexicographically smallest unused values,
// starting each slot just above its current value. Returns false when the
// first slot overflows.
bool KernelTuples::iterator::advance_from(int slot) {
  const int nu = static_cast<int>(values_.size());
  const int n = range_->n_;
  int s = slot;
  while (s >= 0 && s < nu) {
    int& v = values_[static_cast<std::size_t>(s)];
    if (v >= 0) used_[static_cast<std::size_t>(v)] = 0;
    int cand = v + 1;
    while (cand < n && used_[static_cast<std::size_t>(cand)]) ++cand;
    if (cand < n) {
      v = cand;
      used_[static_cast<std::size_t>(v)] = 1;
      ++s;
    } else {
      v = -1;
      --s;
    }
  }
  return s == nu;
}

void KernelTuples::iterator::refresh() {
  const auto labels = range_->sigma_.labels();
  for (std::size_t p = 0; p < labels.size(); ++p)
    tuple_[p] = values_[static_cast<std::size_t>(labels[p])];
}

KernelTuples::iterator& KernelTuples::iterator::operator++() {
  if (done_) return *this;
  done_ = !advance_from(static_cast<int>(values_.size()) - 1);
  if (!done_) refresh();
  return *this;
}

}  // namespace agm::partitions
