#pragma once

#include <vector>

namespace ebshrink {

// Partition of variable indices {0..p-1} into G nonempty groups.
class GroupStructure {
 public:
  // assignment[j] in {0..G-1}; G inferred from the largest label.
  explicit GroupStructure(std::vector<int> assignment);

  int p() const { return static_cast<int>(assignment_.size()); }
  int groups() const { return n_groups_; }
  int group_of(int j) const { return assignment_[static_cast<std::size_t>(j)]; }
  int size_of(int g) const { return sizes_[static_cast<std::size_t>(g)]; }
  const std::vector<int>& members(int g) const {
    return members_[static_cast<std::size_t>(g)];
  }
  const std::vector<int>& assignment() const { return assignment_; }

  // One group covering everything.
  static GroupStructure single(int p);

  // G consecutive groups of equal size; G must divide p.
  static GroupStructure contiguous(int p, int G);

 private:
  std::vector<int> assignment_;
  std::vector<int> sizes_;
  std::vector<std::vector<int>> members_;
  int n_groups_ = 0;
};

}  // namespace ebshrink
