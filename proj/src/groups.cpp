#include "ebshrink/groups.hpp"

#include <string>

#include "ebshrink/errors.hpp"

namespace ebshrink {

GroupStructure::GroupStructure(std::vector<int> assignment)
    : assignment_(std::move(assignment)) {
  if (assignment_.empty()) throw DomainError("GroupStructure: empty assignment");
  int max_label = 0;
  for (int g : assignment_) {
    if (g < 0) throw DomainError("GroupStructure: negative group label");
    if (g > max_label) max_label = g;
  }
  n_groups_ = max_label + 1;
  sizes_.assign(static_cast<std::size_t>(n_groups_), 0);
  members_.assign(static_cast<std::size_t>(n_groups_), {});
  for (std::size_t j = 0; j < assignment_.size(); ++j) {
    const auto g = static_cast<std::size_t>(assignment_[j]);
    ++sizes_[g];
    members_[g].push_back(static_cast<int>(j));
  }
  for (int g = 0; g < n_groups_; ++g) {
    if (sizes_[static_cast<std::size_t>(g)] == 0)
      throw DomainError("GroupStructure: group " + std::to_string(g) +
                        " is empty");
  }
}

GroupStructure GroupStructure::single(int p) {
  return GroupStructure(std::vector<int>(static_cast<std::size_t>(p), 0));
}

GroupStructure GroupStructure::contiguous(int p, int G) {
  if (G < 1 || p % G != 0)
    throw DomainError("GroupStructure: G must divide p for contiguous groups");
  std::vector<int> a(static_cast<std::size_t>(p));
  const int per = p / G;
  for (int j = 0; j < p; ++j) a[static_cast<std::size_t>(j)] = j / per;
  return GroupStructure(std::move(a));
}

}  // namespace ebshrink
