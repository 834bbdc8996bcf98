#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "lmgheom/linalg.hpp"

namespace lmgheom {

inline constexpr std::size_t kDefaultAdoCap = 1'000'000;

/// Multi-indices (n_0, ..., n_{modes-1}) with total level <= depth, in graded
/// order; within a level the counts are sorted lexicographically, largest n_0 first.
class HierarchyLayout {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  HierarchyLayout(int depth, int modes, int dim, std::size_t cap = kDefaultAdoCap);

  /// Number of multi-indices; saturates at npos on overflow.
  static std::size_t count(int depth, int modes);

  std::size_t size() const { return level_.size(); }
  int depth() const { return depth_; }
  int modes() const { return modes_; }
  int dim() const { return dim_; }

  std::span<const int> counts(std::size_t a) const {
    return {counts_.data() + a * modes_, static_cast<std::size_t>(modes_)};
  }
  int level(std::size_t a) const { return level_[a]; }
  std::size_t up(std::size_t a, int k) const { return up_[a * modes_ + k]; }
  std::size_t down(std::size_t a, int k) const { return down_[a * modes_ + k]; }
  std::size_t find(std::span<const int> counts) const;

 private:
  int depth_, modes_, dim_;
  std::vector<int> counts_;
  std::vector<int> level_;
  std::vector<std::size_t> up_, down_;
};

/// All ADOs stored side by side in one dim x (dim * size) matrix; ADO a
/// occupies columns [a*dim, (a+1)*dim). Index 0 is the physical density matrix.
struct HierarchyState {
  std::shared_ptr<const HierarchyLayout> layout;
  CMatrix data;
  double time = 0.0;

  explicit HierarchyState(std::shared_ptr<const HierarchyLayout> l);

  auto ado(std::size_t a) { return data.middleCols(a * layout->dim(), layout->dim()); }
  auto ado(std::size_t a) const { return data.middleCols(a * layout->dim(), layout->dim()); }
  CMatrix rho_s() const { return ado(0); }
};

HierarchyState build_hierarchy(int depth, int m_cut, int dim, std::size_t cap = kDefaultAdoCap);

}  // namespace lmgheom
