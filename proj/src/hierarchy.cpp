#include "lmgheom/hierarchy.hpp"

#include <map>
#include <string>

#include "lmgheom/errors.hpp"

namespace lmgheom {

namespace {

// Compositions of `level` into `modes` parts, lexicographically descending.
void compositions(int level, int modes, std::vector<int>& current, int slot,
                  std::vector<int>& out) {
  if (slot == modes - 1) {
    current[slot] = level;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int v = level; v >= 0; --v) {
    current[slot] = v;
    compositions(level - v, modes, current, slot + 1, out);
  }
}

}  // namespace

std::size_t HierarchyLayout::count(int depth, int modes) {
  // C(depth + modes, depth), built incrementally so each step stays exact.
  unsigned long long c = 1;
  for (int i = 1; i <= depth; ++i) {
    const unsigned long long num = static_cast<unsigned long long>(modes) + i;
    if (c > std::numeric_limits<unsigned long long>::max() / num) return npos;
    c = c * num / i;
  }
  return c > npos ? npos : static_cast<std::size_t>(c);
}

HierarchyLayout::HierarchyLayout(int depth, int modes, int dim, std::size_t cap)
    : depth_(depth), modes_(modes), dim_(dim) {
  if (depth < 1) throw InvalidArgument("hierarchy depth L must be >= 1");
  if (modes < 1) throw InvalidArgument("hierarchy needs at least one bath mode");
  if (dim < 1) throw InvalidArgument("hierarchy dimension must be positive");
  const std::size_t total = count(depth, modes);
  if (total == npos || total > cap)
    throw ResourceError("hierarchy with L=" + std::to_string(depth) + " and " +
                        std::to_string(modes) + " modes exceeds the ADO cap of " +
                        std::to_string(cap));

  counts_.reserve(total * modes);
  std::vector<int> current(modes, 0);
  for (int level = 0; level <= depth; ++level) compositions(level, modes, current, 0, counts_);

  const std::size_t n = counts_.size() / modes;
  level_.resize(n);
  std::map<std::vector<int>, std::size_t> index;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<int> key(counts_.begin() + a * modes, counts_.begin() + (a + 1) * modes);
    int lvl = 0;
    for (int v : key) lvl += v;
    level_[a] = lvl;
    index.emplace(std::move(key), a);
  }

  up_.assign(n * modes, npos);
  down_.assign(n * modes, npos);
  std::vector<int> key(modes);
  for (std::size_t a = 0; a < n; ++a) {
    std::copy(counts_.begin() + a * modes, counts_.begin() + (a + 1) * modes, key.begin());
    for (int k = 0; k < modes; ++k) {
      if (level_[a] < depth) {
        ++key[k];
        up_[a * modes + k] = index.at(key);
        --key[k];
      }
      if (key[k] > 0) {
        --key[k];
        down_[a * modes + k] = index.at(key);
        ++key[k];
      }
    }
  }
}

std::size_t HierarchyLayout::find(std::span<const int> counts) const {
  if (static_cast<int>(counts.size()) != modes_) return npos;
  for (std::size_t a = 0; a < size(); ++a) {
    auto c = this->counts(a);
    if (std::equal(c.begin(), c.end(), counts.begin())) return a;
  }
  return npos;
}

HierarchyState::HierarchyState(std::shared_ptr<const HierarchyLayout> l)
    : layout(std::move(l)),
      data(CMatrix::Zero(layout->dim(), static_cast<Eigen::Index>(layout->dim() * layout->size()))) {}

HierarchyState build_hierarchy(int depth, int m_cut, int dim, std::size_t cap) {
  if (m_cut < 0) throw InvalidArgument("Matsubara cutoff M must be >= 0");
  return HierarchyState(std::make_shared<const HierarchyLayout>(depth, m_cut + 1, dim, cap));
}

}  // namespace lmgheom
