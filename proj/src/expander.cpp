#include "xgnn/expander.hpp"

#include "xgnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace xgnn {

ExpanderMask::ExpanderMask(Index rows, Index cols, Index degree, std::uint64_t seed,
                           std::vector<std::vector<Index>> partners)
    : rows_(rows), cols_(cols), degree_(degree), seed_(seed), partners_(std::move(partners)) {
  if (rows_ < 1 || cols_ < 1) throw InvalidArgument("ExpanderMask: both sides need >= 1 unit");
  if (degree_ < 1 || degree_ > larger())
    throw InvalidArgument("ExpanderMask: degree " + std::to_string(degree_) +
                          " outside [1, " + std::to_string(larger()) + "]");
  if (static_cast<Index>(partners_.size()) != smaller())
    throw InvalidArgument("ExpanderMask: expected one partner list per smaller-set unit");
  for (std::size_t u = 0; u < partners_.size(); ++u) {
    const auto& list = partners_[u];
    if (static_cast<Index>(list.size()) != degree_)
      throw InvalidArgument("ExpanderMask: unit " + std::to_string(u) + " has " +
                            std::to_string(list.size()) + " partners, expected " +
                            std::to_string(degree_));
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k] < 0 || list[k] >= larger() || (k > 0 && list[k] <= list[k - 1]))
        throw InvalidArgument("ExpanderMask: partners of unit " + std::to_string(u) +
                              " must be sorted, distinct and in range");
    }
  }
}

bool ExpanderMask::contains(Index row, Index col) const {
  const Index unit = rows_are_smaller() ? row : col;
  const Index partner = rows_are_smaller() ? col : row;
  const auto& list = partners_[unit];
  return std::binary_search(list.begin(), list.end(), partner);
}

Matrix ExpanderMask::dense() const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (Index u = 0; u < smaller(); ++u)
    for (Index v : partners_[u]) {
      if (rows_are_smaller())
        out(u, v) = 1.0;
      else
        out(v, u) = 1.0;
    }
  return out;
}

Index degree_for_density(Index n_in, Index n_out, double density) {
  if (!(density > 0.0 && density <= 1.0))
    throw InvalidArgument("expander density must lie in (0, 1], got " + std::to_string(density));
  if (n_in < 1 || n_out < 1) throw InvalidArgument("expander layer needs >= 1 unit per side");
  const Index larger = std::max(n_in, n_out);
  const auto d = static_cast<Index>(std::llround(density * static_cast<double>(larger)));
  return std::clamp<Index>(d, 1, larger);
}

ExpanderMask sample_mask(Index n_in, Index n_out, double density, std::uint64_t seed) {
  const Index d = degree_for_density(n_in, n_out, density);
  const Index smaller = std::min(n_in, n_out);
  const Index larger = std::max(n_in, n_out);
  std::vector<std::vector<Index>> partners(static_cast<std::size_t>(smaller));
  std::vector<Index> pool(static_cast<std::size_t>(larger));
  for (Index u = 0; u < smaller; ++u) {
    std::iota(pool.begin(), pool.end(), Index{0});
    Rng rng(derive_seed(seed, Stream::Unit, static_cast<std::uint64_t>(u)));
    for (Index i = 0; i < d; ++i) {
      const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(larger - i)));
      std::swap(pool[i], pool[j]);
    }
    auto& list = partners[u];
    list.assign(pool.begin(), pool.begin() + d);
    std::sort(list.begin(), list.end());
  }
  return {n_in, n_out, d, seed, std::move(partners)};
}

double mask_density(const ExpanderMask& mask) {
  return static_cast<double>(mask.degree()) / static_cast<double>(mask.larger());
}

std::int64_t flop_estimate(const ExpanderMask& mask, Index n) {
  if (n < 1) throw InvalidArgument("flop_estimate: n must be >= 1");
  return 2 * n * mask.degree() * mask.smaller();
}

MaskDiagnostics verify_mask(const ExpanderMask& mask) {
  MaskDiagnostics diag;
  diag.row_degrees.assign(static_cast<std::size_t>(mask.rows()), 0);
  diag.col_degrees.assign(static_cast<std::size_t>(mask.cols()), 0);
  diag.regular = true;
  Index ones = 0;
  for (Index u = 0; u < mask.smaller(); ++u) {
    const auto& list = mask.partners()[u];
    std::vector<Index> sorted(list);
    std::sort(sorted.begin(), sorted.end());
    if (static_cast<Index>(list.size()) != mask.degree() ||
        std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      diag.regular = false;
    for (Index v : list) {
      const Index r = mask.rows_are_smaller() ? u : v;
      const Index c = mask.rows_are_smaller() ? v : u;
      ++diag.row_degrees[r];
      ++diag.col_degrees[c];
      ++ones;
    }
  }
  diag.isolated_rows = std::count(diag.row_degrees.begin(), diag.row_degrees.end(), 0);
  diag.isolated_cols = std::count(diag.col_degrees.begin(), diag.col_degrees.end(), 0);
  diag.isolated_larger = mask.rows_are_smaller() ? diag.isolated_cols : diag.isolated_rows;
  diag.collapsed = ones == 0;
  return diag;
}

void write_mask(std::ostream& out, const ExpanderMask& mask) {
  out << mask.rows() << ' ' << mask.cols() << ' ' << mask.degree() << ' ' << mask.seed()
      << '\n';
  for (const auto& list : mask.partners()) {
    for (std::size_t k = 0; k < list.size(); ++k) out << (k ? " " : "") << list[k];
    out << '\n';
  }
}

ExpanderMask read_mask(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("mask: missing header line");
  std::istringstream header(line);
  Index rows = 0, cols = 0, d = 0;
  std::uint64_t seed = 0;
  std::string extra;
  if (!(header >> rows >> cols >> d >> seed) || (header >> extra))
    throw DataError("mask line 1: expected header \"rows cols d seed\"");
  if (rows < 1 || cols < 1) throw DataError("mask line 1: shape must be positive");
  const Index smaller = std::min(rows, cols);
  std::vector<std::vector<Index>> partners;
  partners.reserve(static_cast<std::size_t>(smaller));
  for (Index u = 0; u < smaller; ++u) {
    if (!std::getline(in, line))
      throw DataError("mask: expected " + std::to_string(smaller) + " unit lines, found " +
                      std::to_string(u));
    std::istringstream row(line);
    std::vector<Index> list;
    Index v = 0;
    while (row >> v) list.push_back(v);
    if (!row.eof()) throw DataError("mask line " + std::to_string(u + 2) + ": not an integer");
    partners.push_back(std::move(list));
  }
  while (std::getline(in, line))
    if (!line.empty()) throw DataError("mask: trailing content after unit lines");
  try {
    return {rows, cols, d, seed, std::move(partners)};
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("mask: ") + e.what());
  }
}

}  // namespace xgnn
