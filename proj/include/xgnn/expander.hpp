#pragma once

#include "xgnn/common.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace xgnn {

/// Binary connection pattern between an input unit set (rows) and an output
/// unit set (cols). Each unit of the smaller set (rows on ties) keeps exactly
/// `degree` distinct partners in the larger set, stored sorted.
class ExpanderMask {
 public:
  ExpanderMask(Index rows, Index cols, Index degree, std::uint64_t seed,
               std::vector<std::vector<Index>> partners);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index degree() const { return degree_; }
  std::uint64_t seed() const { return seed_; }

  bool rows_are_smaller() const { return rows_ <= cols_; }
  Index smaller() const { return rows_are_smaller() ? rows_ : cols_; }
  Index larger() const { return rows_are_smaller() ? cols_ : rows_; }

  /// partners()[u] lists the larger-set units joined to smaller-set unit u.
  const std::vector<std::vector<Index>>& partners() const { return partners_; }

  bool contains(Index row, Index col) const;
  Index ones() const { return degree_ * smaller(); }

  /// rows x cols matrix of zeros and ones.
  Matrix dense() const;

  friend bool operator==(const ExpanderMask&, const ExpanderMask&) = default;

 private:
  Index rows_;
  Index cols_;
  Index degree_;
  std::uint64_t seed_;
  std::vector<std::vector<Index>> partners_;
};

/// max(1, round(density * max(n_in, n_out))), half away from zero.
Index degree_for_density(Index n_in, Index n_out, double density);

/// Samples degree_for_density(...) partners per smaller-set unit, uniformly
/// without replacement (partial Fisher-Yates). Unit u draws from its own
/// substream derive_seed(seed, Stream::Unit, u), so the result does not
/// depend on sampling order. Throws InvalidArgument unless density is in (0, 1].
ExpanderMask sample_mask(Index n_in, Index n_out, double density, std::uint64_t seed);

/// degree / max(rows, cols)
double mask_density(const ExpanderMask& mask);

/// Cost of multiplying an n-row input through the masked layer:
/// 2 * n * degree * min(rows, cols).
std::int64_t flop_estimate(const ExpanderMask& mask, Index n);

struct MaskDiagnostics {
  std::vector<Index> row_degrees;
  std::vector<Index> col_degrees;
  Index isolated_rows = 0;
  Index isolated_cols = 0;
  Index isolated_larger = 0;
  /// Every smaller-set unit has exactly `degree` distinct partners.
  bool regular = false;
  /// The mask has no ones at all.
  bool collapsed = false;
};

MaskDiagnostics verify_mask(const ExpanderMask& mask);

/// Text format: header "rows cols d seed", then one line per smaller-set unit
/// with its sorted partner indices separated by single spaces.
void write_mask(std::ostream& out, const ExpanderMask& mask);
ExpanderMask read_mask(std::istream& in);

}  // namespace xgnn
