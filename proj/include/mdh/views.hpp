#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mdh/mda.hpp"

namespace mdh {

// Affine index expression c0 + sum_j coeff[j] * i_j over the computation's
// dimensions. Negative coefficients are legal as long as every reachable
// value stays non-negative.
struct Affine {
  int64_t c0 = 0;
  std::vector<int64_t> coeff;

  int64_t eval(const std::vector<int64_t>& i) const;
  // Extremes over the box given by `ranges` (all ranges non-empty).
  int64_t min_over(const std::vector<IndexRange>& ranges) const;
  int64_t max_over(const std::vector<IndexRange>& ranges) const;

  // Text form over index names i,j,k,l,m,n,o,... by dimension position,
  // e.g. "i+1", "2*k", "j-1+i". dim_count fixes the coefficient width.
  static Affine parse(const std::string& text, int dim_count);
  std::string to_string() const;

  bool operator==(const Affine& o) const { return c0 == o.c0 && coeff == o.coeff; }
};

// One access of a buffer: a tuple of affine index expressions, one per buffer
// rank component, e.g. "i+1, k" for a rank-2 buffer.
struct ViewAccess {
  std::vector<Affine> idx;
  static ViewAccess parse(const std::string& text, int dim_count);
  std::string to_string() const;
};

struct ViewBuffer {
  std::string name;
  ScalarType type = ScalarType::Int64;
  int rank = 0;
  std::vector<ViewAccess> accesses;
};

// A view couples the MDA index space with a set of buffers. Applied as an
// input view it produces the MDA whose cell at index i is the tuple of
// buffer reads, in (buffer, access) declaration order; applied as an output
// view it scatters result components through the index functions.
struct ViewSpec {
  std::vector<ViewBuffer> buffers;
  int total_access_count() const;
  // Flat component position of (buf, acc), both 1-based.
  int comp_offset(int buf, int acc) const;
};

// Minimal buffer extents so every access over `ranges` lands in bounds:
// N_r = 1 + max over accesses. Closed-form corner evaluation. Throws
// NegativeIndexReachable if some access can reach a negative coordinate.
std::vector<std::vector<int64_t>> infer_buffer_sizes(const ViewSpec& view,
                                                     const std::vector<IndexRange>& ranges);

// Lazy MDA over `ranges` reading through the view. Reads of cells never
// written throw UndefinedCellRead; coordinates outside a buffer throw
// BufferTooSmall / NegativeIndexReachable.
MdaView apply_input_view(const ViewSpec& view, const std::vector<std::shared_ptr<Buffer>>& buffers,
                         const std::vector<IndexRange>& ranges);

// Scatters every cell of `mda` through the view into freshly allocated
// buffers sized by infer_buffer_sizes over mda's ranges. Cells no index
// function reaches stay undefined. When two writes land on the same buffer
// cell the values must agree exactly (InconsistentNonInjectiveWrite).
std::vector<std::shared_ptr<Buffer>> apply_output_view(const ViewSpec& view, const MdaView& mda);

} // namespace mdh
