#include "mdh/views.hpp"

#include <cctype>
#include <sstream>

#include "mdh/error.hpp"

namespace mdh {

namespace {
const char kDimNames[] = {'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v', 'w'};
constexpr int kMaxDims = static_cast<int>(sizeof(kDimNames));

int dim_of_name(char c) {
  for (int d = 0; d < kMaxDims; ++d)
    if (kDimNames[d] == c) return d + 1;
  return 0;
}
} // namespace

int64_t Affine::eval(const std::vector<int64_t>& i) const {
  int64_t v = c0;
  for (size_t d = 0; d < coeff.size(); ++d) v += coeff[d] * i[d];
  return v;
}

int64_t Affine::min_over(const std::vector<IndexRange>& ranges) const {
  int64_t v = c0;
  for (size_t d = 0; d < coeff.size(); ++d) {
    if (ranges[d].empty()) fail("OutOfRange", "affine extreme over an empty range");
    v += coeff[d] >= 0 ? coeff[d] * ranges[d].lo : coeff[d] * (ranges[d].hi - 1);
  }
  return v;
}

int64_t Affine::max_over(const std::vector<IndexRange>& ranges) const {
  int64_t v = c0;
  for (size_t d = 0; d < coeff.size(); ++d) {
    if (ranges[d].empty()) fail("OutOfRange", "affine extreme over an empty range");
    v += coeff[d] >= 0 ? coeff[d] * (ranges[d].hi - 1) : coeff[d] * ranges[d].lo;
  }
  return v;
}

Affine Affine::parse(const std::string& text, int dim_count) {
  Affine a;
  a.coeff.assign(static_cast<size_t>(dim_count), 0);
  size_t pos = 0;
  auto skip = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto die = [&](const std::string& msg) {
    fail("ParseError", msg + " at column " + std::to_string(pos + 1) + " in index expression '" + text + "'");
  };
  bool first = true;
  for (;;) {
    skip();
    if (pos >= text.size()) {
      if (first) die("empty index expression");
      break;
    }
    int64_t sign = 1;
    if (text[pos] == '+' || text[pos] == '-') {
      sign = text[pos] == '-' ? -1 : 1;
      ++pos;
      skip();
    } else if (!first) {
      die("expected '+' or '-'");
    }
    first = false;
    // term: INT ['*' VAR] | VAR ['*' INT]
    int64_t k = 1;
    bool have_int = false;
    if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      k = 0;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
        k = k * 10 + (text[pos++] - '0');
      have_int = true;
      skip();
      if (pos < text.size() && text[pos] == '*') {
        ++pos;
        skip();
      } else {
        a.c0 += sign * k;
        continue;
      }
    }
    if (pos >= text.size() || dim_of_name(text[pos]) == 0) die("expected index name");
    int d = dim_of_name(text[pos]);
    if (d > dim_count) die("index name beyond dimension count");
    ++pos;
    skip();
    if (!have_int && pos < text.size() && text[pos] == '*') {
      ++pos;
      skip();
      k = 0;
      if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) die("expected integer factor");
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
        k = k * 10 + (text[pos++] - '0');
    }
    a.coeff[static_cast<size_t>(d - 1)] += sign * k;
  }
  return a;
}

std::string Affine::to_string() const {
  std::ostringstream os;
  bool any = false;
  for (size_t d = 0; d < coeff.size(); ++d) {
    int64_t k = coeff[d];
    if (k == 0) continue;
    if (any)
      os << (k < 0 ? " - " : " + ");
    else if (k < 0)
      os << "-";
    int64_t m = k < 0 ? -k : k;
    if (m != 1) os << m << "*";
    os << (d < static_cast<size_t>(kMaxDims) ? kDimNames[d] : '?');
    any = true;
  }
  if (c0 != 0 || !any) {
    if (any)
      os << (c0 < 0 ? " - " : " + ") << (c0 < 0 ? -c0 : c0);
    else
      os << c0;
  }
  return os.str();
}

ViewAccess ViewAccess::parse(const std::string& text, int dim_count) {
  ViewAccess acc;
  size_t start = 0;
  for (;;) {
    size_t comma = text.find(',', start);
    std::string part = comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
    acc.idx.push_back(Affine::parse(part, dim_count));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return acc;
}

std::string ViewAccess::to_string() const {
  std::ostringstream os;
  for (size_t r = 0; r < idx.size(); ++r) {
    if (r) os << ", ";
    os << idx[r].to_string();
  }
  return os.str();
}

int ViewSpec::total_access_count() const {
  int n = 0;
  for (auto& b : buffers) n += static_cast<int>(b.accesses.size());
  return n;
}

int ViewSpec::comp_offset(int buf, int acc) const {
  int n = 0;
  for (int b = 0; b < buf - 1; ++b) n += static_cast<int>(buffers[static_cast<size_t>(b)].accesses.size());
  return n + (acc - 1);
}

std::vector<std::vector<int64_t>> infer_buffer_sizes(const ViewSpec& view,
                                                     const std::vector<IndexRange>& ranges) {
  std::vector<std::vector<int64_t>> out;
  out.reserve(view.buffers.size());
  for (auto& b : view.buffers) {
    std::vector<int64_t> dims(static_cast<size_t>(b.rank), 0);
    for (auto& acc : b.accesses) {
      for (int r = 0; r < b.rank; ++r) {
        const Affine& a = acc.idx[static_cast<size_t>(r)];
        int64_t lo = a.min_over(ranges);
        if (lo < 0)
          fail("NegativeIndexReachable", "buffer '" + b.name + "' access '" + acc.to_string() +
                                             "' reaches coordinate " + std::to_string(lo));
        int64_t hi = a.max_over(ranges);
        dims[static_cast<size_t>(r)] = std::max(dims[static_cast<size_t>(r)], hi + 1);
      }
    }
    out.push_back(std::move(dims));
  }
  return out;
}

namespace {
void check_shapes(const ViewSpec& view, const std::vector<std::shared_ptr<Buffer>>& buffers) {
  if (buffers.size() != view.buffers.size())
    fail("BufferTooSmall", "view declares " + std::to_string(view.buffers.size()) + " buffers, got " +
                               std::to_string(buffers.size()));
  for (size_t b = 0; b < buffers.size(); ++b) {
    if (!buffers[b]) fail("BufferTooSmall", "missing buffer '" + view.buffers[b].name + "'");
    if (static_cast<int>(buffers[b]->dims.size()) != view.buffers[b].rank)
      fail("BufferTooSmall", "buffer '" + view.buffers[b].name + "' rank mismatch");
    if (buffers[b]->elem_type != view.buffers[b].type)
      fail("MixedTypes", "buffer '" + view.buffers[b].name + "' element type mismatch");
  }
}

std::vector<int64_t> access_coords(const ViewBuffer& vb, const ViewAccess& acc, const Buffer& buf,
                                   const std::vector<int64_t>& i) {
  std::vector<int64_t> c(acc.idx.size());
  for (size_t r = 0; r < acc.idx.size(); ++r) {
    c[r] = acc.idx[r].eval(i);
    if (c[r] < 0)
      fail("NegativeIndexReachable",
           "buffer '" + vb.name + "' access '" + acc.to_string() + "' hit coordinate " + std::to_string(c[r]));
    if (c[r] >= buf.dims[r])
      fail("BufferTooSmall", "buffer '" + vb.name + "' of extent " + std::to_string(buf.dims[r]) +
                                 " indexed at " + std::to_string(c[r]));
  }
  return c;
}
} // namespace

MdaView apply_input_view(const ViewSpec& view, const std::vector<std::shared_ptr<Buffer>>& buffers,
                         const std::vector<IndexRange>& ranges) {
  check_shapes(view, buffers);
  MdaView mda;
  mda.ranges = ranges;
  int arity = view.total_access_count();
  mda.elem = [view, buffers, arity](const std::vector<int64_t>& i) {
    ScalarValue v;
    v.is_tuple = arity > 1;
    v.comps.reserve(static_cast<size_t>(arity));
    for (size_t b = 0; b < view.buffers.size(); ++b) {
      const ViewBuffer& vb = view.buffers[b];
      const Buffer& buf = *buffers[b];
      for (auto& acc : vb.accesses) {
        std::vector<int64_t> c = access_coords(vb, acc, buf, i);
        if (!buf.is_defined(c))
          fail("UndefinedCellRead", "buffer '" + vb.name + "' read at an unwritten cell via '" +
                                        acc.to_string() + "'");
        v.comps.push_back(buf.get(c));
      }
    }
    return v;
  };
  return mda;
}

std::vector<std::shared_ptr<Buffer>> apply_output_view(const ViewSpec& view, const MdaView& mda) {
  std::vector<std::vector<int64_t>> sizes = infer_buffer_sizes(view, mda.ranges);
  std::vector<std::shared_ptr<Buffer>> buffers;
  buffers.reserve(view.buffers.size());
  for (size_t b = 0; b < view.buffers.size(); ++b)
    buffers.push_back(std::make_shared<Buffer>(Buffer::make(sizes[b], view.buffers[b].type)));
  int arity = view.total_access_count();
  for_each_index(mda.ranges, [&](const std::vector<int64_t>& i) {
    ScalarValue v = mda.elem(i);
    if (static_cast<int>(v.comps.size()) != arity)
      fail("IndexOutOfBounds", "result arity " + std::to_string(v.comps.size()) + " does not match the " +
                                   std::to_string(arity) + " output accesses");
    int comp = 0;
    for (size_t b = 0; b < view.buffers.size(); ++b) {
      const ViewBuffer& vb = view.buffers[b];
      Buffer& buf = *buffers[b];
      for (auto& acc : vb.accesses) {
        std::vector<int64_t> c = access_coords(vb, acc, buf, i);
        const ScalarValue::Comp& val = v.comps[static_cast<size_t>(comp++)];
        if (buf.is_defined(c)) {
          const ScalarValue::Comp old = buf.get(c);
          bool same = old.type == val.type &&
                      (old.type == ScalarType::Int64 ? old.i == val.i : old.f == val.f);
          if (!same)
            fail("InconsistentNonInjectiveWrite",
                 "buffer '" + vb.name + "' receives disagreeing values at one cell");
        } else {
          buf.set(c, val);
        }
      }
    }
  });
  return buffers;
}

} // namespace mdh
