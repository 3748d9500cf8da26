#include "kclab/grid_field.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace kclab {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw std::invalid_argument("multi-index entries must be >= 0");
    order_ += e;
  }
}

MultiIndex MultiIndex::unit(std::size_t n, std::size_t axis) {
  std::vector<int> e(n, 0);
  e.at(axis) = 1;
  return MultiIndex(std::move(e));
}

std::string MultiIndex::str() const {
  std::string s = "(";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(entries_[i]);
  }
  return s + ")";
}

namespace {

void fill_indices(std::size_t n, std::size_t pos, int remaining, std::vector<int>& cur,
                  std::vector<MultiIndex>& out) {
  if (pos + 1 == n) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {
    cur[pos] = v;
    fill_indices(n, pos + 1, remaining - v, cur, out);
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<MultiIndex> multi_indices_of_order(std::size_t n, int order) {
  if (n == 0 || order < 0) throw std::invalid_argument("bad multi-index request");
  std::vector<MultiIndex> out;
  std::vector<int> cur(n, 0);
  fill_indices(n, 0, order, cur, out);
  return out;
}

GridField::GridField(Lattice lat, std::vector<double> vals)
    : lattice(std::move(lat)), values(std::move(vals)), trim(lattice.dim(), 0) {
  if (values.size() != lattice.size())
    throw std::invalid_argument("field values do not match lattice size");
}

std::size_t GridField::valid_count() const {
  if (mask.empty()) return values.size();
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

bool GridField::has_derivative(const MultiIndex& alpha) const {
  return alpha.order() == 0 || derivatives.contains(alpha);
}

const std::vector<double>& GridField::derivative(const MultiIndex& alpha) const {
  if (alpha.size() != lattice.dim())
    throw std::invalid_argument("multi-index dimension does not match field");
  if (alpha.order() == 0) return values;
  const auto it = derivatives.find(alpha);
  if (it == derivatives.end())
    throw std::out_of_range("derivative " + alpha.str() + " unavailable (d_avail = " +
                            std::to_string(d_avail) + ")");
  return it->second;
}

void GridField::set_derivative(const MultiIndex& alpha, std::vector<double> data) {
  if (data.size() != values.size())
    throw std::invalid_argument("derivative shape does not match values");
  if (alpha.order() == 0) {
    values = std::move(data);
    return;
  }
  derivatives[alpha] = std::move(data);
}

GridField GridField::derivative_field(const MultiIndex& alpha) const {
  GridField out(lattice, derivative(alpha));
  out.mask = mask;
  out.trim = trim;
  return out;
}

GridField GridField::restrict(std::size_t stride) const {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  std::vector<std::size_t> counts(lattice.dim());
  for (std::size_t i = 0; i < lattice.dim(); ++i) {
    if ((lattice.count(i) - 1) % stride != 0)
      throw std::invalid_argument("stride does not divide the lattice");
    counts[i] = (lattice.count(i) - 1) / stride + 1;
  }
  Lattice coarse(lattice.domain(), counts);
  auto pick = [&](const std::vector<double>& src) {
    std::vector<double> dst(coarse.size());
    for (std::size_t f = 0; f < coarse.size(); ++f) {
      auto idx = coarse.multi_index(f);
      for (auto& k : idx) k *= stride;
      dst[f] = src[lattice.flat_index(idx)];
    }
    return dst;
  };
  GridField out(coarse, pick(values));
  for (const auto& [alpha, data] : derivatives) out.derivatives.emplace(alpha, pick(data));
  out.d_avail = d_avail;
  if (!mask.empty()) {
    out.mask.resize(coarse.size());
    for (std::size_t f = 0; f < coarse.size(); ++f) {
      auto idx = coarse.multi_index(f);
      for (auto& k : idx) k *= stride;
      out.mask[f] = mask[lattice.flat_index(idx)];
    }
  }
  return out;
}

void write_grid_field_csv(std::ostream& out, const GridField& field) {
  const auto& lat = field.lattice;
  auto row = [&](const char* key, const auto& vec) {
    out << key;
    for (const auto& v : vec) {
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
        out << ',' << fmt(v);
      else
        out << ',' << v;
    }
    out << '\n';
  };
  out << "dim," << lat.dim() << '\n';
  row("lower", lat.domain().lower());
  row("upper", lat.domain().upper());
  row("m", lat.counts());
  out << "d_avail," << field.d_avail << '\n';
  out << "values\n";
  for (double v : field.values) out << fmt(v) << '\n';
  for (const auto& [alpha, data] : field.derivatives) {
    row("derivative", alpha.entries());
    for (double v : data) out << fmt(v) << '\n';
  }
  if (!field.mask.empty()) {
    out << "mask\n";
    for (auto v : field.mask) out << static_cast<int>(v) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

std::vector<std::string> expect_row(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("grid field csv: missing '" + key + "'");
  auto cells = split(line);
  if (cells.empty() || cells[0] != key)
    throw std::runtime_error("grid field csv: expected '" + key + "'");
  cells.erase(cells.begin());
  return cells;
}

template <class T>
std::vector<T> parse_all(const std::vector<std::string>& cells) {
  std::vector<T> out;
  for (const auto& c : cells) {
    if constexpr (std::is_same_v<T, double>)
      out.push_back(std::stod(c));
    else
      out.push_back(static_cast<T>(std::stoll(c)));
  }
  return out;
}

}  // namespace

GridField read_grid_field_csv(std::istream& in) {
  const auto dim = parse_all<std::size_t>(expect_row(in, "dim")).at(0);
  auto lower = parse_all<double>(expect_row(in, "lower"));
  auto upper = parse_all<double>(expect_row(in, "upper"));
  auto counts = parse_all<std::size_t>(expect_row(in, "m"));
  if (lower.size() != dim || counts.size() != dim)
    throw std::runtime_error("grid field csv: header dimension mismatch");
  const int d_avail = parse_all<int>(expect_row(in, "d_avail")).at(0);
  Lattice lat(BoxDomain(std::move(lower), std::move(upper)), std::move(counts));
  expect_row(in, "values");
  auto read_block = [&] {
    std::vector<double> v(lat.size());
    std::string line;
    for (auto& x : v) {
      if (!std::getline(in, line)) throw std::runtime_error("grid field csv: truncated");
      x = std::stod(line);
    }
    return v;
  };
  GridField field(lat, read_block());
  field.d_avail = d_avail;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells[0] == "derivative") {
      cells.erase(cells.begin());
      field.set_derivative(MultiIndex(parse_all<int>(cells)), read_block());
    } else if (cells[0] == "mask") {
      auto m = read_block();
      field.mask.assign(m.begin(), m.end());
    } else {
      throw std::runtime_error("grid field csv: unexpected section '" + cells[0] + "'");
    }
  }
  return field;
}

}  // namespace kclab
