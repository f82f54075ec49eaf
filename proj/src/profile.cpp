#include "csi/profile.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace csi {

namespace {

void canonicalize_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (!v.empty() && v[best] < 0.0)
    for (auto& x : v) x = -x;
}

std::vector<double> reindex(const std::vector<double>& v,
                            const std::vector<int>& col_map, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) out[col_map[i]] = v[i];
  return out;
}

// Deterministic symmetric accumulation: the term multiset is identical for
// (a,b) and (b,a), so summing in sorted order makes similarity exactly
// symmetric.
double sum_sorted(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

}  // namespace

AssociationMatrix build_association_matrix(const std::vector<LocationVector>& daily_vectors,
                                           const std::vector<int>& day_indices) {
  if (daily_vectors.empty())
    throw InsufficientData("no daily vectors: empty behavioral history");
  std::set<LocationId> keys;
  bool any_nonempty = false;
  for (const auto& v : daily_vectors) {
    if (!v.empty()) any_nonempty = true;
    for (const auto& [loc, frac] : v) keys.insert(loc);
  }
  if (!any_nonempty)
    throw InsufficientData("all daily vectors empty: empty behavioral history");

  AssociationMatrix m;
  m.location_keys.assign(keys.begin(), keys.end());
  std::map<LocationId, std::size_t> col;
  for (std::size_t i = 0; i < m.location_keys.size(); ++i) col[m.location_keys[i]] = i;
  for (const auto& v : daily_vectors) {
    std::vector<double> row(m.location_keys.size(), 0.0);
    for (const auto& [loc, frac] : v) row[col[loc]] = frac;
    m.rows.push_back(std::move(row));
  }
  if (day_indices.size() == daily_vectors.size()) {
    m.day_indices = day_indices;
  } else {
    m.day_indices.resize(daily_vectors.size());
    std::iota(m.day_indices.begin(), m.day_indices.end(), 0);
  }
  return m;
}

BehavioralProfile compute_profile(const AssociationMatrix& m, double power_threshold) {
  if (!(power_threshold > 0.0 && power_threshold <= 1.0))
    throw InvalidArgument("power_threshold must lie in (0,1]");
  if (m.num_rows() == 0 || m.num_cols() == 0)
    throw InsufficientData("empty association matrix");

  Eigen::MatrixXd mat(m.num_rows(), m.num_cols());
  for (std::size_t r = 0; r < m.num_rows(); ++r)
    for (std::size_t c = 0; c < m.num_cols(); ++c) mat(r, c) = m.rows[r][c];

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const auto& v = svd.matrixV();

  double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  double tol = std::max(1e-12, 1e-12 * sigma_max);
  std::vector<std::pair<double, std::vector<double>>> components;
  double power = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) <= tol) break;
    std::vector<double> vec(m.num_cols());
    for (std::size_t c = 0; c < m.num_cols(); ++c) vec[c] = v(c, i);
    canonicalize_sign(vec);
    components.emplace_back(sigma(i), std::move(vec));
    power += sigma(i) * sigma(i);
  }
  if (components.empty())
    throw InsufficientData("rank-0 association matrix: degenerate profile");

  // Ties between equal singular values: lexicographic order of vectors.
  std::stable_sort(components.begin(), components.end(),
                   [&](const auto& x, const auto& y) {
                     if (std::abs(x.first - y.first) > 1e-12 * std::max(1.0, sigma_max))
                       return x.first > y.first;
                     return x.second < y.second;
                   });

  double norm = std::sqrt(power);
  BehavioralProfile p;
  p.location_keys = m.location_keys;
  double cum = 0.0;
  for (const auto& [sv, vec] : components) {
    double w = sv / norm;
    p.weights.push_back(w);
    p.vectors.push_back(vec);
    cum += w * w;
    if (cum >= power_threshold - 1e-12) break;
  }
  return p;
}

BehavioralProfile profile_from_trace(const Trace& trace, const NodeId& node,
                                     int day_first, int day_last,
                                     double power_threshold) {
  auto dv = daily_location_vectors(trace, node, day_first, day_last);
  auto m = build_association_matrix(dv.vectors, dv.day_indices);
  return compute_profile(m, power_threshold);
}

std::pair<BehavioralProfile, BehavioralProfile> align_location_spaces(
    const BehavioralProfile& a, const BehavioralProfile& b) {
  if (a.location_keys == b.location_keys) return {a, b};
  std::set<LocationId> keys(a.location_keys.begin(), a.location_keys.end());
  keys.insert(b.location_keys.begin(), b.location_keys.end());
  std::vector<LocationId> union_keys(keys.begin(), keys.end());
  std::map<LocationId, int> col;
  for (std::size_t i = 0; i < union_keys.size(); ++i)
    col[union_keys[i]] = static_cast<int>(i);

  auto remap = [&](const BehavioralProfile& p) {
    std::vector<int> col_map(p.location_keys.size());
    for (std::size_t i = 0; i < p.location_keys.size(); ++i)
      col_map[i] = col[p.location_keys[i]];
    BehavioralProfile out;
    out.location_keys = union_keys;
    out.weights = p.weights;
    out.tag = p.tag;
    for (const auto& v : p.vectors)
      out.vectors.push_back(reindex(v, col_map, union_keys.size()));
    return out;
  };
  return {remap(a), remap(b)};
}

double similarity(const BehavioralProfile& a, const BehavioralProfile& b) {
  if (a.empty() || b.empty()) return 0.0;
  auto [pa, pb] = align_location_spaces(a, b);
  std::vector<double> terms;
  terms.reserve(pa.rank() * pb.rank());
  for (std::size_t i = 0; i < pa.rank(); ++i) {
    for (std::size_t j = 0; j < pb.rank(); ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < pa.location_keys.size(); ++k)
        dot += pa.vectors[i][k] * pb.vectors[j][k];
      terms.push_back(pa.weights[i] * pb.weights[j] * std::abs(dot));
    }
  }
  return std::clamp(sum_sorted(terms), 0.0, 1.0);
}

double similarity_to_target(const BehavioralProfile& a, const TargetProfile& tp) {
  double norm2 = 0.0;
  for (const auto& [loc, v] : tp.entries) norm2 += v * v;
  if (norm2 <= 0.0) throw InvalidArgument("target profile vector is zero");
  if (a.empty()) return 0.0;

  BehavioralProfile t;
  for (const auto& [loc, v] : tp.entries) t.location_keys.push_back(loc);
  std::vector<double> vec;
  double norm = std::sqrt(norm2);
  for (const auto& [loc, v] : tp.entries) vec.push_back(v / norm);
  t.vectors.push_back(std::move(vec));
  t.weights.push_back(1.0);
  return similarity(a, t);
}

std::string profile_to_text(const BehavioralProfile& p) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < p.rank(); ++i) {
    out << p.weights[i];
    for (std::size_t k = 0; k < p.location_keys.size(); ++k)
      if (p.vectors[i][k] != 0.0)
        out << ' ' << p.location_keys[k] << ':' << p.vectors[i][k];
    out << '\n';
  }
  return out.str();
}

BehavioralProfile profile_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> weights;
  std::vector<LocationVector> sparse_vectors;
  std::set<LocationId> keys;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double w;
    if (!(ls >> w)) throw InputError("bad profile line: " + line);
    LocationVector v;
    std::string pair;
    while (ls >> pair) {
      auto colon = pair.rfind(':');
      if (colon == std::string::npos || colon == 0)
        throw InputError("bad profile entry: " + pair);
      LocationId loc = pair.substr(0, colon);
      v[loc] = std::stod(pair.substr(colon + 1));
      keys.insert(loc);
    }
    weights.push_back(w);
    sparse_vectors.push_back(std::move(v));
  }
  BehavioralProfile p;
  p.location_keys.assign(keys.begin(), keys.end());
  std::map<LocationId, std::size_t> col;
  for (std::size_t i = 0; i < p.location_keys.size(); ++i) col[p.location_keys[i]] = i;
  p.weights = weights;
  for (const auto& sv : sparse_vectors) {
    std::vector<double> v(p.location_keys.size(), 0.0);
    for (const auto& [loc, x] : sv) v[col[loc]] = x;
    p.vectors.push_back(std::move(v));
  }
  return p;
}

}  // namespace csi
