#include "cdglab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

#include "cdglab/quadrature.hpp"

namespace cdglab {

namespace {

void require_scalar_field(const DGField& f, const Mesh& mesh,
                          const NodalBasis& basis, int arity) {
  if (f.arity != arity || f.num_elements != mesh.num_elements() ||
      f.block_size != basis.size())
    throw std::invalid_argument("field layout does not match mesh and basis");
}

}  // namespace

int error_quadrature_degree(int p) { return std::max(2 * p + 8, 14); }

double l2_error(const DGField& u_h, const Mesh& mesh, const NodalBasis& basis,
                const ScalarFn& u_exact) {
  require_scalar_field(u_h, mesh, basis, 1);
  const TriangleRule rule = triangle_quadrature(error_quadrature_degree(basis.p()));
  const RefEval ref = basis.eval(rule.points, false);
  const int S = basis.size(), Q = int(rule.points.size());

  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    for (int q = 0; q < Q; ++q) {
      double uh = 0.0;
      for (int i = 0; i < S; ++i) uh += u_h.at(e, i) * ref.values(i, q);
      const Vec2 x = geom.to_physical(rule.points[q]);
      const double diff = uh - u_exact(x.x, x.y);
      total += rule.weights[q] * geom.det * diff * diff;
    }
  }
  return std::sqrt(total);
}

double h1_seminorm_error(const DGField& u_h, const Mesh& mesh,
                         const NodalBasis& basis,
                         const VectorFn& u_exact_gradient) {
  require_scalar_field(u_h, mesh, basis, 1);
  const TriangleRule rule = triangle_quadrature(error_quadrature_degree(basis.p()));
  const int S = basis.size(), Q = int(rule.points.size());

  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    const ElementEval ev = evaluate_on_element(basis, geom, rule.points, true);
    for (int q = 0; q < Q; ++q) {
      double gx = 0.0, gy = 0.0;
      for (int i = 0; i < S; ++i) {
        gx += u_h.at(e, i) * ev.grad_x(i, q);
        gy += u_h.at(e, i) * ev.grad_y(i, q);
      }
      const Vec2 x = geom.to_physical(rule.points[q]);
      const Vec2 g = u_exact_gradient(x.x, x.y);
      const double dx = gx - g.x, dy = gy - g.y;
      total += rule.weights[q] * geom.det * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(total);
}

double l2_vector_error(const DGField& field, const Mesh& mesh,
                       const NodalBasis& basis, const VectorFn& exact) {
  require_scalar_field(field, mesh, basis, 2);
  const TriangleRule rule = triangle_quadrature(error_quadrature_degree(basis.p()));
  const RefEval ref = basis.eval(rule.points, false);
  const int S = basis.size(), Q = int(rule.points.size());

  double total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    for (int q = 0; q < Q; ++q) {
      double fx = 0.0, fy = 0.0;
      for (int i = 0; i < S; ++i) {
        fx += field.at(e, i, 0) * ref.values(i, q);
        fy += field.at(e, i, 1) * ref.values(i, q);
      }
      const Vec2 x = geom.to_physical(rule.points[q]);
      const Vec2 g = exact(x.x, x.y);
      const double dx = fx - g.x, dy = fy - g.y;
      total += rule.weights[q] * geom.det * (dx * dx + dy * dy);
    }
  }
  return std::sqrt(total);
}

double l2_best_approximation_error(const Mesh& mesh, const NodalBasis& basis,
                                   const ScalarFn& u_exact) {
  const TriangleRule rule = triangle_quadrature(error_quadrature_degree(basis.p()));
  const RefEval ref = basis.eval(rule.points, false);
  const int S = basis.size(), Q = int(rule.points.size());

  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(S, S);
  for (int q = 0; q < Q; ++q)
    mass.noalias() += rule.weights[q] * ref.values.col(q) * ref.values.col(q).transpose();
  const Eigen::LDLT<Eigen::MatrixXd> mass_ldlt(mass);

  double total = 0.0;
  std::vector<double> u_at(Q);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const ElementGeometry geom = mesh.element_geometry(e);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S);
    for (int q = 0; q < Q; ++q) {
      const Vec2 x = geom.to_physical(rule.points[q]);
      u_at[q] = u_exact(x.x, x.y);
      rhs.noalias() += rule.weights[q] * u_at[q] * ref.values.col(q);
    }
    // The reference-element mass factorization is reused for every element:
    // the affine det scales both sides of the projection system equally.
    const Eigen::VectorXd coeff = mass_ldlt.solve(rhs);
    // Integrating the pointwise residual keeps the result accurate even when
    // the projection captures u to near machine precision (the Gram-based
    // form u^2 - b^T M^{-1} b cancels catastrophically there).
    for (int q = 0; q < Q; ++q) {
      const double diff = u_at[q] - coeff.dot(ref.values.col(q));
      total += rule.weights[q] * geom.det * diff * diff;
    }
  }
  return std::sqrt(total);
}

std::optional<double> convergence_rate(double e1, double h1, double e2,
                                       double h2) {
  if (e1 <= 0.0 || e2 <= 0.0 || h1 <= 0.0 || h2 <= 0.0 || h1 == h2)
    return std::nullopt;
  return std::log(e1 / e2) / std::log(h1 / h2);
}

namespace {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t result = 1;
  for (int i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

}  // namespace

MemoryCount memory_counts(int d, int p, std::int64_t alpha) {
  if (d < 1 || d > 3) throw std::invalid_argument("dimension must be 1, 2, or 3");
  if (p < 1) throw std::invalid_argument("degree must be at least 1");
  if (alpha < 0) throw std::invalid_argument("neighbor count must be nonnegative");
  MemoryCount m;
  m.d = d;
  m.p = p;
  m.alpha = alpha;
  m.s = binomial(p + d, d);
  m.se = binomial(p + d - 1, d - 1);
  m.m_cdg = m.s * m.s + (d + 1) * m.se * m.s;
  m.m_ldg = m.m_cdg + alpha * m.se * m.se;
  m.m_br2 = m.s * m.s + (d + 1) * (2 * m.s - m.se) * m.se;
  return m;
}

SparsityCensus sparsity_census(const BlockSparseMatrix& pattern,
                               const Mesh& mesh, const NodalBasis& basis) {
  if (pattern.num_blocks() != mesh.num_elements() ||
      pattern.block_size() != basis.size())
    throw std::invalid_argument("pattern does not match mesh and basis");

  SparsityCensus census;
  const int T = mesh.num_elements();
  census.per_element.resize(T, 0);
  census.interior.resize(T, true);

  for (int e = 0; e < T; ++e) {
    std::int64_t count = (pattern.diag(e).array() != 0.0).count();
    for (const auto& [col, block] : pattern.row_blocks(e)) {
      (void)col;
      count += (block.array() != 0.0).count();
    }
    census.per_element[e] = count;
    census.total += count;
    for (int k = 0; k < 3; ++k)
      if (!mesh.element_faces[e][k].interior) census.interior[e] = false;
  }

  std::int64_t interior_sum = 0;
  for (int e = 0; e < T; ++e) {
    if (!census.interior[e]) {
      ++census.boundary_elements;
      continue;
    }
    ++census.interior_elements;
    interior_sum += census.per_element[e];
    if (census.interior_elements == 1) {
      census.interior_min = census.per_element[e];
      census.interior_max = census.per_element[e];
    } else {
      census.interior_min = std::min(census.interior_min, census.per_element[e]);
      census.interior_max = std::max(census.interior_max, census.per_element[e]);
    }
  }
  if (census.interior_elements > 0) {
    census.interior_mean = double(interior_sum) / census.interior_elements;
    const double S = double(basis.size()), Se = double(basis.face_size());
    census.alpha_empirical =
        (census.interior_mean - S * S - 3.0 * Se * S) / (Se * Se);
  }
  return census;
}

namespace {

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Rates are rounded to one decimal in both output formats.
double round_rate(double r) { return std::round(r * 10.0) / 10.0; }

}  // namespace

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "scheme,switch,p,n,c11,eta,metric,value,rate,status\n";
  for (const ReportRow& row : rows) {
    out << csv_escape(row.scheme) << ',' << csv_escape(row.switch_strategy)
        << ',';
    if (row.p) out << *row.p;
    out << ',';
    if (row.n) out << *row.n;
    out << ',';
    if (row.c11) out << format_double(*row.c11, "%g");
    out << ',';
    if (row.eta) out << format_double(*row.eta, "%g");
    out << ',' << csv_escape(row.metric) << ',';
    if (row.value) out << format_double(*row.value, "%.17g");
    out << ',';
    if (row.rate) out << format_double(round_rate(*row.rate), "%.1f");
    out << ',' << csv_escape(row.status) << '\n';
  }
}

void write_json(std::ostream& out, const std::vector<ReportRow>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const ReportRow& row : rows) {
    nlohmann::ordered_json item;
    item["scheme"] = row.scheme;
    item["switch"] = row.switch_strategy;
    item["p"] = row.p ? nlohmann::ordered_json(*row.p)
                      : nlohmann::ordered_json(nullptr);
    item["n"] = row.n ? nlohmann::ordered_json(*row.n)
                      : nlohmann::ordered_json(nullptr);
    item["c11"] = row.c11 ? nlohmann::ordered_json(*row.c11)
                          : nlohmann::ordered_json(nullptr);
    item["eta"] = row.eta ? nlohmann::ordered_json(*row.eta)
                          : nlohmann::ordered_json(nullptr);
    item["metric"] = row.metric;
    item["value"] = row.value ? nlohmann::ordered_json(*row.value)
                              : nlohmann::ordered_json(nullptr);
    item["rate"] = row.rate ? nlohmann::ordered_json(round_rate(*row.rate))
                            : nlohmann::ordered_json(nullptr);
    item["status"] = row.status;
    doc.push_back(std::move(item));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace cdglab
