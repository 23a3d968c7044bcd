#include "dynolearn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynolearn/csv.hpp"
#include "dynolearn/errors.hpp"

namespace dynolearn {

Matrix hilbert_matrix(std::size_t window) {
  if (window == 0) throw ContractViolation("hilbert_matrix: window must be >= 1");
  Matrix h(window, window);
  for (std::size_t i = 0; i < window; ++i)
    for (std::size_t j = 0; j < window; ++j) h(i, j) = 1.0 / static_cast<double>(i + j + 1);
  return h;
}

namespace {

std::size_t count_reliable(const Vector& values) {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double mu) { return mu >= kReliableEigenvalueFloor * values.front(); }));
}

template <typename Newest>
Vector features_impl(const FilterBank& bank, std::size_t available, std::size_t obs_dim, Newest&& newest) {
  const std::size_t per = bank.filters_per_coord();
  Vector z(per * obs_dim, 0.0);
  const std::size_t n = std::min(available, bank.window);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector& y = newest(k);
    const auto phi_row = bank.phis.row_span(k);
    const double alt = (k % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t c = 0; c < obs_dim; ++c) {
      const double v = y[c];
      if (v == 0.0) continue;
      double* block = z.data() + c * per;
      for (std::size_t j = 0; j < bank.m; ++j) block[j] += phi_row[j] * v;
      if (bank.sign_augmented)
        for (std::size_t j = 0; j < bank.m; ++j) block[bank.m + j] += alt * phi_row[j] * v;
    }
  }
  return z;
}

// Orthonormal basis for the bank span. The plain bank is already
// orthonormal; sign-augmented banks go through two passes of modified
// Gram-Schmidt.
std::vector<Vector> span_basis(const FilterBank& bank) {
  std::vector<Vector> cols;
  for (std::size_t j = 0; j < bank.m; ++j) cols.push_back(bank.phis.col(j));
  if (!bank.sign_augmented) return cols;
  for (std::size_t j = 0; j < bank.m; ++j) {
    Vector v = bank.phis.col(j);
    for (std::size_t k = 1; k < v.size(); k += 2) v[k] = -v[k];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : cols) axpy(-dot(q, v), q, v);
    const double n = norm2(v);
    if (n < 1e-10) continue;
    for (double& x : v) x /= n;
    cols.push_back(std::move(v));
  }
  return cols;
}

}  // namespace

std::size_t reliable_filter_cap(std::size_t window) {
  return count_reliable(sym_eig(hilbert_matrix(window)).values);
}

FilterBank build_filter_bank(std::size_t window, std::size_t m, bool sign_augmented) {
  if (window == 0) throw ContractViolation("build_filter_bank: window must be >= 1");
  if (m == 0) throw ContractViolation("build_filter_bank: m must be >= 1");
  const SymEig eig = sym_eig(hilbert_matrix(window));
  const std::size_t cap = count_reliable(eig.values);
  if (m > cap) {
    std::ostringstream msg;
    msg << "filter count m=" << m << " exceeds reliable cap " << cap << " for window " << window
        << " (eigenvalues below " << kReliableEigenvalueFloor * eig.values.front() << " are not trusted)";
    throw InvariantViolation(msg.str());
  }
  FilterBank bank;
  bank.window = window;
  bank.m = m;
  bank.sign_augmented = sign_augmented;
  bank.reliable_cap = cap;
  bank.mus.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(m));
  bank.phis = Matrix(window, m);
  for (std::size_t k = 0; k < window; ++k)
    for (std::size_t j = 0; j < m; ++j) bank.phis(k, j) = eig.vectors(k, j);
  return bank;
}

std::size_t default_filter_count(std::size_t window, double epsilon) {
  if (!(epsilon > 0.0) || epsilon >= 1.0) throw ContractViolation("default_filter_count: epsilon must lie in (0, 1)");
  const double m = std::ceil(std::log(static_cast<double>(window)) * std::log(1.0 / epsilon));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

Vector features(const FilterBank& bank, std::span<const Vector> history, std::size_t obs_dim) {
  return features_impl(bank, history.size(), obs_dim, [&](std::size_t k) -> const Vector& { return history[k]; });
}

Vector features(const FilterBank& bank, const HistoryWindow& history, std::size_t obs_dim) {
  return features_impl(bank, history.size(), obs_dim,
                       [&](std::size_t k) -> const Vector& { return history.newest(k); });
}

Vector features(const FilterBank& bank, std::span<const double> history) {
  std::vector<Vector> wrapped;
  wrapped.reserve(history.size());
  for (double v : history) wrapped.push_back({v});
  return features(bank, wrapped, 1);
}

double residual_energy(const FilterBank& bank, double lambda) {
  if (!(std::abs(lambda) <= 1.0)) throw ContractViolation("residual_energy: |lambda| must be <= 1");
  Vector v(bank.window);
  double power = 1.0;
  for (double& x : v) {
    x = power;
    power *= lambda;
  }
  const double total = dot(v, v);
  Vector r = v;
  for (const auto& q : span_basis(bank)) axpy(-dot(q, v), q, r);
  return std::clamp(dot(r, r) / total, 0.0, 1.0);
}

void write_spectrum_csv(std::ostream& os, const FilterBank& bank) {
  os << "i,mu_i\n";
  for (std::size_t i = 0; i < bank.m; ++i) os << (i + 1) << ',' << format_double(bank.mus[i]) << '\n';
}

void write_filters_csv(std::ostream& os, const FilterBank& bank) {
  os << 'k';
  for (std::size_t j = 0; j < bank.m; ++j) os << ",phi_" << (j + 1);
  os << '\n';
  for (std::size_t k = 0; k < bank.window; ++k) {
    os << (k + 1);
    for (std::size_t j = 0; j < bank.m; ++j) os << ',' << format_double(bank.phis(k, j));
    os << '\n';
  }
}

}  // namespace dynolearn
