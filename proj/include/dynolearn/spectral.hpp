#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>

#include "dynolearn/numerics.hpp"
#include "dynolearn/online.hpp"

namespace dynolearn {

// Hilbert eigenvalues below kReliableEigenvalueFloor * mu_1 are not trusted in
// double precision (eigenvector error grows past ~1e-2); filter banks never
// use them.
inline constexpr double kReliableEigenvalueFloor = std::numeric_limits<double>::epsilon();

// (H)_{ij} = 1/(i+j-1) with 1-based indices.
Matrix hilbert_matrix(std::size_t window);

// Top eigenpairs of the Hilbert matrix, the fixed filters of spectral
// filtering. Column j of `phis` is filter j+1; `mus` is descending.
struct FilterBank {
  std::size_t window = 0;
  std::size_t m = 0;
  Matrix phis;  // window × m
  Vector mus;
  bool sign_augmented = false;
  std::size_t reliable_cap = 0;

  // Features per observation coordinate: m, or 2m when sign augmented.
  std::size_t filters_per_coord() const { return sign_augmented ? 2 * m : m; }
  std::size_t feature_dim(std::size_t obs_dim) const { return filters_per_coord() * obs_dim; }
};

// Number of Hilbert eigenvalues >= kReliableEigenvalueFloor * mu_1 for this window.
std::size_t reliable_filter_cap(std::size_t window);

// Throws InvariantViolation naming the cap when m exceeds it.
FilterBank build_filter_bank(std::size_t window, std::size_t m, bool sign_augmented = false);

// ⌈ln(window)·ln(1/ε)⌉, at least 1.
std::size_t default_filter_count(std::size_t window, double epsilon);

// Convolutional features of a newest-first history (missing entries are zero).
// Layout: coordinate-major blocks, each holding filters 1..m followed, when
// sign augmented, by their alternating-sign twins.
Vector features(const FilterBank& bank, std::span<const Vector> history, std::size_t obs_dim);
Vector features(const FilterBank& bank, const HistoryWindow& history, std::size_t obs_dim);
// Scalar-sequence convenience used by tests and diagnostics.
Vector features(const FilterBank& bank, std::span<const double> history);

// |v_λ - Π v_λ|² / |v_λ|² for v_λ = (1, λ, ..., λ^{T-1}), Π the orthogonal
// projection onto the span of the bank's filters.
double residual_energy(const FilterBank& bank, double lambda);

// `i,mu_i` rows and a `k,phi_1,...,phi_m` filter table.
void write_spectrum_csv(std::ostream& os, const FilterBank& bank);
void write_filters_csv(std::ostream& os, const FilterBank& bank);

}  // namespace dynolearn
