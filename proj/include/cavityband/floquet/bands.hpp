#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cavityband/error.hpp"
#include "cavityband/floquet/model.hpp"
#include "cavityband/numerics/tridiag.hpp"

namespace cavityband::floquet {

/// Eigenstate of the truncated Floquet matrix. coeffs[j] is c_mu for
/// mu = mu_min + j.
struct DressedState {
  double k = 0.0;
  int band = 1;
  double energy = 0.0;
  int mu_min = 0;
  std::vector<double> coeffs;

  double coeff(int mu) const {
    const int row = mu - mu_min;
    if (row < 0 || row >= static_cast<int>(coeffs.size())) return 0.0;
    return coeffs[static_cast<std::size_t>(row)];
  }
};

/// Band energies E^nu(k_i); energies[i][b] is band b+1 at k_grid[i].
struct DispersionTable {
  std::vector<double> k_grid;
  std::vector<int> bands;
  std::vector<std::vector<double>> energies;
};

inline std::vector<DressedState> dressed_states(double k, const ModelParams& p,
                                                const TruncationSpec& t, int num_bands) {
  if (num_bands < 1 || num_bands > t.n_states)
    throw Error(Errc::InvalidArgument, "num_bands must be in [1, n_states]");
  const auto eig = numerics::eig_sym_tridiag(build_matrix(k, p, t));
  std::vector<DressedState> out;
  out.reserve(static_cast<std::size_t>(num_bands));
  for (int b = 0; b < num_bands; ++b) {
    const auto col = eig.vectors.column(static_cast<std::size_t>(b));
    out.push_back({k, b + 1, eig.values[static_cast<std::size_t>(b)], t.mu_min(),
                   std::vector<double>(col.begin(), col.end())});
  }
  return out;
}

/// Lowest num_bands energies at k.
inline std::vector<double> band_energies(double k, const ModelParams& p, const TruncationSpec& t,
                                         int num_bands) {
  if (num_bands < 1 || num_bands > t.n_states)
    throw Error(Errc::InvalidArgument, "num_bands must be in [1, n_states]");
  auto values = numerics::eigvals_sym_tridiag(build_matrix(k, p, t));
  values.resize(static_cast<std::size_t>(num_bands));
  return values;
}

inline double band_energy(double k, int band, const ModelParams& p, const TruncationSpec& t) {
  return band_energies(k, p, t, band).back();
}

inline DispersionTable dispersion(const ModelParams& p, const TruncationSpec& t,
                                  std::span<const double> k_grid, int num_bands) {
  DispersionTable table;
  table.k_grid.assign(k_grid.begin(), k_grid.end());
  for (int b = 1; b <= num_bands; ++b) table.bands.push_back(b);
  table.energies.reserve(k_grid.size());
  for (double k : k_grid) table.energies.push_back(band_energies(k, p, t, num_bands));
  return table;
}

/// E^{nu+1}(k*) - E^nu(k*).
inline double band_gap(const ModelParams& p, const TruncationSpec& t, double k_star,
                       int lower_band) {
  if (lower_band < 1) throw Error(Errc::InvalidArgument, "band index starts at 1");
  const auto e = band_energies(k_star, p, t, lower_band + 1);
  return e[static_cast<std::size_t>(lower_band)] - e[static_cast<std::size_t>(lower_band - 1)];
}

/// F^{nu,mu}(k) = |c_mu^nu(k)|^2.
inline double fidelity(int nu, int mu, double k, const ModelParams& p, const TruncationSpec& t) {
  if (!t.contains(mu)) throw Error(Errc::InvalidArgument, "mu outside the truncation window");
  const auto states = dressed_states(k, p, t, nu);
  const double c = states.back().coeff(mu);
  return c * c;
}

/// Band whose dressed state overlaps most with bare state mu; ties go to the
/// lower band.
inline int dominant_band(const ModelParams& p, const TruncationSpec& t, double k, int mu) {
  if (!t.contains(mu)) throw Error(Errc::InvalidArgument, "mu outside the truncation window");
  const auto eig = numerics::eig_sym_tridiag(build_matrix(k, p, t));
  const std::size_t row = static_cast<std::size_t>(t.row_of(mu));
  int best = 1;
  double best_f = -1.0;
  for (std::size_t b = 0; b < eig.values.size(); ++b) {
    const double c = eig.vectors(row, b);
    if (c * c > best_f) {
      best_f = c * c;
      best = static_cast<int>(b) + 1;
    }
  }
  return best;
}

}  // namespace cavityband::floquet
