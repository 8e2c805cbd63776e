// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "uwmmse/model.hpp"
#include "uwmmse/numkit.hpp"

namespace uwmmse {

// Receiver convention: user i estimates x̂_i = conj(u_i)·y_i. Under this
// convention the closed-form gain u_i = h_iᴴv_i / (Σ_j|h_iᴴv_j|² + σ²)
// minimizes the MSE, the inner-cost gradient is −2α_i w_i u_i h_i + 2A v_i,
// and the exact beamformer is v_i = α_i w_i u_i (A + μI)⁻¹ h_i.

struct ReceiverState {
  std::vector<double> w;  // MMSE weights, each ≥ 1
  std::vector<cplx> u;    // receiver gains
};

/// w_i = (Σ_j|h_iᴴv_j|² + σ²) / (Σ_{j≠i}|h_iᴴv_j|² + σ²) = 1 + SINR_i.
std::vector<double> update_w(const Channel& h, const Beamformer& v, const SystemConfig& cfg);

/// u_i = h_iᴴv_i / (Σ_j|h_iᴴv_j|² + σ²).
std::vector<cplx> update_u(const Channel& h, const Beamformer& v, const SystemConfig& cfg);

/// A = Σ α_i w_i |u_i|² h_i h_iᴴ (M×M, Hermitian PSD).
CMatrix build_A(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                const SystemConfig& cfg);

/// B = Σ α_i² w_i² |u_i|² h_i h_iᴴ, the matrix whose rotation U ᴴB U gives Φ.
CMatrix build_B(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                const SystemConfig& cfg);

/// Σ_j Φ_jj / (λ_j + μ)², i.e. Tr(V Vᴴ) of the exact update at multiplier μ.
double power_at_multiplier(std::span<const double> eigvals, std::span<const double> phi_diag,
                           double mu);

/// diag(Uᴴ B U) for the eigenvectors of A.
std::vector<double> rotated_diagonal(const EigResult& eig, const CMatrix& b);

constexpr double kBisectionTolerance = 1e-4;

/// Lagrange multiplier of the power constraint. Returns 0 when the
/// unconstrained minimizer already fits in the budget (or B = 0); otherwise
/// bisects on [0, √(ΣΦ_jj / P)] until |power − P| ≤ tolerance.
double solve_mu(const EigResult& eig_a, const CMatrix& b, double max_power,
                double tolerance = kBisectionTolerance);
double solve_mu(const CMatrix& a, const CMatrix& b, double max_power,
                double tolerance = kBisectionTolerance);

struct ExactVUpdate {
  Beamformer v;
  double mu = 0.0;
};

/// Constrained minimizer of the inner cost over V for fixed (w, u).
ExactVUpdate solve_v_exact(const Channel& h, std::span<const double> w,
                           std::span<const cplx> u, const SystemConfig& cfg,
                           double bisection_tolerance = kBisectionTolerance);

Beamformer update_v_exact(const Channel& h, std::span<const double> w,
                          std::span<const cplx> u, const SystemConfig& cfg,
                          double bisection_tolerance = kBisectionTolerance);

/// e_i = E|conj(u_i) y_i − x_i|² in closed form.
double mse(const Channel& h, const Beamformer& v, cplx u_i, std::size_t i,
           const SystemConfig& cfg);

/// f(V) = Σ α_i (w_i e_i − log2 w_i).
double inner_cost(const Channel& h, std::span<const double> w, std::span<const cplx> u,
                  const Beamformer& v, const SystemConfig& cfg);

enum class StopReason { kMaxIterations, kWsrIncrementBelowTol };

/// Stop after max_iterations, or once an iteration improves the WSR by no more
/// than wsr_increment_tol, whichever comes first. At least one must be set.
struct StopRule {
  std::optional<std::size_t> max_iterations;
  std::optional<double> wsr_increment_tol;

  static StopRule truncated(std::size_t iterations) { return {iterations, std::nullopt}; }
  static StopRule converged(double tol = 1e-4) { return {std::nullopt, tol}; }
};

/// Iteration cap applied when a rule only specifies the WSR tolerance.
constexpr std::size_t kConvergenceIterationCap = 10000;

struct Iterate {
  ReceiverState state;
  Beamformer v;
  double wsr = 0.0;
};

struct Trajectory {
  Beamformer initial;
  double initial_wsr = 0.0;
  std::vector<Iterate> iterates;
  StopReason reason = StopReason::kMaxIterations;

  std::size_t iterations() const noexcept { return iterates.size(); }
  const Beamformer& final_beamformer() const {
    return iterates.empty() ? initial : iterates.back().v;
  }
  double final_wsr() const { return iterates.empty() ? initial_wsr : iterates.back().wsr; }
};

/// Classic WMMSE from the matched-filter start, updating w, u, V in turn.
/// The bisection tolerance bounds |Tr(VVᴴ) − P| of each exact V update; the
/// WSR sequence is only monotone up to the slack this tolerance introduces.
Trajectory run_wmmse(const Channel& h, const SystemConfig& cfg, const StopRule& stop,
                     double bisection_tolerance = kBisectionTolerance);

}  // namespace uwmmse
