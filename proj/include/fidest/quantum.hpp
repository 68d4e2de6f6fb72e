#pragma once

// Dense two-qubit primitives: kets, density matrices and Pauli decompositions.
//
// Basis ordering is |00>, |01>, |10>, |11> throughout. Polarisation labels map
// as H = 0, V = 1.

#include <array>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace fidest {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2cd;
using Vec4 = Eigen::Vector4cd;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr double kNormTol = 1e-12;
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;

/// Unit-norm two-qubit pure state.
class Ket4 {
 public:
  /// Throws std::invalid_argument if the norm deviates from 1 by more than kNormTol.
  static Ket4 from_amplitudes(const Vec4& amplitudes);
  /// Tensor product a ⊗ b of two unit single-qubit vectors.
  static Ket4 product(const Vec2& a, const Vec2& b);
  /// |b1 b2> for computational bits.
  static Ket4 basis(int b1, int b2);

  const Vec4& amplitudes() const { return amp_; }
  cplx operator[](std::size_t i) const { return amp_(static_cast<Eigen::Index>(i)); }

  /// |ψ><ψ|
  Mat4 projector() const { return amp_ * amp_.adjoint(); }
  cplx inner(const Ket4& other) const { return amp_.dot(other.amp_); }

 private:
  explicit Ket4(const Vec4& amp) : amp_(amp) {}
  Vec4 amp_;
};

/// Hermitian, trace-one, positive semidefinite 4x4 operator.
class DensityMatrix4 {
 public:
  /// Validates Hermiticity, unit trace and eigenvalues >= -kPsdTol. Eigenvalues
  /// in [-kPsdTol, 0) are clamped to zero and the trace renormalised.
  static DensityMatrix4 from_matrix(const Mat4& m);
  static DensityMatrix4 pure(const Ket4& psi);
  static DensityMatrix4 maximally_mixed();

  const Mat4& matrix() const { return m_; }
  cplx operator()(int r, int c) const { return m_(r, c); }

 private:
  explicit DensityMatrix4(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

enum class Pauli : int { I = 0, X = 1, Y = 2, Z = 3 };

inline constexpr std::array<Pauli, 4> kPaulis = {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};

char pauli_name(Pauli p);
Mat2 pauli_matrix(Pauli p);
/// Σ_r ⊗ Σ_s
Mat4 pauli_product(Pauli r, Pauli s);
/// Eigenvectors of a non-identity Pauli, +1 eigenvalue first. Z gives |0>, |1>.
std::array<Vec2, 2> pauli_eigenbasis(Pauli p);

/// Coefficients ρ_rs = tr(ρ Σ_r ⊗ Σ_s) of a two-qubit operator, indexed (r, s).
class PauliVector {
 public:
  PauliVector() { coeffs_.fill(0.0); }
  explicit PauliVector(const std::array<double, 16>& coeffs) : coeffs_(coeffs) {}

  double operator()(Pauli r, Pauli s) const { return coeffs_[index(r, s)]; }
  double& operator()(Pauli r, Pauli s) { return coeffs_[index(r, s)]; }
  const std::array<double, 16>& coeffs() const { return coeffs_; }

  /// (1/4) Σ coeffs[r,s] Σ_r ⊗ Σ_s
  Mat4 reconstruct() const;

  static constexpr std::size_t index(Pauli r, Pauli s) {
    return static_cast<std::size_t>(r) * 4 + static_cast<std::size_t>(s);
  }

 private:
  std::array<double, 16> coeffs_;
};

bool is_hermitian(const Mat4& m, double tol = kHermitianTol);

/// sinθ|00> + cosθ|11>, θ in [0, π/2].
Ket4 ket_target(double theta);

/// <ψ|ρ|ψ>, clamped to [0, 1].
double fidelity(const DensityMatrix4& rho, const Ket4& psi);

/// Throws std::invalid_argument for non-Hermitian input.
PauliVector pauli_coeffs(const Mat4& op);
PauliVector pauli_coeffs(const DensityMatrix4& rho);
PauliVector pauli_coeffs(const Ket4& psi);

/// Trace distance ½‖a − b‖₁ between two Hermitian operators.
double trace_distance(const Mat4& a, const Mat4& b);

}  // namespace fidest
