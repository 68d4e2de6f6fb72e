#include "fidest/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fidest {

Ket4 Ket4::from_amplitudes(const Vec4& amplitudes) {
  const double norm = amplitudes.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTol) {
    std::ostringstream msg;
    msg << "ket norm " << norm << " is not 1";
    throw std::invalid_argument(msg.str());
  }
  return Ket4(amplitudes);
}

Ket4 Ket4::product(const Vec2& a, const Vec2& b) {
  Vec4 v;
  v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
  return from_amplitudes(v);
}

Ket4 Ket4::basis(int b1, int b2) {
  if ((b1 != 0 && b1 != 1) || (b2 != 0 && b2 != 1)) {
    throw std::invalid_argument("basis bits must be 0 or 1");
  }
  Vec4 v = Vec4::Zero();
  v(2 * b1 + b2) = 1.0;
  return Ket4(v);
}

bool is_hermitian(const Mat4& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

DensityMatrix4 DensityMatrix4::from_matrix(const Mat4& m) {
  if (!m.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
  if (!is_hermitian(m)) throw std::invalid_argument("density matrix is not Hermitian");
  const cplx tr = m.trace();
  if (std::abs(tr.real() - 1.0) > kTraceTol || std::abs(tr.imag()) > kTraceTol) {
    std::ostringstream msg;
    msg << "density matrix trace " << tr.real() << " is not 1";
    throw std::invalid_argument(msg.str());
  }
  // Symmetrise so the eigensolver sees an exactly Hermitian matrix.
  const Mat4 h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4> es(h);
  Eigen::Vector4d lambda = es.eigenvalues();
  if (lambda.minCoeff() < -kPsdTol) {
    std::ostringstream msg;
    msg << "density matrix has eigenvalue " << lambda.minCoeff() << " < 0";
    throw std::invalid_argument(msg.str());
  }
  if (lambda.minCoeff() >= 0.0) return DensityMatrix4(h);
  lambda = lambda.cwiseMax(0.0);
  lambda /= lambda.sum();
  const Mat4& v = es.eigenvectors();
  return DensityMatrix4(v * lambda.cast<cplx>().asDiagonal() * v.adjoint());
}

DensityMatrix4 DensityMatrix4::pure(const Ket4& psi) { return DensityMatrix4(psi.projector()); }

DensityMatrix4 DensityMatrix4::maximally_mixed() { return DensityMatrix4(Mat4::Identity() * 0.25); }

char pauli_name(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

Mat2 pauli_matrix(Pauli p) {
  Mat2 m;
  switch (p) {
    case Pauli::I: m << 1, 0, 0, 1; break;
    case Pauli::X: m << 0, 1, 1, 0; break;
    case Pauli::Y: m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

Mat4 pauli_product(Pauli r, Pauli s) {
  const Mat2 a = pauli_matrix(r);
  const Mat2 b = pauli_matrix(s);
  Mat4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

std::array<Vec2, 2> pauli_eigenbasis(Pauli p) {
  const double h = std::numbers::sqrt2 / 2;
  Vec2 plus, minus;
  switch (p) {
    case Pauli::X:
      plus << h, h;
      minus << h, -h;
      break;
    case Pauli::Y:
      plus << h, cplx(0, h);
      minus << h, cplx(0, -h);
      break;
    case Pauli::Z:
      plus << 1, 0;
      minus << 0, 1;
      break;
    case Pauli::I: throw std::invalid_argument("identity has no eigenbasis of its own");
  }
  return {plus, minus};
}

Mat4 PauliVector::reconstruct() const {
  Mat4 out = Mat4::Zero();
  for (Pauli r : kPaulis)
    for (Pauli s : kPaulis) out += (*this)(r, s) * pauli_product(r, s);
  return 0.25 * out;
}

Ket4 ket_target(double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) {
    throw std::invalid_argument("theta must lie in [0, pi/2]");
  }
  Vec4 v;
  v << std::sin(theta), 0.0, 0.0, std::cos(theta);
  return Ket4::from_amplitudes(v);
}

double fidelity(const DensityMatrix4& rho, const Ket4& psi) {
  const cplx f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes());
  return std::clamp(f.real(), 0.0, 1.0);
}

PauliVector pauli_coeffs(const Mat4& op) {
  if (!is_hermitian(op)) throw std::invalid_argument("Pauli decomposition needs a Hermitian operator");
  PauliVector out;
  for (Pauli r : kPaulis)
    for (Pauli s : kPaulis) out(r, s) = (op * pauli_product(r, s)).trace().real();
  return out;
}

PauliVector pauli_coeffs(const DensityMatrix4& rho) { return pauli_coeffs(rho.matrix()); }

PauliVector pauli_coeffs(const Ket4& psi) { return pauli_coeffs(psi.projector()); }

double trace_distance(const Mat4& a, const Mat4& b) {
  const Mat4 d = a - b;
  Eigen::SelfAdjointEigenSolver<Mat4> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace fidest
