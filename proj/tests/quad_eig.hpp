#pragma once

// Test-only 2-Wasserstein reference in 128-bit floats: cyclic Jacobi
// eigendecomposition of 3x3 symmetric matrices plus the trace formula.

#include <quadmath.h>

#include <Eigen/Dense>

namespace quad_oracle {

using quad = __float128;

struct QMat3 {
  quad m[3][3] = {};

  static QMat3 from(const Eigen::Matrix3d& in) {
    QMat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out.m[r][c] = in(r, c);
    return out;
  }

  QMat3 multiply(const QMat3& rhs) const {
    QMat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        quad sum = 0;
        for (int k = 0; k < 3; ++k) sum += m[r][k] * rhs.m[k][c];
        out.m[r][c] = sum;
      }
    return out;
  }

  QMat3 transpose() const {
    QMat3 out;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out.m[r][c] = m[c][r];
    return out;
  }

  quad trace() const { return m[0][0] + m[1][1] + m[2][2]; }
};

// Cyclic Jacobi for symmetric 3x3; returns eigenvalues and column eigenvectors.
inline void jacobi_eig3(QMat3 a, quad eigenvalues[3], QMat3& eigenvectors) {
  eigenvectors = QMat3{};
  for (int i = 0; i < 3; ++i) eigenvectors.m[i][i] = 1;

  for (int sweep = 0; sweep < 100; ++sweep) {
    quad off = fabsq(a.m[0][1]) + fabsq(a.m[0][2]) + fabsq(a.m[1][2]);
    if (off < 1e-36) break;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) {
        if (fabsq(a.m[p][q]) < 1e-40) continue;
        const quad theta = (a.m[q][q] - a.m[p][p]) / (2 * a.m[p][q]);
        quad t = 1 / (fabsq(theta) + sqrtq(theta * theta + 1));
        if (theta < 0) t = -t;
        const quad c = 1 / sqrtq(t * t + 1);
        const quad s = t * c;
        QMat3 rot;
        for (int i = 0; i < 3; ++i) rot.m[i][i] = 1;
        rot.m[p][p] = c;
        rot.m[q][q] = c;
        rot.m[p][q] = s;
        rot.m[q][p] = -s;
        a = rot.transpose().multiply(a).multiply(rot);
        eigenvectors = eigenvectors.multiply(rot);
      }
  }
  for (int i = 0; i < 3; ++i) eigenvalues[i] = a.m[i][i];
}

inline QMat3 psd_sqrt(const QMat3& a) {
  quad eigenvalues[3];
  QMat3 vectors;
  jacobi_eig3(a, eigenvalues, vectors);
  QMat3 root_diag;
  for (int i = 0; i < 3; ++i)
    root_diag.m[i][i] = eigenvalues[i] > 0 ? sqrtq(eigenvalues[i]) : 0;
  return vectors.multiply(root_diag).multiply(vectors.transpose());
}

inline double wasserstein2(const Eigen::Matrix3d& s1_in,
                           const Eigen::Matrix3d& s2_in) {
  const QMat3 s1 = QMat3::from(s1_in);
  const QMat3 s2 = QMat3::from(s2_in);
  const QMat3 root1 = psd_sqrt(s1);
  const QMat3 cross = psd_sqrt(root1.multiply(s2).multiply(root1));
  quad trace = s1.trace() + s2.trace() - 2 * cross.trace();
  if (trace < 0) trace = 0;
  return static_cast<double>(sqrtq(trace));
}

}  // namespace quad_oracle
