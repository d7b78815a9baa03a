#pragma once

#include <functional>

#include "darap/deform.hpp"

namespace darap {

// Adjoint of the pinned global solve plus the centroid translation: given
// dLoss/dVhat, returns dLoss/d(rhs). The pinned Laplacian is symmetric, so
// the adjoint solve reuses the forward factorization.
inline MatX3 vjp_global(const SurfaceOperators& ops, const MatX3& upstream) {
    // Centroid translation V = x + (c_target - masscentroid(x)):
    // g_k = u_k - a_k/A * sum_j u_j, and the pinned row does not propagate.
    const Vec3 colsum = upstream.colwise().sum().transpose();
    MatX3 g = upstream - (ops.masses / ops.total_mass) * colsum.transpose();
    g.row(ops.pinned_vertex).setZero();
    MatX3 out = ops.solve_pinned(g);
    out.row(ops.pinned_vertex).setZero();
    return out;
}

namespace detail {

// Reverse-mode differential of R = V U^T through the cached SVD of X.
// With P = U^T dX V and skew Omega_ij = (P_ji - P_ij)/(sigma_i + sigma_j),
// dR = V Omega U^T; the sigma_i - sigma_j terms cancel in the rotation
// factor, leaving only sigma_i + sigma_j denominators, damped near zero.
inline Mat3 svd_rotation_vjp(const Mat3& u, const Mat3& v, const Vec3& sigma, const Mat3& dR) {
    const Mat3 q = v.transpose() * dR * u;
    const double eps = 1e-8 * sigma.cwiseAbs().maxCoeff();
    Mat3 z = Mat3::Zero();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const double d = sigma[i] + sigma[j];
            z(i, j) = (q(i, j) - q(j, i)) * d / (d * d + eps * eps);
        }
    }
    return -u * z * v.transpose();  // dLoss/dX
}

}  // namespace detail

// Procrustes VJP for one vertex: maps dLoss/dR_k to the dLoss/d(uhat_k)
// contribution through X_k's linear dependence on the unit target, then
// through the normalization uhat = t/|t| to the raw target row.
inline Vec3 vjp_procrustes(const LocalStepCache::PerVertex& cv, const Mat3& dR) {
    if (cv.masked) return Vec3::Zero();
    const Mat3 dX = detail::svd_rotation_vjp(cv.svd_u, cv.svd_v, cv.sigma, dR);
    // X += normal_weight * u uhat^T  =>  d(uhat) = normal_weight * dX^T u
    const Vec3 d_unit = cv.normal_weight * dX.transpose() * cv.source_normal;
    // Normalization adjoint: d(raw) = (I - uhat uhat^T)/|raw| d(unit).
    return (d_unit - cv.unit_target.dot(d_unit) * cv.unit_target) / cv.raw_norm;
}

// Adjoint of restore_bbox_diagonal with respect to the pre-restore vertices.
// The scale and center depend on the bbox-extreme vertices; ties take the
// first index (subgradient choice).
inline MatX3 vjp_restore_bbox(const MatX3& pre_restore, const Mesh& source, const MatX3& upstream) {
    const Vec3 lo = pre_restore.colwise().minCoeff().transpose();
    const Vec3 hi = pre_restore.colwise().maxCoeff().transpose();
    const double d = (hi - lo).norm();
    const double src_diag = bbox_diagonal(source);
    const double s = src_diag / d;
    const Vec3 center = 0.5 * (lo + hi);

    MatX3 g = s * upstream;
    const Vec3 usum = upstream.colwise().sum().transpose();
    double gs = 0.0;  // coefficient of ds
    for (Eigen::Index k = 0; k < pre_restore.rows(); ++k)
        gs += upstream.row(k).dot(pre_restore.row(k) - center.transpose());

    for (int a = 0; a < 3; ++a) {
        Eigen::Index imax = 0, imin = 0;
        pre_restore.col(a).maxCoeff(&imax);
        pre_restore.col(a).minCoeff(&imin);
        const double w_center = 0.5 * (1.0 - s) * usum[a];
        const double w_scale = gs * (-src_diag / (d * d)) * (hi[a] - lo[a]) / d;
        g(imax, a) += w_center + w_scale;
        g(imin, a) += w_center - w_scale;
    }
    return g;
}

// Full reverse chain of deform(): upstream on the deformed vertices ->
// gradient on the RAW target normal rows. Masked vertices get zero gradient.
inline MatX3 vjp_deform(const Mesh& mesh, const SurfaceOperators& ops, const DeformConfig& config,
                        const LocalStepCache& cache, const MatX3& pre_restore,
                        const MatX3& upstream) {
    if (cache.vertices.size() != static_cast<size_t>(ops.num_vertices()))
        throw data_error("vjp_deform: missing or mismatched forward cache");
    const MatX3 g_post = config.restore_bbox ? vjp_restore_bbox(pre_restore, mesh, upstream) : upstream;
    const MatX3 d_rhs = vjp_global(ops, g_post);

    // Eq-7 adjoint: rhs is linear in the rotations, distribute per face-corner.
    std::vector<Mat3> d_rot(static_cast<size_t>(ops.num_vertices()), Mat3::Zero());
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const auto& s = ops.face_corner_rhs[static_cast<size_t>(f)];
        Mat3 face_accum = Mat3::Zero();
        for (int c = 0; c < 3; ++c)
            face_accum += d_rhs.row(mesh.F(f, c)).transpose() * s[static_cast<size_t>(c)].transpose();
        face_accum /= 3.0;
        for (int c = 0; c < 3; ++c) d_rot[static_cast<size_t>(mesh.F(f, c))] += face_accum;
    }

    MatX3 d_targets = MatX3::Zero(ops.num_vertices(), 3);
    for (Eigen::Index k = 0; k < ops.num_vertices(); ++k)
        d_targets.row(k) =
            vjp_procrustes(cache.vertices[static_cast<size_t>(k)], d_rot[static_cast<size_t>(k)]).transpose();
    return d_targets;
}

// Central finite differences of loss(deformed vertices) w.r.t. every raw
// target component. Verification oracle; independent of the adjoint path.
inline MatX3 fd_gradient(const Mesh& mesh, const SurfaceOperators& ops, const TargetNormals& targets,
                         const DeformConfig& config,
                         const std::function<double(const MatX3&)>& loss, double h = 1e-4) {
    MatX3 grad(targets.rows(), 3);
    TargetNormals probe = targets;
    for (Eigen::Index k = 0; k < targets.rows(); ++k) {
        for (int c = 0; c < 3; ++c) {
            probe(k, c) = targets(k, c) + h;
            const double lp = loss(deform(mesh, ops, probe, config).deformed.V);
            probe(k, c) = targets(k, c) - h;
            const double lm = loss(deform(mesh, ops, probe, config).deformed.V);
            probe(k, c) = targets(k, c);
            grad(k, c) = (lp - lm) / (2.0 * h);
        }
    }
    return grad;
}

}  // namespace darap
