#pragma once

#include <Eigen/SVD>
#include <optional>
#include <vector>

#include "darap/operators.hpp"

namespace darap {

// The |V| x 3 optimization variable. Rows are unconstrained; they are
// normalized to unit length at point of use.
using TargetNormals = MatX3;

using RotationField = std::vector<Mat3>;

struct DeformConfig {
    double lambda = 8.0;
    // true = vertex is in the stylized region. Empty = all stylized.
    std::vector<char> mask;
    // Translation gauge for the global solve; defaults to the source mass centroid.
    std::optional<Vec3> centroid_target;
    bool restore_bbox = false;

    bool vertex_in_region(Eigen::Index k) const {
        return mask.empty() || mask[static_cast<size_t>(k)] != 0;
    }
};

// Forward-pass intermediates required by the backward pass. The SVD factors
// must be exactly those of the forward call.
struct LocalStepCache {
    struct PerVertex {
        Mat3 svd_u, svd_v;    // after det fix and column sign normalization
        Vec3 sigma;           // signed singular values (last may be negative)
        Vec3 source_normal;
        Vec3 unit_target;     // target after normalization
        double raw_norm = 0;  // norm of the raw target row
        double normal_weight = 0;  // lambda * a_k
        bool masked = false;       // identity imposed, zero gradient
    };
    std::vector<PerVertex> vertices;
};

namespace detail {

// Deterministic column sign normalization: make the largest-magnitude entry
// of each U column positive, flipping the paired V column to keep V U^T
// unchanged. Gives reproducible factors across runs/platforms.
inline void normalize_svd_signs(Mat3& u, Mat3& v) {
    for (int c = 0; c < 3; ++c) {
        int arg = 0;
        u.col(c).cwiseAbs().maxCoeff(&arg);
        if (u(arg, c) < 0) {
            u.col(c) = -u.col(c);
            v.col(c) = -v.col(c);
        }
    }
}

// Best-fit rotation R = V U^T from X = U S V^T, with the last column of U
// (and the sign of the last singular value) flipped when det(V U^T) < 0.
inline Mat3 procrustes_rotation(const Mat3& x, Mat3* out_u, Mat3* out_v, Vec3* out_sigma) {
    Eigen::JacobiSVD<Mat3> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU(), v = svd.matrixV();
    Vec3 sigma = svd.singularValues();
    if ((v * u.transpose()).determinant() < 0) {
        u.col(2) = -u.col(2);
        sigma[2] = -sigma[2];
    }
    normalize_svd_signs(u, v);
    if (out_u) *out_u = u;
    if (out_v) *out_v = v;
    if (out_sigma) *out_sigma = sigma;
    return v * u.transpose();
}

}  // namespace detail

// Per-vertex orthogonal Procrustes over the spokes-and-rims neighborhood:
//   X_k = sum_(i,j) w_ij e_ij e_ij^T + lambda a_k u_k uhat_k^T,
//   R_k = V_k U_k^T from the SVD of X_k.
// Vertices outside the mask receive the identity rotation.
inline RotationField local_step(const SurfaceOperators& ops, const Mesh& mesh,
                                const MatX3& source_normals, const TargetNormals& targets,
                                const DeformConfig& config, LocalStepCache* cache = nullptr) {
    const Eigen::Index n = ops.num_vertices();
    if (targets.rows() != n) throw data_error("local_step: target normal count != |V|");
    if (!targets.allFinite()) throw data_error("local_step: non-finite target normals");
    RotationField rotations(static_cast<size_t>(n));
    if (cache) cache->vertices.assign(static_cast<size_t>(n), {});

    for (Eigen::Index k = 0; k < n; ++k) {
        if (!config.vertex_in_region(k)) {
            rotations[static_cast<size_t>(k)] = Mat3::Identity();
            if (cache) cache->vertices[static_cast<size_t>(k)].masked = true;
            continue;
        }
        const double raw_norm = targets.row(k).norm();
        if (raw_norm <= 1e-12)
            throw data_error("local_step: zero-norm target normal at vertex " + std::to_string(k));
        const Vec3 uhat = targets.row(k) / raw_norm;
        const Vec3 u = source_normals.row(k);
        const double nw = config.lambda * ops.masses[k];

        Mat3 x = Mat3::Zero();
        for (const SpokeRimEdge& e : ops.neighborhoods[static_cast<size_t>(k)]) {
            const Vec3 edge = mesh.V.row(e.j) - mesh.V.row(e.i);
            x += e.w * edge * edge.transpose();
        }
        x += nw * u * uhat.transpose();

        auto* cv = cache ? &cache->vertices[static_cast<size_t>(k)] : nullptr;
        Mat3 su, sv;
        Vec3 sigma;
        rotations[static_cast<size_t>(k)] = detail::procrustes_rotation(x, &su, &sv, &sigma);
        if (cv) {
            cv->svd_u = su;
            cv->svd_v = sv;
            cv->sigma = sigma;
            cv->source_normal = u;
            cv->unit_target = uhat;
            cv->raw_norm = raw_norm;
            cv->normal_weight = nw;
        }
    }
    return rotations;
}

// Rotations from the continuous 3x2 representation via Gram-Schmidt.
inline RotationField local_step_direct(const std::vector<Eigen::Matrix<double, 3, 2>>& params) {
    RotationField rotations(params.size());
    for (size_t k = 0; k < params.size(); ++k) {
        const Vec3 a = params[k].col(0), b = params[k].col(1);
        if (a.norm() <= 1e-12)
            throw data_error("local_step_direct: first column near zero at vertex " + std::to_string(k));
        const Vec3 c1 = a.normalized();
        const Vec3 b_perp = b - c1.dot(b) * c1;
        if (b_perp.norm() <= 1e-12)
            throw data_error("local_step_direct: collinear columns at vertex " + std::to_string(k));
        const Vec3 c2 = b_perp.normalized();
        Mat3 r;
        r.col(0) = c1;
        r.col(1) = c2;
        r.col(2) = c1.cross(c2);
        rotations[k] = r;
    }
    return rotations;
}

// Right-hand side of the global Poisson system, per face (k,m,n) and corner c:
//   rhs(c) += (R_k + R_m + R_n)/3 * s_c
// with s_c precomputed on the source mesh so that identity rotations satisfy
// L V = rhs (sign convention pinned by the identity round-trip test).
inline MatX3 assemble_rhs(const SurfaceOperators& ops, const Mesh& mesh,
                          const RotationField& rotations) {
    const Eigen::Index n = ops.num_vertices();
    if (static_cast<Eigen::Index>(rotations.size()) != n)
        throw data_error("assemble_rhs: rotation count != |V|");
    MatX3 rhs = MatX3::Zero(n, 3);
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const Mat3 avg = (rotations[static_cast<size_t>(mesh.F(f, 0))] +
                          rotations[static_cast<size_t>(mesh.F(f, 1))] +
                          rotations[static_cast<size_t>(mesh.F(f, 2))]) /
                         3.0;
        const auto& s = ops.face_corner_rhs[static_cast<size_t>(f)];
        for (int c = 0; c < 3; ++c) rhs.row(mesh.F(f, c)) += (avg * s[static_cast<size_t>(c)]).transpose();
    }
    return rhs;
}

inline MatX3 global_step(const SurfaceOperators& ops, const MatX3& rhs, const Vec3& centroid_target) {
    if (!rhs.allFinite()) throw solver_error("global_step: non-finite right-hand side");
    return ops.solve_centroid(rhs, centroid_target);
}

struct DeformResult {
    Mesh deformed;
    RotationField rotations;
};

// One local step + one global step; optionally restore the source bbox
// diagonal afterwards.
inline DeformResult deform(const Mesh& mesh, const SurfaceOperators& ops,
                           const TargetNormals& targets, const DeformConfig& config,
                           LocalStepCache* cache = nullptr, MatX3* pre_restore = nullptr) {
    const MatX3 source_normals = vertex_normals(mesh);
    DeformResult out;
    out.rotations = local_step(ops, mesh, source_normals, targets, config, cache);
    const MatX3 rhs = assemble_rhs(ops, mesh, out.rotations);
    const Vec3 centroid = config.centroid_target ? *config.centroid_target : ops.mass_centroid(mesh.V);
    out.deformed.F = mesh.F;
    out.deformed.V = global_step(ops, rhs, centroid);
    if (pre_restore) *pre_restore = out.deformed.V;
    if (config.restore_bbox) out.deformed = restore_bbox_diagonal(out.deformed, mesh);
    return out;
}

// Re-apply saved target normals at a different strength, no re-optimization.
inline Mesh retarget_lambda(const Mesh& mesh, const SurfaceOperators& ops,
                            const TargetNormals& saved_targets, double new_lambda,
                            DeformConfig config = {}) {
    if (new_lambda < 0) throw data_error("retarget_lambda: lambda must be nonnegative");
    config.lambda = new_lambda;
    return deform(mesh, ops, saved_targets, config).deformed;
}

// Face-jacobian least-squares baseline: L Phi = grad^T A M, same pinning and
// centroid convention as global_step.
inline MatX3 njf_poisson(const Mesh& mesh, const GradientOperators& grad_ops,
                         const SurfaceOperators& ops, const std::vector<Mat3>& jacobians,
                         std::optional<Vec3> centroid_target = std::nullopt) {
    const Eigen::Index nf = mesh.num_faces();
    if (static_cast<Eigen::Index>(jacobians.size()) != nf)
        throw data_error("njf_poisson: jacobian count != |F|");
    Eigen::MatrixXd stacked(3 * nf, 3);
    for (Eigen::Index f = 0; f < nf; ++f)
        stacked.middleRows<3>(3 * f) =
            grad_ops.face_mass[f] * jacobians[static_cast<size_t>(f)].transpose();
    const MatX3 rhs = grad_ops.gradient.transpose() * stacked;
    const Vec3 centroid = centroid_target ? *centroid_target : ops.mass_centroid(mesh.V);
    return ops.solve_centroid(rhs, centroid);
}

}  // namespace darap
