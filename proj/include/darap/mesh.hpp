#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <utility>
#include <vector>

#include "darap/errors.hpp"

namespace darap {

using MatX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using MatX3i = Eigen::Matrix<int, Eigen::Dynamic, 3>;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Triangle mesh: vertex positions and 0-based CCW faces. Immutable by
// convention after construction; all free functions below are pure.
struct Mesh {
    MatX3 V;
    MatX3i F;

    Eigen::Index num_vertices() const { return V.rows(); }
    Eigen::Index num_faces() const { return F.rows(); }
};

// Translate-then-scale: applied(v) = scale * (v + translation).
struct NormalizationTransform {
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& v) const { return scale * (v + translation); }
    Vec3 invert(const Vec3& v) const { return v / scale - translation; }
};

inline void check_mesh_indices(const Mesh& mesh) {
    const int n = static_cast<int>(mesh.num_vertices());
    if (mesh.num_vertices() < 3 || mesh.num_faces() < 1)
        throw data_error("mesh too small: need |V| >= 3 and |F| >= 1");
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const int i = mesh.F(f, 0), j = mesh.F(f, 1), k = mesh.F(f, 2);
        if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
            throw data_error("face " + std::to_string(f) + " has vertex index out of range");
        if (i == j || j == k || i == k)
            throw data_error("face " + std::to_string(f) + " repeats a vertex index");
    }
}

inline Eigen::VectorXd face_areas(const Mesh& mesh) {
    Eigen::VectorXd areas(mesh.num_faces());
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const Vec3 a = mesh.V.row(mesh.F(f, 0));
        const Vec3 b = mesh.V.row(mesh.F(f, 1));
        const Vec3 c = mesh.V.row(mesh.F(f, 2));
        areas[f] = 0.5 * (b - a).cross(c - a).norm();
    }
    return areas;
}

// Area-weighted unit vertex normals. The area-weighted sum of incident face
// normals is half the sum of the corner cross products, so no explicit
// area/normal split is needed. A vertex whose resultant vanishes falls back
// to the unit normal of its first incident face; `flagged`, when given,
// collects such vertices (validate() reports them too).
inline MatX3 vertex_normals(const Mesh& mesh, std::vector<int>* flagged = nullptr) {
    MatX3 accum = MatX3::Zero(mesh.num_vertices(), 3);
    std::vector<int> first_face(static_cast<size_t>(mesh.num_vertices()), -1);
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        const Vec3 a = mesh.V.row(mesh.F(f, 0));
        const Vec3 b = mesh.V.row(mesh.F(f, 1));
        const Vec3 c = mesh.V.row(mesh.F(f, 2));
        const Vec3 cr = 0.5 * (b - a).cross(c - a);
        for (int s = 0; s < 3; ++s) {
            const int v = mesh.F(f, s);
            accum.row(v) += cr;
            if (first_face[static_cast<size_t>(v)] < 0) first_face[static_cast<size_t>(v)] = static_cast<int>(f);
        }
    }
    MatX3 normals(mesh.num_vertices(), 3);
    for (Eigen::Index k = 0; k < mesh.num_vertices(); ++k) {
        const int ff = first_face[static_cast<size_t>(k)];
        if (ff < 0)
            throw data_error("vertex " + std::to_string(k) + " is isolated (no incident face)");
        const double n = accum.row(k).norm();
        if (n > 1e-12) {
            normals.row(k) = accum.row(k) / n;
        } else {
            const Vec3 a = mesh.V.row(mesh.F(ff, 0));
            const Vec3 b = mesh.V.row(mesh.F(ff, 1));
            const Vec3 c = mesh.V.row(mesh.F(ff, 2));
            normals.row(k) = (b - a).cross(c - a).normalized();
            if (flagged) flagged->push_back(static_cast<int>(k));
        }
    }
    return normals;
}

inline std::pair<Vec3, Vec3> bounding_box(const Mesh& mesh) {
    return {mesh.V.colwise().minCoeff().transpose(), mesh.V.colwise().maxCoeff().transpose()};
}

inline double bbox_diagonal(const Mesh& mesh) {
    auto [lo, hi] = bounding_box(mesh);
    return (hi - lo).norm();
}

// Uniformly rescale + center so the axis-aligned bounding box is centered at
// the origin with max side length exactly 2.
inline std::pair<Mesh, NormalizationTransform> normalize_unit_cube(const Mesh& mesh) {
    auto [lo, hi] = bounding_box(mesh);
    const double extent = (hi - lo).maxCoeff();
    if (!(extent > 0)) throw data_error("degenerate bounding box: max extent is zero");
    NormalizationTransform xf;
    xf.translation = -0.5 * (lo + hi);
    xf.scale = 2.0 / extent;
    Mesh out;
    out.F = mesh.F;
    out.V = (mesh.V.rowwise() + xf.translation.transpose()) * xf.scale;
    return {std::move(out), xf};
}

// Rescale `deformed` about its bbox center so its bbox diagonal length
// matches the source's. Connectivity is untouched.
inline Mesh restore_bbox_diagonal(const Mesh& deformed, const Mesh& source) {
    if (deformed.num_vertices() == 0 || source.num_vertices() == 0)
        throw data_error("restore_bbox_diagonal: empty mesh");
    auto [dlo, dhi] = bounding_box(deformed);
    const double ddiag = (dhi - dlo).norm();
    if (!(ddiag > 0)) throw data_error("restore_bbox_diagonal: deformed bbox diagonal is zero");
    const double sdiag = bbox_diagonal(source);
    const Vec3 center = 0.5 * (dlo + dhi);
    const double s = sdiag / ddiag;
    Mesh out;
    out.F = deformed.F;
    out.V = ((deformed.V.rowwise() - center.transpose()) * s).rowwise() + center.transpose();
    return out;
}

}  // namespace darap
