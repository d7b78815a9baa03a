#pragma once

#include <cmath>
#include <map>
#include <random>
#include <utility>

#include "darap/mesh.hpp"

namespace fixtures {

using darap::MatX3;
using darap::MatX3i;
using darap::Mesh;
using darap::Vec3;

inline Mesh tetrahedron() {
    Mesh m;
    m.V.resize(4, 3);
    m.V << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
    m.F.resize(4, 3);
    // outward CCW
    m.F << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3;
    return m;
}

inline Mesh cube() {
    Mesh m;
    m.V.resize(8, 3);
    m.V << -1, -1, -1, 1, -1, -1, 1, 1, -1, -1, 1, -1, -1, -1, 1, 1, -1, 1, 1, 1, 1, -1, 1, 1;
    m.F.resize(12, 3);
    m.F << 0, 2, 1, 0, 3, 2,  // z = -1
        4, 5, 6, 4, 6, 7,      // z = +1
        0, 1, 5, 0, 5, 4,      // y = -1
        2, 3, 7, 2, 7, 6,      // y = +1
        1, 2, 6, 1, 6, 5,      // x = +1
        3, 0, 4, 3, 4, 7;      // x = -1
    return m;
}

// Icosphere: subdivided icosahedron projected to the unit sphere.
// Vertex/face counts: level 0: 12/20, 1: 42/80, 2: 162/320, 3: 642/1280,
// 4: 2562/5120, 5: 10242/20480.
inline Mesh icosphere(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(verts.size());
            verts.push_back(((verts[static_cast<size_t>(a)] + verts[static_cast<size_t>(b)]) / 2.0).normalized());
            midpoint[key] = idx;
            return idx;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    Mesh m;
    m.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) m.V.row(static_cast<Eigen::Index>(i)) = verts[i];
    m.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i) m.F.row(static_cast<Eigen::Index>(i)) = faces[i];
    return m;
}

// Closed "organic" fixture: icosphere with a smooth radial bump field.
inline Mesh organic(int subdivisions = 5) {
    Mesh m = icosphere(subdivisions);
    for (Eigen::Index i = 0; i < m.V.rows(); ++i) {
        const Vec3 p = m.V.row(i);
        const double r = 1.0 + 0.18 * std::sin(3.0 * p.x()) * std::cos(2.0 * p.y()) +
                         0.12 * std::sin(4.0 * p.z() + 1.0);
        m.V.row(i) = (r * p).transpose();
    }
    return m;
}

// Open flat grid in the z=0 plane, n x n vertices.
inline Mesh flat_grid(int n, double spacing = 1.0) {
    Mesh m;
    m.V.resize(n * n, 3);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) m.V.row(j * n + i) << i * spacing, j * spacing, 0.0;
    m.F.resize(2 * (n - 1) * (n - 1), 3);
    Eigen::Index f = 0;
    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            const int a = j * n + i, b = j * n + i + 1, c = (j + 1) * n + i + 1, d = (j + 1) * n + i;
            m.F.row(f++) << a, b, c;
            m.F.row(f++) << a, c, d;
        }
    }
    return m;
}

// Two equilateral triangles (side 2) sharing an edge, folded flat.
inline Mesh equilateral_pair() {
    Mesh m;
    const double h = std::sqrt(3.0);
    m.V.resize(4, 3);
    m.V << -1, 0, 0, 1, 0, 0, 0, h, 0, 0, -h, 0;
    m.F.resize(2, 3);
    m.F << 0, 1, 2, 1, 0, 3;
    return m;
}

inline MatX3 random_unit_rows(Eigen::Index n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatX3 out(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        out.row(i) = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized().transpose();
    return out;
}

inline darap::Mat3 random_rotation(std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Vec3 axis = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
    std::uniform_real_distribution<double> uni(0.0, M_PI);
    return Eigen::AngleAxisd(uni(rng), axis).toRotationMatrix();
}

}  // namespace fixtures
