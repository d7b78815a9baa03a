#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "darap/mesh.hpp"

namespace darap {

namespace detail {

// "3", "3/1", "3//2", "3/1/2", possibly negative (relative). Texture and
// normal indices are discarded.
inline int parse_obj_index(const std::string& token, int n_vertices, int line_no) {
    const auto slash = token.find('/');
    const std::string head = (slash == std::string::npos) ? token : token.substr(0, slash);
    int idx = 0;
    try {
        size_t pos = 0;
        idx = std::stoi(head, &pos);
        if (pos != head.size()) throw std::invalid_argument(head);
    } catch (const std::exception&) {
        throw data_error("OBJ parse error at line " + std::to_string(line_no) +
                         ": bad face index '" + token + "'");
    }
    if (idx < 0) idx = n_vertices + idx;  // relative indexing
    else idx -= 1;                        // 1-based to 0-based
    if (idx < 0 || idx >= n_vertices)
        throw data_error("OBJ index out of range at line " + std::to_string(line_no) +
                         ": '" + token + "' with " + std::to_string(n_vertices) + " vertices so far");
    return idx;
}

}  // namespace detail

inline Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open OBJ file: " + path);

    std::vector<Vec3> verts;
    std::vector<Eigen::Vector3i> faces;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z))
                throw data_error("OBJ parse error at line " + std::to_string(line_no) +
                                 ": malformed vertex record");
            verts.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string token;
            while (ss >> token)
                poly.push_back(detail::parse_obj_index(token, static_cast<int>(verts.size()), line_no));
            if (poly.size() < 3)
                throw data_error("OBJ parse error at line " + std::to_string(line_no) +
                                 ": face with fewer than 3 vertices");
            // Fan triangulation from the first vertex, order preserving.
            for (size_t t = 1; t + 1 < poly.size(); ++t)
                faces.emplace_back(poly[0], poly[t], poly[t + 1]);
        }
        // Other records (vn, vt, o, g, usemtl, comments) are ignored.
    }
    if (verts.empty() || faces.empty())
        throw data_error("OBJ file has no geometry: " + path);

    Mesh mesh;
    mesh.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.V.row(static_cast<Eigen::Index>(i)) = verts[i];
    mesh.F.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i) mesh.F.row(static_cast<Eigen::Index>(i)) = faces[i];
    check_mesh_indices(mesh);
    return mesh;
}

inline void save_obj(const Mesh& mesh, const std::string& path) {
    check_mesh_indices(mesh);
    std::ofstream out(path);
    if (!out) throw data_error("cannot open file for writing: " + path);
    char buf[128];
    for (Eigen::Index i = 0; i < mesh.V.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", mesh.V(i, 0), mesh.V(i, 1), mesh.V(i, 2));
        out << buf;
    }
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f)
        out << "f " << mesh.F(f, 0) + 1 << ' ' << mesh.F(f, 1) + 1 << ' ' << mesh.F(f, 2) + 1 << '\n';
    if (!out) throw data_error("I/O failure writing OBJ: " + path);
}

}  // namespace darap
