#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "darap/mesh.hpp"

namespace darap {

struct ValidationIssue {
    std::string kind;  // non_manifold_edge | orientation | zero_area_face | needle_face | zero_normal_vertex
    long element;      // face, vertex, or packed edge endpoint index (see value)
    double value;      // secondary datum: other edge endpoint, area, or aspect ratio
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool edge_manifold = true;
    bool orientation_consistent = true;
    bool boundary_loops_ok = true;  // at most one boundary loop per connected component
    int boundary_edge_count = 0;
    int boundary_loop_count = 0;
    int component_count = 0;
    double max_aspect_ratio = 0.0;

    bool passes() const {
        return edge_manifold && orientation_consistent && boundary_loops_ok &&
               std::none_of(issues.begin(), issues.end(),
                            [](const ValidationIssue& i) { return i.kind == "zero_area_face"; });
    }

    void write_csv(std::ostream& os) const {
        os << "kind,element,value\n";
        for (const auto& i : issues) os << i.kind << ',' << i.element << ',' << i.value << '\n';
    }
};

// Report-only structural and quality checks: manifoldness, orientation,
// degenerate faces (area < 1e-12 x mean area), needle triangles, boundary
// loop structure, degenerate vertex normals.
inline ValidationReport validate(const Mesh& mesh) {
    ValidationReport rep;
    check_mesh_indices(mesh);
    const Eigen::VectorXd areas = face_areas(mesh);
    const double mean_area = areas.mean();

    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        if (areas[f] < 1e-12 * mean_area)
            rep.issues.push_back({"zero_area_face", f, areas[f]});
        // Aspect ratio: longest edge over its opposite height.
        const Vec3 a = mesh.V.row(mesh.F(f, 0)), b = mesh.V.row(mesh.F(f, 1)), c = mesh.V.row(mesh.F(f, 2));
        const double lmax = std::max({(b - a).norm(), (c - b).norm(), (a - c).norm()});
        if (areas[f] > 0) {
            const double aspect = lmax * lmax / (2.0 * areas[f]);
            rep.max_aspect_ratio = std::max(rep.max_aspect_ratio, aspect);
            if (aspect > 1e4) rep.issues.push_back({"needle_face", f, aspect});
        }
    }

    // Undirected edge -> (face count, directed (i->j) count with i<j).
    std::map<std::pair<int, int>, std::pair<int, int>> edges;
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        for (int s = 0; s < 3; ++s) {
            const int i = mesh.F(f, s), j = mesh.F(f, (s + 1) % 3);
            auto& e = edges[{std::min(i, j), std::max(i, j)}];
            e.first += 1;
            if (i < j) e.second += 1;
        }
    }
    for (const auto& [key, e] : edges) {
        if (e.first > 2) {
            rep.edge_manifold = false;
            rep.issues.push_back({"non_manifold_edge", key.first, static_cast<double>(key.second)});
        } else if (e.first == 2 && e.second != 1) {
            // Interior edge traversed twice in the same direction: the two
            // incident faces disagree on winding.
            rep.orientation_consistent = false;
            rep.issues.push_back({"orientation", key.first, static_cast<double>(key.second)});
        } else if (e.first == 1) {
            rep.boundary_edge_count += 1;
        }
    }

    // Connected components over vertices (via edges).
    const int n = static_cast<int>(mesh.num_vertices());
    std::vector<int> parent(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    auto find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& [key, e] : edges) {
        (void)e;
        const int a = find(key.first), b = find(static_cast<int>(key.second));
        if (a != b) parent[static_cast<size_t>(a)] = b;
    }
    std::vector<int> roots;
    for (int i = 0; i < n; ++i) roots.push_back(find(i));
    {
        auto sorted = roots;
        std::sort(sorted.begin(), sorted.end());
        rep.component_count = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    }

    // Boundary loops: walk boundary edges vertex-to-vertex. With a manifold
    // mesh each boundary vertex has exactly two boundary edges.
    std::map<int, std::vector<int>> boundary_adj;
    for (const auto& [key, e] : edges) {
        if (e.first == 1) {
            boundary_adj[key.first].push_back(key.second);
            boundary_adj[key.second].push_back(key.first);
        }
    }
    std::map<int, int> loops_per_component;
    {
        std::map<int, bool> visited;
        for (const auto& [v, adj] : boundary_adj) visited[v] = false;
        for (const auto& [start, adj] : boundary_adj) {
            if (visited[start] || adj.size() != 2) continue;
            int prev = -1, cur = start;
            while (!visited[cur]) {
                visited[cur] = true;
                const auto& nb = boundary_adj[cur];
                if (nb.size() != 2) break;
                const int nxt = (nb[0] == prev) ? nb[1] : nb[0];
                prev = cur;
                cur = nxt;
            }
            rep.boundary_loop_count += 1;
            loops_per_component[find(start)] += 1;
        }
    }
    for (const auto& [comp, cnt] : loops_per_component)
        if (cnt > 1) rep.boundary_loops_ok = false;

    std::vector<int> flagged;
    vertex_normals(mesh, &flagged);
    for (int v : flagged) rep.issues.push_back({"zero_normal_vertex", v, 0.0});

    return rep;
}

}  // namespace darap
