#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <array>
#include <cstdio>
#include <memory>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "darap/mesh.hpp"
#include "darap/validate.hpp"

namespace darap {

using SpMat = Eigen::SparseMatrix<double>;

struct SpokeRimEdge {
    int i, j;   // undirected endpoints, i < j
    double w;   // symmetrized cotangent weight
};

// Barycentric lumping: a_k = 1/3 of incident face areas. Always positive,
// robust to obtuse triangles. (A mixed-Voronoi variant is a reserved knob,
// not implemented.)
inline Eigen::VectorXd vertex_masses(const Mesh& mesh) {
    const Eigen::VectorXd areas = face_areas(mesh);
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.num_vertices());
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f)
        for (int s = 0; s < 3; ++s) mass[mesh.F(f, s)] += areas[f] / 3.0;
    return mass;
}

// Precomputed discrete operators for one source mesh. Immutable after build;
// the factorization may be shared across threads for concurrent solves.
class SurfaceOperators {
  public:
    int pinned_vertex = 0;
    SpMat laplacian;                                   // PSD cotangent Laplacian, |V| x |V|
    Eigen::VectorXd masses;                            // barycentric vertex masses a_k
    double total_mass = 0.0;
    std::vector<std::vector<SpokeRimEdge>> neighborhoods;  // spokes-and-rims edge sets N_k
    std::vector<std::vector<int>> incident_faces;          // N^F_k
    std::unordered_map<long long, double> edge_weights;    // key = i * |V| + j, i < j

    // Per-face, per-corner rhs vectors with the sign convention folded in so
    // that identity rotations satisfy L V = rhs exactly:
    //   s_c = w_cm/2 (v_c - v_m) + w_cn/2 (v_c - v_n)
    std::vector<std::array<Vec3, 3>> face_corner_rhs;

    SurfaceOperators() = default;
    SurfaceOperators(const SurfaceOperators&) = delete;
    SurfaceOperators& operator=(const SurfaceOperators&) = delete;

    double edge_weight(int i, int j) const {
        if (i > j) std::swap(i, j);
        const auto it = edge_weights.find(static_cast<long long>(i) * n_ + j);
        return it == edge_weights.end() ? 0.0 : it->second;
    }

    Eigen::Index num_vertices() const { return n_; }

    // Solves the pinned system L x = b per column with x[pinned] = 0. Rows of
    // b other than the pinned one are matched exactly.
    Eigen::MatrixXd solve_pinned(const Eigen::MatrixXd& rhs) const {
        Eigen::MatrixXd reduced(n_ - 1, rhs.cols());
        reduced.topRows(pinned_vertex) = rhs.topRows(pinned_vertex);
        reduced.bottomRows(n_ - 1 - pinned_vertex) = rhs.bottomRows(n_ - 1 - pinned_vertex);
        const Eigen::MatrixXd x = factorization_->solve(reduced);
        if (factorization_->info() != Eigen::Success)
            throw solver_error("pinned Laplacian solve failed");
        Eigen::MatrixXd full(n_, rhs.cols());
        full.topRows(pinned_vertex) = x.topRows(pinned_vertex);
        full.row(pinned_vertex).setZero();
        full.bottomRows(n_ - 1 - pinned_vertex) = x.bottomRows(n_ - 1 - pinned_vertex);
        return full;
    }

    Vec3 mass_centroid(const MatX3& positions) const {
        return (positions.transpose() * masses) / total_mass;
    }

    // Pinned solve followed by a rigid translation putting the mass-weighted
    // centroid at `centroid_target` (the system determines positions only up
    // to translation).
    MatX3 solve_centroid(const MatX3& rhs, const Vec3& centroid_target) const {
        MatX3 x = solve_pinned(rhs);
        const Vec3 t = centroid_target - mass_centroid(x);
        x.rowwise() += t.transpose();
        return x;
    }

    friend SurfaceOperators& build_operators_into(const Mesh&, int, SurfaceOperators&);

  private:
    Eigen::Index n_ = 0;
    std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> factorization_;
};

// pin < 0 means "first" (vertex 0).
inline SurfaceOperators& build_operators_into(const Mesh& mesh, int pin, SurfaceOperators& ops) {
    check_mesh_indices(mesh);
    const Eigen::Index n = mesh.num_vertices();
    ops.n_ = n;
    ops.pinned_vertex = pin < 0 ? 0 : pin;
    if (ops.pinned_vertex >= n) throw data_error("pin vertex index out of range");

    {
        const ValidationReport rep = validate(mesh);
        if (!rep.edge_manifold) throw data_error("build_operators: mesh has non-manifold edges");
    }

    ops.masses = vertex_masses(mesh);
    ops.total_mass = ops.masses.sum();

    // Symmetrized cotangent weights, assembled once per undirected edge.
    ops.edge_weights.clear();
    ops.edge_weights.reserve(static_cast<size_t>(mesh.num_faces()) * 2);
    auto key_of = [n](int i, int j) {
        if (i > j) std::swap(i, j);
        return static_cast<long long>(i) * n + j;
    };
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        for (int s = 0; s < 3; ++s) {
            const int opp = mesh.F(f, s);
            const int i = mesh.F(f, (s + 1) % 3), j = mesh.F(f, (s + 2) % 3);
            const Vec3 u = mesh.V.row(i) - mesh.V.row(opp);
            const Vec3 v = mesh.V.row(j) - mesh.V.row(opp);
            const double cross = u.cross(v).norm();
            if (cross <= 0)
                throw data_error("build_operators: zero-area face " + std::to_string(f));
            ops.edge_weights[key_of(i, j)] += 0.5 * u.dot(v) / cross;
        }
    }
    for (auto& [k, w] : ops.edge_weights) w = std::clamp(w, -1e4, 1e4);

    // Spokes-and-rims: every undirected edge of the faces incident to k,
    // listed once per vertex.
    ops.incident_faces.assign(static_cast<size_t>(n), {});
    std::vector<std::vector<long long>> nb_keys(static_cast<size_t>(n));
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        for (int s = 0; s < 3; ++s) {
            const int k = mesh.F(f, s);
            ops.incident_faces[static_cast<size_t>(k)].push_back(static_cast<int>(f));
            for (int e = 0; e < 3; ++e)
                nb_keys[static_cast<size_t>(k)].push_back(key_of(mesh.F(f, e), mesh.F(f, (e + 1) % 3)));
        }
    }
    ops.neighborhoods.assign(static_cast<size_t>(n), {});
    for (Eigen::Index k = 0; k < n; ++k) {
        auto& keys = nb_keys[static_cast<size_t>(k)];
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        for (long long key : keys)
            ops.neighborhoods[static_cast<size_t>(k)].push_back(
                {static_cast<int>(key / n), static_cast<int>(key % n), ops.edge_weights.at(key)});
    }

    // Laplacian: diag sum of weights, off-diagonal -w.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ops.edge_weights.size() * 4);
    for (const auto& [key, w] : ops.edge_weights) {
        const int i = static_cast<int>(key / n), j = static_cast<int>(key % n);
        trip.emplace_back(i, j, -w);
        trip.emplace_back(j, i, -w);
        trip.emplace_back(i, i, w);
        trip.emplace_back(j, j, w);
    }
    ops.laplacian.resize(n, n);
    ops.laplacian.setFromTriplets(trip.begin(), trip.end());

    // Reduced (pinned) system factorization, reused for all solves.
    {
        const int p = ops.pinned_vertex;
        std::vector<Eigen::Triplet<double>> rt;
        rt.reserve(trip.size());
        for (const auto& t : trip) {
            if (t.row() == p || t.col() == p) continue;
            rt.emplace_back(t.row() < p ? t.row() : t.row() - 1,
                            t.col() < p ? t.col() : t.col() - 1, t.value());
        }
        SpMat reduced(n - 1, n - 1);
        reduced.setFromTriplets(rt.begin(), rt.end());
        ops.factorization_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
        ops.factorization_->compute(reduced);
        if (ops.factorization_->info() != Eigen::Success)
            throw solver_error("Laplacian factorization failed; smallest pivot " +
                               std::to_string(ops.factorization_->vectorD().size()
                                                  ? ops.factorization_->vectorD().minCoeff()
                                                  : 0.0));
    }

    // Per-face corner rhs vectors (precomputation for assemble_rhs).
    ops.face_corner_rhs.resize(static_cast<size_t>(mesh.num_faces()));
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        for (int s = 0; s < 3; ++s) {
            const int c = mesh.F(f, s), m = mesh.F(f, (s + 1) % 3), nn = mesh.F(f, (s + 2) % 3);
            const Vec3 vc = mesh.V.row(c), vm = mesh.V.row(m), vn = mesh.V.row(nn);
            ops.face_corner_rhs[static_cast<size_t>(f)][static_cast<size_t>(s)] =
                0.5 * ops.edge_weight(c, m) * (vc - vm) + 0.5 * ops.edge_weight(c, nn) * (vc - vn);
        }
    }
    return ops;
}

inline std::unique_ptr<SurfaceOperators> build_operators(const Mesh& mesh, int pin = -1) {
    auto ops = std::make_unique<SurfaceOperators>();
    build_operators_into(mesh, pin, *ops);
    return ops;
}

inline std::vector<SpokeRimEdge> spokes_rims(const SurfaceOperators& ops, int k) {
    if (k < 0 || k >= static_cast<int>(ops.neighborhoods.size()))
        throw data_error("spokes_rims: vertex index out of range");
    return ops.neighborhoods[static_cast<size_t>(k)];
}

struct GradientOperators {
    SpMat gradient;             // (3|F|) x |V| piecewise-linear gradient
    Eigen::VectorXd face_mass;  // face areas (diagonal of the face mass matrix)
};

inline GradientOperators build_gradient_ops(const Mesh& mesh) {
    check_mesh_indices(mesh);
    GradientOperators g;
    g.face_mass = face_areas(mesh);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mesh.num_faces()) * 9);
    for (Eigen::Index f = 0; f < mesh.F.rows(); ++f) {
        if (g.face_mass[f] <= 0)
            throw data_error("build_gradient_ops: zero-area face " + std::to_string(f));
        const Vec3 a = mesh.V.row(mesh.F(f, 0)), b = mesh.V.row(mesh.F(f, 1)), c = mesh.V.row(mesh.F(f, 2));
        const Vec3 normal = (b - a).cross(c - a).normalized();
        for (int s = 0; s < 3; ++s) {
            // grad of the hat basis at corner s: rotate the opposite edge.
            const Vec3 opp_edge = mesh.V.row(mesh.F(f, (s + 2) % 3)) - mesh.V.row(mesh.F(f, (s + 1) % 3));
            const Vec3 grad = normal.cross(opp_edge) / (2.0 * g.face_mass[f]);
            for (int d = 0; d < 3; ++d) trip.emplace_back(3 * f + d, mesh.F(f, s), grad[d]);
        }
    }
    g.gradient.resize(3 * mesh.num_faces(), mesh.num_vertices());
    g.gradient.setFromTriplets(trip.begin(), trip.end());
    return g;
}

// Matrix Market coordinate dump of the Laplacian (debug aid).
inline void write_matrix_market(const SpMat& L, std::ostream& os) {
    os << "%%MatrixMarket matrix coordinate real symmetric\n";
    std::vector<std::array<double, 3>> entries;
    for (int k = 0; k < L.outerSize(); ++k)
        for (SpMat::InnerIterator it(L, k); it; ++it)
            if (it.row() >= it.col())
                entries.push_back({static_cast<double>(it.row()), static_cast<double>(it.col()), it.value()});
    os << L.rows() << ' ' << L.cols() << ' ' << entries.size() << '\n';
    char buf[96];
    for (const auto& e : entries) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", static_cast<int>(e[0]) + 1,
                      static_cast<int>(e[1]) + 1, e[2]);
        os << buf;
    }
}

}  // namespace darap
