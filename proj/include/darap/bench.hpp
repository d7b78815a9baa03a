#pragma once

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "darap/deform.hpp"

namespace darap {

struct BenchStage {
    std::string name;
    double mean_s = 0.0, min_s = 0.0, std_s = 0.0;
};

struct BenchReport {
    std::string mesh_id;
    long n_vertices = 0, n_faces = 0;
    int repeats = 0;
    std::vector<BenchStage> stages;
    double checksum = 0.0;  // consumed so timed outputs cannot be elided

    void write_csv(std::ostream& os) const {
        os << "mesh,V,F,stage,mean_s,min_s,std_s,repeats\n";
        for (const auto& s : stages)
            os << mesh_id << ',' << n_vertices << ',' << n_faces << ',' << s.name << ',' << s.mean_s
               << ',' << s.min_s << ',' << s.std_s << ',' << repeats << '\n';
    }
};

namespace detail {

template <typename F>
BenchStage time_stage(const std::string& name, int repeats, F&& body) {
    using clock = std::chrono::steady_clock;
    body();  // warm-up, discarded
    std::vector<double> times;
    times.reserve(static_cast<size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = clock::now();
        body();
        const auto t1 = clock::now();
        times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    BenchStage stage{name, 0, times[0], 0};
    for (double t : times) {
        stage.mean_s += t;
        stage.min_s = std::min(stage.min_s, t);
    }
    stage.mean_s /= repeats;
    for (double t : times) stage.std_s += (t - stage.mean_s) * (t - stage.mean_s);
    stage.std_s = std::sqrt(stage.std_s / repeats);
    return stage;
}

}  // namespace detail

// Times (a) the local step with random targets, (b) rhs assembly + global
// solve, (c) the NJF Poisson solve with random jacobians, on prebuilt
// operators (precomputation excluded).
inline BenchReport bench_solves(const Mesh& mesh, const SurfaceOperators& ops,
                                const GradientOperators& grad_ops, int repeats,
                                const std::string& mesh_id = "mesh", unsigned seed = 7) {
    if (repeats < 3) throw data_error("bench_solves: repeats must be >= 3");
    BenchReport report;
    report.mesh_id = mesh_id;
    report.n_vertices = static_cast<long>(mesh.num_vertices());
    report.n_faces = static_cast<long>(mesh.num_faces());
    report.repeats = repeats;

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const MatX3 source_normals = vertex_normals(mesh);
    TargetNormals targets(mesh.num_vertices(), 3);
    for (Eigen::Index i = 0; i < targets.rows(); ++i)
        targets.row(i) = Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized().transpose();
    std::vector<Mat3> jacobians(static_cast<size_t>(mesh.num_faces()));
    for (auto& j : jacobians) {
        Mat3 m;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) = (r == c ? 1.0 : 0.0) + 0.1 * gauss(rng);
        j = m;
    }
    DeformConfig config;
    const Vec3 centroid = ops.mass_centroid(mesh.V);

    RotationField rotations = local_step(ops, mesh, source_normals, targets, config);
    double checksum = 0.0;

    report.stages.push_back(detail::time_stage("local_step", repeats, [&] {
        const RotationField r = local_step(ops, mesh, source_normals, targets, config);
        checksum += r[r.size() / 2](0, 0);
    }));
    report.stages.push_back(detail::time_stage("darap_global", repeats, [&] {
        const MatX3 rhs = assemble_rhs(ops, mesh, rotations);
        const MatX3 v = global_step(ops, rhs, centroid);
        checksum += v(v.rows() / 2, 0);
    }));
    report.stages.push_back(detail::time_stage("njf_poisson", repeats, [&] {
        const MatX3 v = njf_poisson(mesh, grad_ops, ops, jacobians, centroid);
        checksum += v(v.rows() / 2, 0);
    }));
    report.checksum = checksum;
    return report;
}

}  // namespace darap
