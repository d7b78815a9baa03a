// darap: normal-driven ARAP deformation toolkit.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical/solver failure,
// 4 guidance-protocol failure.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "darap/darap.hpp"

namespace {

constexpr const char* kVersion = "darap 1.0.0";

struct DeformArgs {
    std::string mesh, normals, out, mask;
    double lambda = 8.0;
    bool no_restore_bbox = false;
};

struct StylizeArgs {
    std::string mesh, out, driver = "cubify";
    std::string external_cmd, target_mesh, field_sphere, field_dirs;
    std::string mask, save_normals, trace;
    double lambda = 8.0, lr = 0.002;
    int epochs = 2500, updates_per_epoch = 1;
    unsigned seed = 0;
    bool no_restore_bbox = false;
};

int run_deform(const DeformArgs& a) {
    const darap::Mesh mesh = darap::load_obj(a.mesh);
    const darap::MatX3 targets = darap::load_normals_csv(a.normals, mesh.num_vertices());
    auto ops = darap::build_operators(mesh);
    darap::DeformConfig config;
    config.lambda = a.lambda;
    config.restore_bbox = !a.no_restore_bbox;
    if (!a.mask.empty()) config.mask = darap::load_mask(a.mask, mesh.num_vertices());
    const darap::DeformResult result = darap::deform(mesh, *ops, targets, config);
    darap::save_obj(result.deformed, a.out);
    std::cerr << "deformed " << mesh.num_vertices() << " vertices (lambda=" << a.lambda << ")\n";
    return 0;
}

int run_stylize(const StylizeArgs& a) {
    const darap::Mesh mesh = darap::load_obj(a.mesh);
    auto ops = darap::build_operators(mesh);

    std::vector<std::shared_ptr<darap::GuidanceSource>> sources;
    if (a.driver == "cubify") {
        sources.push_back(std::make_shared<darap::NormalMatchSource>(
            darap::cubify_targets(mesh), ops->masses, mesh.F));
    } else if (a.driver == "field") {
        if (a.field_sphere.empty() || a.field_dirs.empty())
            throw darap::data_error("field driver needs --field-sphere and --field-dirs");
        darap::SphericalField table;
        table.sphere = darap::load_obj(a.field_sphere);
        table.face_dirs = darap::load_normals_csv(a.field_dirs, table.sphere.num_faces());
        sources.push_back(std::make_shared<darap::NormalMatchSource>(
            darap::field_targets(mesh, table), ops->masses, mesh.F));
    } else if (a.driver == "vertex-match") {
        if (a.target_mesh.empty()) throw darap::data_error("vertex-match driver needs --target-mesh");
        const darap::Mesh target = darap::load_obj(a.target_mesh);
        if (target.num_vertices() != mesh.num_vertices())
            throw darap::data_error("vertex-match target has different vertex count");
        sources.push_back(std::make_shared<darap::VertexMatchSource>(target.V));
    } else if (a.driver == "external") {
        if (a.external_cmd.empty()) throw darap::data_error("external driver needs --external-cmd");
        sources.push_back(std::make_shared<darap::ExternalGuidanceSource>(a.external_cmd));
    } else {
        throw darap::data_error("unknown driver: " + a.driver);
    }

    darap::OptimizeConfig config;
    config.lambda = a.lambda;
    config.learning_rate = a.lr;
    config.epochs = a.epochs;
    config.updates_per_epoch = a.updates_per_epoch;
    config.seed = a.seed;
    config.restore_bbox = !a.no_restore_bbox;
    if (!a.mask.empty()) config.mask = darap::load_mask(a.mask, mesh.num_vertices());

    const darap::OptimizeResult result = darap::optimize(mesh, *ops, sources, config);
    darap::save_obj(result.deformed, a.out);
    if (!a.save_normals.empty()) darap::save_normals_csv(result.targets, a.save_normals);
    if (!a.trace.empty()) {
        std::ofstream tf(a.trace);
        darap::write_trace_csv(result.trace, tf);
    }
    std::cerr << "stylized over " << a.epochs << " epochs (driver=" << a.driver << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normal-driven differentiable ARAP mesh deformation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "cap module-level parallelism");

    DeformArgs da;
    auto* deform_cmd = app.add_subcommand("deform", "apply dARAP once from a target-normals CSV");
    deform_cmd->add_option("--mesh", da.mesh, "source OBJ")->required();
    deform_cmd->add_option("--normals", da.normals, "target normals CSV")->required();
    deform_cmd->add_option("--lambda", da.lambda, "normal-term strength");
    deform_cmd->add_option("--out", da.out, "output OBJ")->required();
    deform_cmd->add_option("--mask", da.mask, "mask file (one 0/1 per vertex)");
    deform_cmd->add_flag("--no-restore-bbox", da.no_restore_bbox, "skip bbox-diagonal restore");

    StylizeArgs sa;
    auto* stylize_cmd = app.add_subcommand("stylize", "optimize target normals with a style driver");
    stylize_cmd->add_option("--mesh", sa.mesh, "source OBJ")->required();
    stylize_cmd->add_option("--out", sa.out, "output OBJ")->required();
    stylize_cmd->add_option("--driver", sa.driver, "cubify|field|vertex-match|external");
    stylize_cmd->add_option("--external-cmd", sa.external_cmd, "guidance subprocess command");
    stylize_cmd->add_option("--target-mesh", sa.target_mesh, "target OBJ for vertex-match");
    stylize_cmd->add_option("--field-sphere", sa.field_sphere, "spherical triangulation OBJ");
    stylize_cmd->add_option("--field-dirs", sa.field_dirs, "per-face unit directions CSV");
    stylize_cmd->add_option("--lambda", sa.lambda, "normal-term strength");
    stylize_cmd->add_option("--lr", sa.lr, "learning rate");
    stylize_cmd->add_option("--epochs", sa.epochs, "epoch count");
    stylize_cmd->add_option("--updates-per-epoch", sa.updates_per_epoch, "gradient updates per epoch");
    stylize_cmd->add_option("--seed", sa.seed, "random seed");
    stylize_cmd->add_option("--mask", sa.mask, "mask file");
    stylize_cmd->add_option("--save-normals", sa.save_normals, "write optimized normals CSV");
    stylize_cmd->add_option("--trace", sa.trace, "write per-epoch trace CSV");
    stylize_cmd->add_flag("--no-restore-bbox", sa.no_restore_bbox, "skip bbox-diagonal restore");

    std::string rt_mesh, rt_normals, rt_out;
    double rt_lambda = 8.0;
    bool rt_no_restore = false;
    auto* retarget_cmd = app.add_subcommand("retarget", "re-apply saved normals at a new lambda");
    retarget_cmd->add_option("--mesh", rt_mesh, "source OBJ")->required();
    retarget_cmd->add_option("--normals", rt_normals, "saved normals CSV")->required();
    retarget_cmd->add_option("--lambda", rt_lambda, "new lambda")->required();
    retarget_cmd->add_option("--out", rt_out, "output OBJ")->required();
    retarget_cmd->add_flag("--no-restore-bbox", rt_no_restore, "skip bbox-diagonal restore");

    std::string mx_source, mx_deformed, mx_csv;
    auto* metrics_cmd = app.add_subcommand("metrics", "quantitative evaluation");
    auto* ar_cmd = metrics_cmd->add_subcommand("area-ratio", "face area ratio statistics");
    ar_cmd->add_option("--source", mx_source, "source OBJ")->required();
    ar_cmd->add_option("--deformed", mx_deformed, "deformed OBJ")->required();
    ar_cmd->add_option("--csv", mx_csv, "write stats + histogram CSV");

    std::string bench_mesh, bench_csv;
    int bench_repeats = 10;
    unsigned bench_seed = 7;
    auto* bench_cmd = app.add_subcommand("bench", "solver timing harness");
    bench_cmd->add_option("--mesh", bench_mesh, "mesh OBJ")->required();
    bench_cmd->add_option("--repeats", bench_repeats, "timed repeats");
    bench_cmd->add_option("--seed", bench_seed, "random seed");
    bench_cmd->add_option("--csv", bench_csv, "write report CSV");

    std::string check_mesh, check_csv;
    auto* check_cmd = app.add_subcommand("check", "mesh validation report");
    check_cmd->add_option("--mesh", check_mesh, "mesh OBJ")->required();
    check_cmd->add_option("--csv", check_csv, "write issues CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*deform_cmd) return run_deform(da);
        if (*stylize_cmd) return run_stylize(sa);
        if (*retarget_cmd) {
            const darap::Mesh mesh = darap::load_obj(rt_mesh);
            const darap::MatX3 targets = darap::load_normals_csv(rt_normals, mesh.num_vertices());
            auto ops = darap::build_operators(mesh);
            darap::DeformConfig config;
            config.restore_bbox = !rt_no_restore;
            darap::save_obj(darap::retarget_lambda(mesh, *ops, targets, rt_lambda, config), rt_out);
            return 0;
        }
        if (*metrics_cmd) {
            if (!*ar_cmd) throw darap::data_error("metrics: expected the area-ratio subcommand");
            const darap::Mesh raw_source = darap::load_obj(mx_source);
            const darap::Mesh raw_deformed = darap::load_obj(mx_deformed);
            auto [source, xf] = darap::normalize_unit_cube(raw_source);
            darap::Mesh deformed = raw_deformed;
            deformed.V = (raw_deformed.V.rowwise() + xf.translation.transpose()) * xf.scale;
            deformed = darap::restore_bbox_diagonal(deformed, source);
            const darap::AreaRatioStats stats = darap::area_ratio_stats(source, deformed);
            std::printf("mean=%.6f std=%.6f\n", stats.mean, stats.std_dev);
            if (!mx_csv.empty()) {
                std::ofstream os(mx_csv);
                stats.write_csv(os);
            }
            return 0;
        }
        if (*bench_cmd) {
            const darap::Mesh mesh = darap::load_obj(bench_mesh);
            auto ops = darap::build_operators(mesh);
            const darap::GradientOperators grad_ops = darap::build_gradient_ops(mesh);
            const darap::BenchReport report =
                darap::bench_solves(mesh, *ops, grad_ops, bench_repeats, bench_mesh, bench_seed);
            report.write_csv(std::cout);
            std::cerr << "F/V ratio " << static_cast<double>(report.n_faces) / report.n_vertices
                      << " (checksum " << report.checksum << ")\n";
            return 0;
        }
        if (*check_cmd) {
            const darap::Mesh mesh = darap::load_obj(check_mesh);
            const darap::ValidationReport rep = darap::validate(mesh);
            std::cout << "edge_manifold: " << (rep.edge_manifold ? "true" : "false") << "\n"
                      << "orientation_consistent: " << (rep.orientation_consistent ? "true" : "false") << "\n"
                      << "boundary_edges: " << rep.boundary_edge_count << "\n"
                      << "boundary_loops: " << rep.boundary_loop_count << "\n"
                      << "components: " << rep.component_count << "\n"
                      << "max_aspect_ratio: " << rep.max_aspect_ratio << "\n"
                      << "issues: " << rep.issues.size() << "\n";
            for (const auto& i : rep.issues)
                std::cout << "  " << i.kind << " element=" << i.element << " value=" << i.value << "\n";
            if (!check_csv.empty()) {
                std::ofstream os(check_csv);
                rep.write_csv(os);
            }
            return 0;
        }
    } catch (const darap::protocol_error& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return 4;
    } catch (const darap::solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const darap::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
